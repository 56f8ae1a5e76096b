// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/experiment.hpp"

#include <algorithm>
#include <fstream>

namespace uvspan {

Experiment Experiment::from_sources(
    std::vector<std::vector<TraceEvent>> sources, std::vector<Ns> offsets,
    std::vector<std::string> labels) {
  if (offsets.empty()) offsets.assign(sources.size(), 0);
  if (offsets.size() != sources.size()) {
    throw InvalidParams("offsets length must match number of sources");
  }

  Experiment exp;
  std::size_t total = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    SourceInfo info;
    info.label = i < labels.size() ? labels[i] : "source" + std::to_string(i);
    info.offset = offsets[i];
    info.event_count = sources[i].size();
    total += sources[i].size();
    exp.sources_.push_back(std::move(info));
  }
  if (total == 0) throw EmptyTrace("no events across all sources");

  exp.events_.reserve(total);
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (TraceEvent& ev : sources[i]) {
      ev.ts += offsets[i];
      exp.events_.push_back(std::move(ev));
    }
  }
  // Concatenation order is (source index, file order); a stable sort on ts
  // alone therefore realizes the documented tie-break.
  std::stable_sort(
      exp.events_.begin(), exp.events_.end(),
      [](const TraceEvent& a, const TraceEvent& b) { return a.ts < b.ts; });

  exp.origin_ts_ = exp.events_.front().ts;
  exp.end_ts_ = exp.events_.back().ts;
  return exp;
}

std::vector<TraceEvent> read_trace_file(const std::string& path,
                                        ParseMode mode) {
  std::ifstream in(path);
  if (!in) throw FileUnreadable("cannot open trace file: " + path);
  std::vector<TraceEvent> events;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    events.push_back(parse_event_line(line, mode));
  }
  if (in.bad()) throw FileUnreadable("read error on trace file: " + path);
  return events;
}

Experiment open_experiment(const std::vector<std::string>& paths,
                           std::vector<Ns> offsets, ParseMode mode) {
  if (paths.empty()) throw InvalidParams("at least one trace path required");
  std::vector<std::vector<TraceEvent>> sources;
  sources.reserve(paths.size());
  for (const std::string& path : paths) {
    sources.push_back(read_trace_file(path, mode));
  }
  return Experiment::from_sources(std::move(sources), std::move(offsets),
                                  {paths.begin(), paths.end()});
}

}  // namespace uvspan
