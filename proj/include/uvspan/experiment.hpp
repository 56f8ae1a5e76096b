// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "uvspan/trace_event.hpp"

namespace uvspan {

struct SourceInfo {
  std::string label;  // file path or a synthetic name
  Ns offset = 0;      // added to every ts of this source before merging
  std::size_t event_count = 0;
};

// A merged, timestamp-ordered view over one or more trace sources
// (userspace and kernel). Immutable after opening and safely shareable
// by concurrent readers.
class Experiment {
 public:
  // Merge order: nondecreasing ts after offsets; ties broken by
  // (source index, position in file).
  static Experiment from_sources(std::vector<std::vector<TraceEvent>> sources,
                                 std::vector<Ns> offsets = {},
                                 std::vector<std::string> labels = {});

  const std::vector<TraceEvent>& events() const { return events_; }
  const std::vector<SourceInfo>& sources() const { return sources_; }
  std::size_t size() const { return events_.size(); }
  Ns origin_ts() const { return origin_ts_; }
  Ns end_ts() const { return end_ts_; }

  auto begin() const { return events_.begin(); }
  auto end() const { return events_.end(); }

 private:
  std::vector<TraceEvent> events_;
  std::vector<SourceInfo> sources_;
  Ns origin_ts_ = 0;
  Ns end_ts_ = 0;
};

// Loads newline-delimited JSON trace files and merges them. Offsets default
// to all-zero; when given, the length must match the number of paths.
// Throws FileUnreadable, EmptyTrace, InvalidParams and parse errors.
Experiment open_experiment(const std::vector<std::string>& paths,
                           std::vector<Ns> offsets = {},
                           ParseMode mode = ParseMode::kStrict);

// Reads one trace file into memory without merging.
std::vector<TraceEvent> read_trace_file(const std::string& path,
                                        ParseMode mode = ParseMode::kStrict);

}  // namespace uvspan
