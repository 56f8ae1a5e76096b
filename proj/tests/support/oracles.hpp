// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

// Independent brute-force oracles used by the tests. These deliberately do
// not share code with the implementation they check.

#pragma once

#include <algorithm>
#include <cstdint>
#include <tuple>
#include <vector>

#include "uvspan/sht.hpp"
#include "uvspan/trace_event.hpp"

namespace uvspan::testing {

// Flat modification log for checking StateHistoryTree point queries: the
// value at (quark, ts) is the value of the latest modification at or before
// ts, in log order, or null if none.
class StateModLog {
 public:
  void record(std::int32_t quark, Ns ts, StateValue value) {
    mods_.emplace_back(quark, ts, std::move(value));
  }

  StateValue value_at(std::int32_t quark, Ns ts) const {
    StateValue result;  // null
    for (const auto& [q, t, v] : mods_) {
      if (q == quark && t <= ts) result = v;
    }
    return result;
  }

  std::size_t size() const { return mods_.size(); }

 private:
  std::vector<std::tuple<std::int32_t, Ns, StateValue>> mods_;
};

// Merge oracle: concatenate in source order, apply offsets, stable-sort by
// timestamp.
inline std::vector<TraceEvent> merge_oracle(
    std::vector<std::vector<TraceEvent>> sources,
    const std::vector<Ns>& offsets) {
  std::vector<TraceEvent> all;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    for (TraceEvent& ev : sources[i]) {
      ev.ts += i < offsets.size() ? offsets[i] : 0;
      all.push_back(std::move(ev));
    }
  }
  std::stable_sort(all.begin(), all.end(),
                   [](const TraceEvent& a, const TraceEvent& b) {
                     return a.ts < b.ts;
                   });
  return all;
}

// Interval tiling check: for every quark the closed intervals must cover
// [origin, end] with no gaps and no overlaps.
inline bool tiles_exactly(const std::vector<StateInterval>& ivs, Ns origin,
                          Ns end) {
  if (ivs.empty()) return false;
  Ns cursor = origin;
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    if (ivs[i].start != cursor) return false;
    if (i + 1 < ivs.size()) {
      if (ivs[i].end <= ivs[i].start) return false;  // only terminal may be empty
      cursor = ivs[i].end;
    }
  }
  return ivs.back().end == end;
}

}  // namespace uvspan::testing
