// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "uvspan/trace_event.hpp"

namespace uvspan {

// Request states as seen by the runtime:
//   S0 interpreter, S1 queued, S2 dequeued/on the event loop,
//   S3 runtime-executing, S4 worker-queued, S5 worker-executing,
//   S6 os-delegated, S7 done.
enum class RequestState { kS0, kS1, kS2, kS3, kS4, kS5, kS6, kS7 };

std::string_view to_string(RequestState s);

// The three legal ways a request hop can cross the middle states.
enum class PathKind { kRuntimeDirect, kOsDelegated, kThreadPool };

std::string_view to_string(PathKind k);

struct StateEnter {
  RequestState state = RequestState::kS0;
  Ns ts = 0;
  bool operator==(const StateEnter&) const = default;
};

struct RequestTimeline {
  std::int64_t request_id = 0;
  std::vector<StateEnter> states;  // ordered (state, enter_ts) pairs
};

// One chain hop of a completed timeline together with the state sequence
// that witnessed it.
struct HopPath {
  PathKind kind = PathKind::kRuntimeDirect;
  std::vector<RequestState> witness;
  bool operator==(const HopPath&) const = default;
};

// Single-step transition function. Only instrumented transition events are
// legal inputs:
//   uv_send             S0->S1, S7->S1 (chain re-queue),
//                       S7->S0 when method is js_exit_<fn>
//   uv_dequeue          S1->S2
//   run                 S2->S3
//   uv_submit           S2->S4
//   uv_workerq_remove   S4->S5
//   uv_fs_*/uv_socketRead (phase=begin)  S2->S6
//   uv_done             S3->S7, S5->S7, S6->S7
// Throws IllegalTransition for every other (state, event) pair.
RequestState advance(RequestState current, const TraceEvent& event);

// Drives advance over a request's transition events, starting from S0 at
// the first event's timestamp.
RequestTimeline replay(std::int64_t request_id,
                       std::span<const TraceEvent> transition_events);

// Splits a complete timeline (ends at S0 via S7) into hops and classifies
// each into exactly one PathKind. Throws NoLegalPath.
std::vector<HopPath> classify_path(const RequestTimeline& timeline);

// Per-state dwell durations; the sum equals exit_ts - entry_ts.
std::map<RequestState, Ns> dwell_times(const RequestTimeline& timeline);

}  // namespace uvspan
