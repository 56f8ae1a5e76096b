// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uvspan/lifecycle.hpp"
#include "uvspan/trace_event.hpp"

namespace uvspan {

struct Syscall {
  std::string name;
  Ns entry_ts = 0;
  Ns exit_ts = 0;
  std::int64_t ret = 0;
  bool dangling = false;  // entry had no exit inside bounds; closed at op end

  bool operator==(const Syscall&) const = default;
};

// The smallest component of a high-level function that triggers system
// calls or executes directly in the runtime. begin/end bound the execution
// window; queueing ahead of it is reported separately as queue_wait.
struct AtomicOp {
  std::int64_t op_id = 0;
  std::string name;          // fs_open, fs_stat, fs_read, fs_close, socketRead, run
  Layer layer = Layer::kLibuv;
  PathKind path = PathKind::kRuntimeDirect;
  Ns begin_ts = 0;
  Ns end_ts = 0;
  std::int32_t tid = 0;      // executing thread
  std::int64_t exec_ctx = -1;
  Ns queue_wait = 0;         // uv_submit -> uv_workerq_remove, 0 off the pool
  std::vector<Syscall> syscalls;

  bool operator==(const AtomicOp&) const = default;
};

// The [entry, exit] window of one instrumented root function invocation;
// all pattern matching for the span is constrained to it.
struct BoundedExecutionContext {
  std::string root_name;
  std::int64_t root_ctx = 0;
  Ns entry_ts = 0;
  Ns exit_ts = 0;
  std::int32_t el_tid = 0;
  std::int32_t pid = 0;
  bool open_ended = false;  // exit marker missing; exit_ts is the trace end

  bool operator==(const BoundedExecutionContext&) const = default;
};

// One reconstructed request: the root function plus its atomic operations
// in chain order, with the total execution time (sum of op durations), the
// inter-op gaps, and the latency (total plus gaps).
struct VerticalSpan {
  BoundedExecutionContext bec;
  std::vector<AtomicOp> ops;
  Ns total_exec = 0;        // sum of op durations
  Ns latency = 0;           // total_exec + sum of gaps
  std::vector<Ns> gaps;     // gap i sits between ops[i] and ops[i+1]
};

struct UnmatchedEvent {
  std::size_t event_index = 0;
  Ns ts = 0;
  std::string name;
  std::string reason;
};

}  // namespace uvspan
