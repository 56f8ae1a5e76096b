// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvspan/experiment.hpp"
#include "uvspan/span.hpp"

namespace uvspan::metrics {

// CLI-configurable defaults.
inline constexpr double kDefaultOverheadThreshold = 0.5;
inline constexpr double kDefaultLeakAlpha = 1.0;
inline constexpr int kDefaultLeakWindow = 5;
inline constexpr Ns kDefaultMinStall = 100'000'000;       // 100 ms
inline constexpr double kDefaultInterferenceFactor = 10.0;
inline constexpr Ns kDefaultIpcTimeout = 1'000'000'000;   // 1 s

// Wall-clock execution time of one atomic operation.
inline Ns attl(const AtomicOp& op) { return op.end_ts - op.begin_ts; }

struct SpanTotals {
  Ns total_exec = 0;      // sum of op durations
  Ns latency = 0;         // total_exec + sum of gaps
  std::vector<Ns> gaps;   // inter-op waiting, clamped at zero
  int clamped = 0;        // how many gaps were negative before clamping
};

// Chain totals over ops in chain order: gap i = begin(op[i+1]) - end(op[i]).
SpanTotals span_totals(std::span<const AtomicOp> ops);

// True when the orchestration overhead dominates: sum(gaps)/max(T,1) > threshold.
bool overhead_flag(const VerticalSpan& span, double threshold);

struct GcSample {
  std::int32_t pid = 0;
  Ns begin_ts = 0;
  Ns end_ts = 0;
  std::string kind;
  Ns tigc = 0;                 // end - begin
  std::optional<Ns> tbgc;      // begin - previous end; empty for the first

  bool operator==(const GcSample&) const = default;
};

// Pairs gc_begin/gc_end per process into time-ordered samples.
// Throws UnpairedGcEvent.
std::vector<GcSample> gc_metrics(std::span<const TraceEvent> stream);

struct DetectionReport {
  enum class Kind {
    kElStall,
    kGcInterference,
    kLeakSuspicion,
    kOverheadExceeded,
    kIpcBlockage,
  };
  Kind kind = Kind::kElStall;
  Ns begin_ts = 0;
  Ns end_ts = 0;
  nlohmann::ordered_json subject;   // span / op / process identifiers
  nlohmann::ordered_json evidence;  // key measurements, recomputable
  std::string note;
};

std::string_view to_string(DetectionReport::Kind kind);
nlohmann::ordered_json report_to_json(const DetectionReport& report);

// Flags every run of `window` consecutive samples whose mean time-in-GC
// reaches alpha times the mean time-between-GC; adjacent qualifying windows
// coalesce into one report.
std::vector<DetectionReport> leak_suspicion(std::span<const GcSample> samples,
                                            double alpha, int window);

// Event-loop phase dwells at or above min_stall, with the spans overlapping
// each stall listed as root-cause candidates.
std::vector<DetectionReport> el_stall(const Experiment& experiment,
                                      std::span<const VerticalSpan> spans,
                                      Ns min_stall);

// Ops overlapping a GC pass whose duration reaches factor times the median
// of same-named ops.
std::vector<DetectionReport> gc_interference(
    std::span<const VerticalSpan> spans, std::span<const GcSample> samples,
    double factor);

struct IpcFlow {
  struct Edge {
    std::int32_t from_pid = 0;
    std::int32_t to_pid = 0;
    std::int64_t messages = 0;
    bool operator==(const Edge&) const = default;
  };
  std::vector<Edge> edges;
};

// Directed pid->pid message flow over pipe read/write syscalls (a channel is
// an fd used by more than one process), plus blockage reports for reads that
// wait longer than `timeout` with no counterpart write.
std::pair<IpcFlow, std::vector<DetectionReport>> ipc_flow(
    const Experiment& experiment, Ns timeout);

// Per-span overhead findings at the given threshold.
std::vector<DetectionReport> overhead_reports(
    std::span<const VerticalSpan> spans, double threshold);

}  // namespace uvspan::metrics
