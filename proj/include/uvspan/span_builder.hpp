// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "uvspan/context_tracker.hpp"
#include "uvspan/experiment.hpp"
#include "uvspan/sht.hpp"
#include "uvspan/span.hpp"

namespace uvspan {

// Output of the multi-layer correlation pass: one VerticalSpan per root
// function invocation, request timelines derived from the matched transition
// anchors, and everything that could not be matched.
struct Reconstruction {
  std::vector<VerticalSpan> spans;
  std::vector<RequestTimeline> timelines;  // parallel to spans
  std::vector<UnmatchedEvent> unmatched;
  int clamped_gaps = 0;  // negative inter-op gaps clamped to zero
};

// Correlates the merged multi-layer stream into vertical spans. The context
// tracker must already have consumed the stream; ops and request states are
// written into the tree under /op/... and /req/... as a side effect.
Reconstruction reconstruct_spans(const Experiment& experiment,
                                 StateHistoryTree& sht,
                                 const ContextTracker& tracker);

// ---- matching primitives (exposed for direct testing) ----

// Index of the latest vm-layer uv_send on the same tid preceding
// stream[libuv_idx], or nullopt when there is none.
std::optional<std::size_t> match_preceding_vm_send(
    std::span<const TraceEvent> stream, std::size_t libuv_idx);

struct Handoff {
  std::size_t async_file_idx = 0;
  std::size_t submit_idx = 0;
  std::size_t remove_idx = 0;
  std::int32_t exec_tid = 0;  // the remover's tid
  Ns queue_wait = 0;          // remove.ts - submit.ts
};

// Resolves the uv_async_file -> uv_submit -> uv_workerq_remove triple for
// op_id within a window of events; nullopt when the triple is incomplete.
std::optional<Handoff> resolve_threadpool_handoff(
    std::span<const TraceEvent> window, std::int64_t op_id);

// Pre-paired kernel syscalls, indexed per (pid, tid) in entry order.
class KernelIndex {
 public:
  explicit KernelIndex(std::span<const TraceEvent> stream);

  struct Record {
    std::string name;
    Ns entry_ts = 0;
    std::size_t entry_index = 0;  // position in the merged stream
    std::optional<Ns> exit_ts;
    std::int64_t ret = 0;
    bool consumed = false;
  };

  using ThreadMap =
      std::map<std::pair<std::int32_t, std::int32_t>, std::vector<Record>>;

  std::vector<Record>& records(std::int32_t pid, std::int32_t tid);
  const ThreadMap& threads() const { return per_thread_; }
  // Exit events that never matched an entry: (stream index, syscall name).
  const std::vector<std::pair<std::size_t, std::string>>& stray_exits() const {
    return stray_exits_;
  }

 private:
  ThreadMap per_thread_;
  std::vector<std::pair<std::size_t, std::string>> stray_exits_;
};

// Attaches every kernel syscall on op.tid within [op.begin_ts, op.end_ts]
// intersected with the BEC to the op, consuming the records. An entry
// without an exit inside bounds is closed at op.end_ts and flagged dangling.
// Returns the number of dangling entries.
int attach_kernel_syscalls(AtomicOp& op, const BoundedExecutionContext& bec,
                           KernelIndex& kernel);

// Full analysis pipeline over one experiment: context pass, span
// reconstruction, history closed at the trace end.
class Analysis {
 public:
  explicit Analysis(const Experiment& experiment);

  const StateHistoryTree& sht() const { return *sht_; }
  const ContextTracker& contexts() const { return *tracker_; }
  const Reconstruction& reconstruction() const { return recon_; }

 private:
  std::unique_ptr<StateHistoryTree> sht_;
  std::unique_ptr<ContextTracker> tracker_;
  Reconstruction recon_;
};

// Span-forest JSON used by the CLI and exporters.
nlohmann::ordered_json reconstruction_to_json(const Reconstruction& recon,
                                              const ContextTracker& tracker);

}  // namespace uvspan
