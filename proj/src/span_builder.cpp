// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/span_builder.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "uvspan/metrics.hpp"

namespace uvspan {

namespace {

constexpr std::size_t kNoBec = std::numeric_limits<std::size_t>::max();

using ThreadKey = std::pair<std::int32_t, std::int32_t>;  // (pid, tid)

struct PendingPool {
  std::size_t bec_idx = kNoBec;
  std::int64_t exec_ctx = -1;
  Ns async_ts = 0;
  std::int32_t el_tid = 0;
  std::optional<Ns> submit_ts;
  std::optional<Ns> remove_ts;
  std::int32_t remove_tid = 0;
  std::string task_name;
  std::optional<Ns> exec_begin;
};

struct PendingDelegated {
  std::size_t bec_idx = kNoBec;
  std::int64_t exec_ctx = -1;
  std::string task_name;
  Ns begin_ts = 0;
  std::int32_t tid = 0;
};

struct PendingRun {
  std::size_t bec_idx = kNoBec;
  std::int64_t exec_ctx = -1;
  Ns begin_ts = 0;
};

struct BecState {
  BoundedExecutionContext bec;
  std::vector<AtomicOp> ops;
  std::vector<StateEnter> states;
  bool closed = false;
};

}  // namespace

// ---- matching primitives ----

std::optional<std::size_t> match_preceding_vm_send(
    std::span<const TraceEvent> stream, std::size_t libuv_idx) {
  const TraceEvent& op_ev = stream[libuv_idx];
  for (std::size_t j = libuv_idx; j-- > 0;) {
    const TraceEvent& ev = stream[j];
    if (ev.pid == op_ev.pid && ev.tid == op_ev.tid &&
        ev.layer == Layer::kVm && ev.name == events::kUvSend) {
      return j;
    }
  }
  return std::nullopt;
}

std::optional<Handoff> resolve_threadpool_handoff(
    std::span<const TraceEvent> window, std::int64_t op_id) {
  Handoff h;
  bool have_async = false, have_submit = false, have_remove = false;
  for (std::size_t i = 0; i < window.size(); ++i) {
    const TraceEvent& ev = window[i];
    if (ev.layer != Layer::kLibuv) continue;
    if (ev.name != events::kUvAsyncFile && ev.name != events::kUvSubmit &&
        ev.name != events::kUvWorkerqRemove) {
      continue;
    }
    if (ev.arg_int("op_id") != op_id) continue;
    if (ev.name == events::kUvAsyncFile && !have_async) {
      h.async_file_idx = i;
      have_async = true;
    } else if (ev.name == events::kUvSubmit && have_async && !have_submit) {
      h.submit_idx = i;
      have_submit = true;
    } else if (ev.name == events::kUvWorkerqRemove && have_submit &&
               !have_remove) {
      h.remove_idx = i;
      h.exec_tid = ev.tid;
      have_remove = true;
    }
  }
  if (!have_async || !have_submit || !have_remove) return std::nullopt;
  h.queue_wait = window[h.remove_idx].ts - window[h.submit_idx].ts;
  return h;
}

// ---- kernel syscall pairing ----

KernelIndex::KernelIndex(std::span<const TraceEvent> stream) {
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const TraceEvent& ev = stream[i];
    if (ev.layer != Layer::kKernel) continue;
    auto& recs = per_thread_[{ev.pid, ev.tid}];
    if (is_syscall_entry(ev.name)) {
      Record r;
      r.name = std::string(syscall_name(ev.name));
      r.entry_ts = ev.ts;
      r.entry_index = i;
      recs.push_back(std::move(r));
    } else if (is_syscall_exit(ev.name)) {
      const std::string name(syscall_name(ev.name));
      bool paired = false;
      for (auto it = recs.rbegin(); it != recs.rend(); ++it) {
        if (!it->exit_ts.has_value() && it->name == name) {
          it->exit_ts = ev.ts;
          it->ret = ev.arg_int("ret");
          paired = true;
          break;
        }
      }
      if (!paired) stray_exits_.emplace_back(i, name);
    }
  }
}

std::vector<KernelIndex::Record>& KernelIndex::records(std::int32_t pid,
                                                       std::int32_t tid) {
  return per_thread_[{pid, tid}];
}

int attach_kernel_syscalls(AtomicOp& op, const BoundedExecutionContext& bec,
                           KernelIndex& kernel) {
  int dangling = 0;
  auto& recs = kernel.records(bec.pid, op.tid);
  const Ns lo = std::max(op.begin_ts, bec.entry_ts);
  const Ns hi = std::min(op.end_ts, bec.exit_ts);
  for (auto& rec : recs) {
    if (rec.entry_ts > hi) break;  // records are in entry order
    if (rec.consumed || rec.entry_ts < lo) continue;
    Syscall sc;
    sc.name = rec.name;
    sc.entry_ts = rec.entry_ts;
    if (rec.exit_ts.has_value() && *rec.exit_ts <= hi) {
      sc.exit_ts = *rec.exit_ts;
      sc.ret = rec.ret;
    } else {
      sc.exit_ts = op.end_ts;
      sc.dangling = true;
      ++dangling;
    }
    rec.consumed = true;
    op.syscalls.push_back(std::move(sc));
  }
  return dangling;
}

// ---- reconstruction sweep ----

namespace {

class Sweep {
 public:
  Sweep(const Experiment& experiment, StateHistoryTree& sht,
        const ContextTracker& tracker)
      : exp_(experiment), sht_(sht), tracker_(tracker), kernel_(exp_.events()) {}

  Reconstruction run() {
    const auto& events = exp_.events();
    for (std::size_t i = 0; i < events.size(); ++i) handle(i, events[i]);

    // Truncated root functions degrade to open-ended spans.
    for (std::size_t idx = 0; idx < becs_.size(); ++idx) {
      if (!becs_[idx].closed) {
        becs_[idx].bec.exit_ts = exp_.end_ts();
        becs_[idx].bec.open_ended = true;
        finalize_bec(idx);
      }
    }
    report_kernel_residue();

    for (BecState& st : becs_) {
      VerticalSpan span;
      span.bec = st.bec;
      span.ops = std::move(st.ops);
      const auto totals = metrics::span_totals(span.ops);
      span.total_exec = totals.total_exec;
      span.latency = totals.latency;
      span.gaps = totals.gaps;
      out_.clamped_gaps += totals.clamped;
      out_.spans.push_back(std::move(span));

      RequestTimeline timeline;
      timeline.request_id = st.bec.root_ctx;
      timeline.states = std::move(st.states);
      out_.timelines.push_back(std::move(timeline));
    }
    return std::move(out_);
  }

 private:
  void unmatched(std::size_t idx, const TraceEvent& ev, std::string reason) {
    out_.unmatched.push_back({idx, ev.ts, ev.name, std::move(reason)});
  }

  std::optional<std::size_t> bec_of_ctx(std::int64_t ctx_id, Ns ts) const {
    const ExecContext* root = tracker_.chain_root(ctx_id, ts);
    if (root == nullptr) return std::nullopt;
    auto it = open_by_root_.find(root->id);
    if (it == open_by_root_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::size_t> bec_by_window(std::int32_t pid,
                                           std::int32_t tid) const {
    for (std::size_t i = becs_.size(); i-- > 0;) {
      if (!becs_[i].closed && becs_[i].bec.pid == pid &&
          becs_[i].bec.el_tid == tid) {
        return i;
      }
    }
    return std::nullopt;
  }

  // Lineage first, thread-window fallback.
  std::optional<std::size_t> assign_bec(std::int64_t ctx_id,
                                        const TraceEvent& ev) {
    if (ctx_id >= 0) {
      if (auto idx = bec_of_ctx(ctx_id, ev.ts)) return idx;
    }
    return bec_by_window(ev.pid, ev.tid);
  }

  void push_state(std::size_t bec_idx, RequestState s, Ns ts) {
    auto& states = becs_[bec_idx].states;
    if (!states.empty() && ts < states.back().ts) ts = states.back().ts;
    states.push_back({s, ts});
  }

  void handle(std::size_t i, const TraceEvent& ev) {
    switch (ev.layer) {
      case Layer::kJs:
        if (ev.name == events::kUvSend) handle_js_send(i, ev);
        return;
      case Layer::kVm:
        handle_vm(i, ev);
        return;
      case Layer::kLibuv:
        handle_libuv(i, ev);
        return;
      case Layer::kKernel:
        return;  // consumed through the kernel index
    }
  }

  void handle_js_send(std::size_t i, const TraceEvent& ev) {
    const std::int64_t id = ev.arg_int("id");
    if (is_exit_method(ev.arg_str("method"))) {
      auto it = open_by_root_.find(id);
      if (it == open_by_root_.end()) {
        unmatched(i, ev, "exit marker without an open root function");
        return;
      }
      const std::size_t idx = it->second;
      becs_[idx].bec.exit_ts = ev.ts;
      push_state(idx, RequestState::kS0, ev.ts);
      becs_[idx].closed = true;
      open_by_root_.erase(it);
      finalize_bec(idx);
      return;
    }

    BecState st;
    st.bec.root_name = ev.arg_str("method");
    st.bec.root_ctx = id;
    st.bec.entry_ts = ev.ts;
    st.bec.el_tid = ev.tid;
    st.bec.pid = ev.pid;
    st.states.push_back({RequestState::kS0, ev.ts});
    st.states.push_back({RequestState::kS1, ev.ts});
    if (open_by_root_.count(id) != 0) {
      unmatched(i, ev, "root function reopened while still open");
    }
    becs_.push_back(std::move(st));
    open_by_root_[id] = becs_.size() - 1;
  }

  void handle_vm(std::size_t i, const TraceEvent& ev) {
    if (ev.name == events::kUvSend) {
      const std::int64_t id = ev.arg_int("id");
      last_vm_send_[{ev.pid, ev.tid}] = id;
      const ExecContext* ctx = tracker_.find_at(id, ev.ts);
      if (ctx != nullptr && ctx->open_ts < ev.ts) {
        activation_ts_[id] = ev.ts;  // re-send of an open resource
      }
      return;
    }
    if (ev.name == events::kRun) {
      const std::int64_t ctx = ev.arg_int("id");
      const auto bec = assign_bec(ctx, ev);
      if (!bec) {
        unmatched(i, ev, "run outside any open root window");
        return;
      }
      const ThreadKey key{ev.pid, ev.tid};
      if (pending_run_.count(key) != 0) {
        unmatched(i, ev, "run while a runtime op is still pending");
      }
      push_state(*bec, RequestState::kS3, ev.ts);
      pending_run_[key] = PendingRun{*bec, ctx, ev.ts};
      return;
    }
    // resolve: context closure already handled by the tracker; gc events
    // are process-level and not request-bound.
  }

  void handle_libuv(std::size_t i, const TraceEvent& ev) {
    const std::string_view name = ev.name;
    if (name == events::kElPhase) return;

    if (name == events::kUvDequeue) {
      const std::int64_t req = ev.arg_int("req_id");
      const auto bec = assign_bec(req, ev);
      if (!bec) {
        unmatched(i, ev, "uv_dequeue for an unknown request");
        return;
      }
      if (req != becs_[*bec].bec.root_ctx) {
        // Chain hop: re-queued when the pending result was handed to the
        // parent; the activation (or resource init) is the S1 entry.
        Ns s1 = ev.ts;
        if (auto it = activation_ts_.find(req); it != activation_ts_.end()) {
          s1 = it->second;
        } else if (const ExecContext* ctx = tracker_.find_at(req, ev.ts)) {
          s1 = ctx->open_ts;
        }
        push_state(*bec, RequestState::kS1, s1);
      }
      push_state(*bec, RequestState::kS2, ev.ts);
      return;
    }

    if (name == events::kUvAsyncFile) {
      const std::int64_t op_id = ev.arg_int("op_id");
      PendingPool p;
      p.async_ts = ev.ts;
      p.el_tid = ev.tid;
      auto send = last_vm_send_.find({ev.pid, ev.tid});
      if (send == last_vm_send_.end()) {
        unmatched(i, ev, "no preceding vm uv_send on this thread");
      } else {
        p.exec_ctx = send->second;
      }
      if (auto bec = assign_bec(p.exec_ctx, ev)) {
        p.bec_idx = *bec;
      } else {
        unmatched(i, ev, "file task outside any open root window");
      }
      pending_pool_[op_id] = p;
      return;
    }

    if (name == events::kUvSubmit) {
      auto it = pending_pool_.find(ev.arg_int("op_id"));
      if (it == pending_pool_.end()) {
        unmatched(i, ev, "uv_submit without a matching uv_async_file");
        return;
      }
      it->second.submit_ts = ev.ts;
      if (it->second.bec_idx != kNoBec) {
        push_state(it->second.bec_idx, RequestState::kS4, ev.ts);
      }
      return;
    }

    if (name == events::kUvWorkerqRemove) {
      auto it = pending_pool_.find(ev.arg_int("op_id"));
      if (it == pending_pool_.end() || !it->second.submit_ts.has_value()) {
        unmatched(i, ev, "uv_workerq_remove without a queued task");
        return;
      }
      it->second.remove_ts = ev.ts;
      it->second.remove_tid = ev.tid;
      if (it->second.bec_idx != kNoBec) {
        push_state(it->second.bec_idx, RequestState::kS5, ev.ts);
      }
      return;
    }

    if (is_fs_task_event(name)) {
      const std::int64_t op_id = ev.arg_int("op_id");
      const bool begin = ev.arg_str("phase") == "begin";
      if (auto it = pending_pool_.find(op_id); it != pending_pool_.end()) {
        if (begin) {
          it->second.task_name = std::string(fs_task_name(name));
          it->second.exec_begin = ev.ts;
          if (it->second.remove_ts.has_value() &&
              ev.tid != it->second.remove_tid) {
            unmatched(i, ev, "file task executing off the removing thread");
          }
        }
        return;
      }
      if (begin) {
        // No pool handoff: the task is delegated to the OS on this thread.
        PendingDelegated d;
        d.task_name = std::string(fs_task_name(name));
        d.begin_ts = ev.ts;
        d.tid = ev.tid;
        auto send = last_vm_send_.find({ev.pid, ev.tid});
        if (send == last_vm_send_.end()) {
          unmatched(i, ev, "no preceding vm uv_send on this thread");
        } else {
          d.exec_ctx = send->second;
        }
        if (auto bec = assign_bec(d.exec_ctx, ev)) {
          d.bec_idx = *bec;
          push_state(*bec, RequestState::kS6, ev.ts);
        } else {
          unmatched(i, ev, "delegated task outside any open root window");
        }
        pending_delegated_[op_id] = d;
      } else if (pending_delegated_.count(op_id) == 0) {
        unmatched(i, ev, "task end without a begin");
      }
      return;
    }

    if (name == events::kUvDone) {
      handle_done(i, ev);
      return;
    }
  }

  void handle_done(std::size_t i, const TraceEvent& ev) {
    const std::int64_t op_id = ev.arg_int("op_id");

    if (auto it = pending_pool_.find(op_id); it != pending_pool_.end()) {
      PendingPool& p = it->second;
      if (!p.submit_ts || !p.remove_ts || !p.exec_begin ||
          p.bec_idx == kNoBec) {
        unmatched(i, ev, "incomplete thread-pool handoff for op " +
                             std::to_string(op_id));
        pending_pool_.erase(it);
        return;
      }
      AtomicOp op;
      op.op_id = op_id;
      op.name = p.task_name;
      op.layer = Layer::kLibuv;
      op.path = PathKind::kThreadPool;
      op.begin_ts = *p.exec_begin;
      op.end_ts = ev.ts;
      op.tid = p.remove_tid;
      op.exec_ctx = p.exec_ctx;
      op.queue_wait = *p.remove_ts - *p.submit_ts;
      finish_op(p.bec_idx, std::move(op), ev.ts);
      pending_pool_.erase(it);
      return;
    }

    if (auto it = pending_delegated_.find(op_id);
        it != pending_delegated_.end()) {
      PendingDelegated& d = it->second;
      if (d.bec_idx == kNoBec) {
        pending_delegated_.erase(it);
        return;  // already reported at begin
      }
      AtomicOp op;
      op.op_id = op_id;
      op.name = d.task_name;
      op.layer = Layer::kKernel;
      op.path = PathKind::kOsDelegated;
      op.begin_ts = d.begin_ts;
      op.end_ts = ev.ts;
      op.tid = d.tid;
      op.exec_ctx = d.exec_ctx;
      finish_op(d.bec_idx, std::move(op), ev.ts);
      pending_delegated_.erase(it);
      return;
    }

    if (auto it = pending_run_.find({ev.pid, ev.tid});
        it != pending_run_.end()) {
      PendingRun& r = it->second;
      AtomicOp op;
      op.op_id = op_id;  // uv_done names the atomic operation
      op.name = "run";
      op.layer = Layer::kLibuv;
      op.path = PathKind::kRuntimeDirect;
      op.begin_ts = r.begin_ts;
      op.end_ts = ev.ts;
      op.tid = ev.tid;
      op.exec_ctx = r.exec_ctx;
      finish_op(r.bec_idx, std::move(op), ev.ts);
      pending_run_.erase(it);
      return;
    }

    unmatched(i, ev, "uv_done with no pending atomic op");
  }

  void finish_op(std::size_t bec_idx, AtomicOp op, Ns done_ts) {
    attach_kernel_syscalls(op, becs_[bec_idx].bec, kernel_);
    push_state(bec_idx, RequestState::kS7, done_ts);
    becs_[bec_idx].ops.push_back(std::move(op));
  }

  void finalize_bec(std::size_t idx) {
    BecState& st = becs_[idx];

    // Anything still pending inside this window is a truncation.
    for (auto it = pending_pool_.begin(); it != pending_pool_.end();) {
      if (it->second.bec_idx == idx) {
        out_.unmatched.push_back(
            {0, it->second.async_ts, "uv_async_file",
             "thread-pool handoff incomplete at span exit (op " +
                 std::to_string(it->first) + ")"});
        it = pending_pool_.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = pending_delegated_.begin();
         it != pending_delegated_.end();) {
      if (it->second.bec_idx == idx) {
        out_.unmatched.push_back({0, it->second.begin_ts, "uv_fs",
                                  "delegated task incomplete at span exit"});
        it = pending_delegated_.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = pending_run_.begin(); it != pending_run_.end();) {
      if (it->second.bec_idx == idx) {
        out_.unmatched.push_back({0, it->second.begin_ts, "run",
                                  "runtime op incomplete at span exit"});
        it = pending_run_.erase(it);
      } else {
        ++it;
      }
    }

    std::stable_sort(st.ops.begin(), st.ops.end(),
                     [](const AtomicOp& a, const AtomicOp& b) {
                       return a.begin_ts < b.begin_ts;
                     });

    // Mirror ops and request states into the history tree.
    for (const AtomicOp& op : st.ops) {
      const Quark q =
          sht_.quark_for_path("/op/" + std::to_string(op.op_id));
      sht_.modify_attribute(q, op.begin_ts, StateValue{op.name});
      sht_.modify_attribute(q, op.end_ts, StateValue{});
      for (std::size_t k = 0; k < op.syscalls.size(); ++k) {
        const Syscall& sc = op.syscalls[k];
        const Quark cq = sht_.get_or_create_quark(q, std::to_string(k));
        sht_.modify_attribute(cq, sc.entry_ts, StateValue{sc.name});
        sht_.modify_attribute(cq, sc.exit_ts, StateValue{});
      }
    }
    const Quark rq = sht_.quark_for_path(
        "/req/" + std::to_string(st.bec.root_ctx) + "/state");
    for (const StateEnter& e : st.states) {
      sht_.modify_attribute(rq, e.ts,
                            StateValue{std::string(to_string(e.state))});
    }
    if (st.closed) {
      sht_.modify_attribute(rq, st.bec.exit_ts, StateValue{});
    }
  }

  void report_kernel_residue() {
    std::set<ThreadKey> op_threads;
    std::map<std::int32_t, std::vector<std::pair<Ns, Ns>>> windows_by_pid;
    for (const BecState& st : becs_) {
      windows_by_pid[st.bec.pid].emplace_back(st.bec.entry_ts,
                                              st.bec.exit_ts);
      for (const AtomicOp& op : st.ops) {
        op_threads.insert({st.bec.pid, op.tid});
      }
    }
    for (auto& [key, recs] : kernel_.threads()) {
      if (op_threads.count(key) == 0) continue;
      const auto wit = windows_by_pid.find(key.first);
      if (wit == windows_by_pid.end()) continue;
      for (const auto& rec : recs) {
        if (rec.consumed) continue;
        for (const auto& [lo, hi] : wit->second) {
          if (rec.entry_ts >= lo && rec.entry_ts <= hi) {
            out_.unmatched.push_back(
                {rec.entry_index, rec.entry_ts, "syscall_entry_" + rec.name,
                 "kernel syscall not claimed by any atomic op"});
            break;
          }
        }
      }
    }
    for (const auto& [idx, name] : kernel_.stray_exits()) {
      out_.unmatched.push_back({idx, exp_.events()[idx].ts,
                                "syscall_exit_" + name,
                                "syscall exit without a matching entry"});
    }
  }

  const Experiment& exp_;
  StateHistoryTree& sht_;
  const ContextTracker& tracker_;
  KernelIndex kernel_;

  std::vector<BecState> becs_;
  std::map<std::int64_t, std::size_t> open_by_root_;
  std::map<ThreadKey, std::int64_t> last_vm_send_;
  std::map<std::int64_t, Ns> activation_ts_;
  std::map<std::int64_t, PendingPool> pending_pool_;
  std::map<std::int64_t, PendingDelegated> pending_delegated_;
  std::map<ThreadKey, PendingRun> pending_run_;

  Reconstruction out_;
};

}  // namespace

Reconstruction reconstruct_spans(const Experiment& experiment,
                                 StateHistoryTree& sht,
                                 const ContextTracker& tracker) {
  return Sweep(experiment, sht, tracker).run();
}

Analysis::Analysis(const Experiment& experiment)
    : sht_(std::make_unique<StateHistoryTree>(
          std::min<Ns>(0, experiment.origin_ts()))),
      tracker_(std::make_unique<ContextTracker>(*sht_)) {
  for (const TraceEvent& ev : experiment.events()) {
    tracker_->process_event(ev);
  }
  recon_ = reconstruct_spans(experiment, *sht_, *tracker_);
  sht_->close_history(experiment.end_ts());
}

nlohmann::ordered_json reconstruction_to_json(const Reconstruction& recon,
                                              const ContextTracker& tracker) {
  nlohmann::ordered_json doc;
  doc["span_count"] = recon.spans.size();
  nlohmann::ordered_json spans = nlohmann::ordered_json::array();
  for (std::size_t s = 0; s < recon.spans.size(); ++s) {
    const VerticalSpan& span = recon.spans[s];
    nlohmann::ordered_json j;
    j["root"] = span.bec.root_name;
    j["root_ctx"] = span.bec.root_ctx;
    j["pid"] = span.bec.pid;
    j["tid"] = span.bec.el_tid;
    j["entry"] = span.bec.entry_ts;
    j["exit"] = span.bec.exit_ts;
    j["open_ended"] = span.bec.open_ended;
    j["total_exec"] = span.total_exec;
    j["latency"] = span.latency;
    j["gaps"] = span.gaps;

    nlohmann::ordered_json ops = nlohmann::ordered_json::array();
    for (const AtomicOp& op : span.ops) {
      nlohmann::ordered_json o;
      o["op_id"] = op.op_id;
      o["name"] = op.name;
      o["layer"] = to_string(op.layer);
      o["path"] = to_string(op.path);
      o["begin"] = op.begin_ts;
      o["end"] = op.end_ts;
      o["tid"] = op.tid;
      o["exec_ctx"] = op.exec_ctx;
      o["queue_wait"] = op.queue_wait;
      nlohmann::ordered_json scs = nlohmann::ordered_json::array();
      for (const Syscall& sc : op.syscalls) {
        scs.push_back({{"name", sc.name},
                       {"entry", sc.entry_ts},
                       {"exit", sc.exit_ts},
                       {"ret", sc.ret},
                       {"dangling", sc.dangling}});
      }
      o["syscalls"] = std::move(scs);
      ops.push_back(std::move(o));
    }
    j["ops"] = std::move(ops);

    nlohmann::ordered_json states = nlohmann::ordered_json::array();
    if (s < recon.timelines.size()) {
      for (const StateEnter& e : recon.timelines[s].states) {
        states.push_back({{"state", to_string(e.state)}, {"ts", e.ts}});
      }
    }
    j["states"] = std::move(states);

    nlohmann::ordered_json ctxs = nlohmann::ordered_json::array();
    for (const ExecContext& ctx : tracker.contexts()) {
      const ExecContext* root = tracker.chain_root(ctx.id, ctx.open_ts);
      if (root == nullptr || root->id != span.bec.root_ctx) continue;
      if (ctx.open_ts < span.bec.entry_ts || ctx.open_ts > span.bec.exit_ts) {
        continue;
      }
      nlohmann::ordered_json c;
      c["id"] = ctx.id;
      c["trigger"] = ctx.trigger_id.has_value()
                         ? nlohmann::ordered_json(*ctx.trigger_id)
                         : nlohmann::ordered_json(nullptr);
      c["method"] = ctx.method;
      c["open"] = ctx.open_ts;
      c["close"] = ctx.close_ts.has_value()
                       ? nlohmann::ordered_json(*ctx.close_ts)
                       : nlohmann::ordered_json(nullptr);
      ctxs.push_back(std::move(c));
    }
    j["contexts"] = std::move(ctxs);
    spans.push_back(std::move(j));
  }
  doc["spans"] = std::move(spans);

  nlohmann::ordered_json un = nlohmann::ordered_json::array();
  for (const UnmatchedEvent& u : recon.unmatched) {
    un.push_back({{"index", u.event_index},
                  {"ts", u.ts},
                  {"name", u.name},
                  {"reason", u.reason}});
  }
  doc["unmatched"] = std::move(un);
  doc["clamped_gaps"] = recon.clamped_gaps;
  return doc;
}

}  // namespace uvspan
