// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/metrics.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "uvspan/errors.hpp"

namespace uvspan::metrics {

namespace {

using nlohmann::ordered_json;

}  // namespace

SpanTotals span_totals(std::span<const AtomicOp> ops) {
  SpanTotals totals;
  for (const AtomicOp& op : ops) totals.total_exec += attl(op);
  for (std::size_t i = 0; i + 1 < ops.size(); ++i) {
    Ns gap = ops[i + 1].begin_ts - ops[i].end_ts;
    if (gap < 0) {
      // Chained ops may overlap when a successor is enqueued before the
      // predecessor's completion lands; count and clamp.
      gap = 0;
      ++totals.clamped;
    }
    totals.gaps.push_back(gap);
  }
  totals.latency = totals.total_exec;
  for (Ns g : totals.gaps) totals.latency += g;
  return totals;
}

bool overhead_flag(const VerticalSpan& span, double threshold) {
  if (threshold <= 0) throw InvalidParams("overhead threshold must be > 0");
  Ns gap_sum = 0;
  for (Ns g : span.gaps) gap_sum += g;
  const Ns base = std::max<Ns>(span.total_exec, 1);
  return static_cast<double>(gap_sum) / static_cast<double>(base) > threshold;
}

std::vector<GcSample> gc_metrics(std::span<const TraceEvent> stream) {
  struct Open {
    Ns begin = 0;
    std::string kind;
  };
  std::map<std::int32_t, Open> open;
  std::map<std::int32_t, std::vector<GcSample>> per_pid;

  for (const TraceEvent& ev : stream) {
    if (ev.layer != Layer::kVm) continue;
    if (ev.name == events::kGcBegin) {
      if (open.count(ev.pid) != 0) {
        throw UnpairedGcEvent("gc_begin while a pass is already open (pid " +
                              std::to_string(ev.pid) + ")");
      }
      open[ev.pid] = {ev.ts, ev.arg_str("kind")};
    } else if (ev.name == events::kGcEnd) {
      auto it = open.find(ev.pid);
      if (it == open.end()) {
        throw UnpairedGcEvent("gc_end without gc_begin (pid " +
                              std::to_string(ev.pid) + ")");
      }
      GcSample s;
      s.pid = ev.pid;
      s.begin_ts = it->second.begin;
      s.end_ts = ev.ts;
      s.kind = it->second.kind;
      s.tigc = s.end_ts - s.begin_ts;
      auto& samples = per_pid[ev.pid];
      if (!samples.empty()) s.tbgc = s.begin_ts - samples.back().end_ts;
      samples.push_back(std::move(s));
      open.erase(it);
    }
  }
  if (!open.empty()) {
    throw UnpairedGcEvent("gc_begin without gc_end (pid " +
                          std::to_string(open.begin()->first) + ")");
  }

  std::vector<GcSample> out;
  for (auto& [pid, samples] : per_pid) {
    out.insert(out.end(), samples.begin(), samples.end());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const GcSample& a, const GcSample& b) {
                     return a.begin_ts < b.begin_ts;
                   });
  return out;
}

std::string_view to_string(DetectionReport::Kind kind) {
  switch (kind) {
    case DetectionReport::Kind::kElStall:
      return "ElStall";
    case DetectionReport::Kind::kGcInterference:
      return "GcInterference";
    case DetectionReport::Kind::kLeakSuspicion:
      return "LeakSuspicion";
    case DetectionReport::Kind::kOverheadExceeded:
      return "OverheadExceeded";
    case DetectionReport::Kind::kIpcBlockage:
      return "IpcBlockage";
  }
  return "?";
}

ordered_json report_to_json(const DetectionReport& report) {
  ordered_json j;
  j["kind"] = to_string(report.kind);
  j["interval"] = {report.begin_ts, report.end_ts};
  j["subject"] = report.subject;
  j["evidence"] = report.evidence;
  j["note"] = report.note;
  return j;
}

std::vector<DetectionReport> leak_suspicion(std::span<const GcSample> samples,
                                            double alpha, int window) {
  if (alpha <= 0) throw InvalidParams("leak alpha must be > 0");
  if (window < 1) throw InvalidParams("leak window must be >= 1");

  // Group per pid, keeping only samples with a defined time-between value.
  std::map<std::int32_t, std::vector<const GcSample*>> per_pid;
  for (const GcSample& s : samples) {
    if (s.tbgc.has_value()) per_pid[s.pid].push_back(&s);
  }

  std::vector<DetectionReport> reports;
  for (const auto& [pid, seq] : per_pid) {
    const auto w = static_cast<std::size_t>(window);
    if (seq.size() < w) continue;

    // Qualifying window start indices, coalesced into maximal runs.
    std::optional<std::size_t> run_first;
    std::size_t run_last = 0;
    auto flush = [&]() {
      if (!run_first.has_value()) return;
      const std::size_t lo = *run_first;
      const std::size_t hi = run_last + w - 1;  // last sample of last window
      Ns tigc_sum = 0, tbgc_sum = 0;
      for (std::size_t i = lo; i <= hi; ++i) {
        tigc_sum += seq[i]->tigc;
        tbgc_sum += *seq[i]->tbgc;
      }
      DetectionReport r;
      r.kind = DetectionReport::Kind::kLeakSuspicion;
      r.begin_ts = seq[lo]->begin_ts;
      r.end_ts = seq[hi]->end_ts;
      r.subject = {{"pid", pid}};
      r.evidence = {{"samples", hi - lo + 1},
                    {"mean_tigc", tigc_sum / static_cast<Ns>(hi - lo + 1)},
                    {"mean_tbgc", tbgc_sum / static_cast<Ns>(hi - lo + 1)},
                    {"alpha", alpha},
                    {"window", window}};
      r.note = "time in GC balances time between GC passes";
      reports.push_back(std::move(r));
      run_first.reset();
    };

    for (std::size_t start = 0; start + w <= seq.size(); ++start) {
      Ns tigc_sum = 0, tbgc_sum = 0;
      for (std::size_t i = start; i < start + w; ++i) {
        tigc_sum += seq[i]->tigc;
        tbgc_sum += *seq[i]->tbgc;
      }
      const bool qualifies = static_cast<double>(tigc_sum) >=
                             alpha * static_cast<double>(tbgc_sum);
      if (qualifies) {
        if (!run_first.has_value()) run_first = start;
        run_last = start;
      } else {
        flush();
      }
    }
    flush();
  }
  return reports;
}

std::vector<DetectionReport> el_stall(const Experiment& experiment,
                                      std::span<const VerticalSpan> spans,
                                      Ns min_stall) {
  if (min_stall <= 0) throw InvalidParams("min_stall must be > 0");

  struct PhaseEnter {
    Ns ts;
    std::string phase;
  };
  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<PhaseEnter>>
      per_thread;
  for (const TraceEvent& ev : experiment.events()) {
    if (ev.layer == Layer::kLibuv && ev.name == events::kElPhase) {
      per_thread[{ev.pid, ev.tid}].push_back({ev.ts, ev.arg_str("phase")});
    }
  }

  std::vector<DetectionReport> reports;
  for (const auto& [key, enters] : per_thread) {
    for (std::size_t i = 0; i < enters.size(); ++i) {
      const Ns until = i + 1 < enters.size() ? enters[i + 1].ts
                                             : experiment.end_ts();
      const Ns dwell = until - enters[i].ts;
      if (dwell < min_stall) continue;

      DetectionReport r;
      r.kind = DetectionReport::Kind::kElStall;
      r.begin_ts = enters[i].ts;
      r.end_ts = until;
      r.subject = {{"pid", key.first},
                   {"tid", key.second},
                   {"phase", enters[i].phase}};
      ordered_json overlapping = ordered_json::array();
      for (const VerticalSpan& span : spans) {
        if (span.bec.pid != key.first) continue;
        if (span.bec.entry_ts < until && enters[i].ts < span.bec.exit_ts) {
          overlapping.push_back(
              {{"root", span.bec.root_name},
               {"root_ctx", span.bec.root_ctx},
               {"entry", span.bec.entry_ts},
               {"exit", span.bec.exit_ts},
               {"wall", span.bec.exit_ts - span.bec.entry_ts},
               {"latency", span.latency}});
        }
      }
      r.evidence = {{"duration", dwell}, {"overlapping_spans", overlapping}};
      r.note = "event loop halted in the " + enters[i].phase + " phase";
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<DetectionReport> gc_interference(
    std::span<const VerticalSpan> spans, std::span<const GcSample> samples,
    double factor) {
  if (factor <= 1) throw InvalidParams("interference factor must be > 1");

  // Median duration per op name; the median (not the mean) keeps the
  // baseline robust against the outliers being detected.
  std::map<std::string, std::vector<Ns>> durations;
  for (const VerticalSpan& span : spans) {
    for (const AtomicOp& op : span.ops) durations[op.name].push_back(attl(op));
  }
  std::map<std::string, Ns> median;
  for (auto& [name, values] : durations) {
    std::sort(values.begin(), values.end());
    median[name] = values[(values.size() - 1) / 2];
  }

  std::vector<DetectionReport> reports;
  for (const VerticalSpan& span : spans) {
    for (const AtomicOp& op : span.ops) {
      const GcSample* hit = nullptr;
      for (const GcSample& s : samples) {
        if (s.pid != span.bec.pid) continue;
        if (s.begin_ts <= op.end_ts && op.begin_ts <= s.end_ts) {
          hit = &s;
          break;
        }
      }
      if (hit == nullptr) continue;
      const Ns base = median[op.name];
      if (static_cast<double>(attl(op)) <
          factor * static_cast<double>(base)) {
        continue;
      }
      DetectionReport r;
      r.kind = DetectionReport::Kind::kGcInterference;
      r.begin_ts = op.begin_ts;
      r.end_ts = op.end_ts;
      r.subject = {{"op_id", op.op_id},
                   {"op", op.name},
                   {"root", span.bec.root_name},
                   {"pid", span.bec.pid}};
      r.evidence = {{"attl", attl(op)},
                    {"median_attl", base},
                    {"factor", factor},
                    {"gc_kind", hit->kind},
                    {"gc_interval", {hit->begin_ts, hit->end_ts}}};
      r.note = "atomic op latency inflated while a GC pass overlapped";
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::pair<IpcFlow, std::vector<DetectionReport>> ipc_flow(
    const Experiment& experiment, Ns timeout) {
  if (timeout <= 0) throw InvalidParams("ipc timeout must be > 0");

  struct Access {
    std::int32_t pid;
    Ns entry_ts;
    std::optional<Ns> exit_ts;
    std::int64_t ret = 0;
  };
  // fd -> accesses, in stream order.
  std::map<std::int64_t, std::vector<Access>> reads, writes;
  std::map<std::int64_t, std::set<std::int32_t>> users;

  struct OpenAccess {
    std::int64_t fd;
    std::size_t index;
  };
  std::map<std::pair<std::int32_t, std::int32_t>, OpenAccess> open_read,
      open_write;

  for (const TraceEvent& ev : experiment.events()) {
    if (ev.layer != Layer::kKernel) continue;
    const std::string_view sc = syscall_name(ev.name);
    if (sc != "read" && sc != "write") continue;
    auto& table = sc == "read" ? reads : writes;
    auto& open = sc == "read" ? open_read : open_write;
    const std::pair<std::int32_t, std::int32_t> key{ev.pid, ev.tid};

    if (is_syscall_entry(ev.name)) {
      const auto fd = ev.arg_int_opt("fd");
      if (!fd.has_value()) continue;
      users[*fd].insert(ev.pid);
      table[*fd].push_back({ev.pid, ev.ts, std::nullopt, 0});
      open[key] = {*fd, table[*fd].size() - 1};
    } else {
      auto it = open.find(key);
      if (it == open.end()) continue;
      Access& acc = table[it->second.fd][it->second.index];
      acc.exit_ts = ev.ts;
      acc.ret = ev.arg_int("ret");
      open.erase(it);
    }
  }

  IpcFlow flow;
  std::vector<DetectionReport> reports;
  std::map<std::pair<std::int32_t, std::int32_t>, std::int64_t> edge_count;

  for (const auto& [fd, fd_users] : users) {
    if (fd_users.size() < 2) continue;  // not a cross-process channel

    // Pair completed writes with completed reads in time order.
    std::vector<const Access*> ws, rs;
    for (const Access& a : writes[fd]) {
      if (a.exit_ts.has_value() && a.ret > 0) ws.push_back(&a);
    }
    for (const Access& a : reads[fd]) {
      if (a.exit_ts.has_value() && a.ret > 0) rs.push_back(&a);
    }
    const std::size_t pairs = std::min(ws.size(), rs.size());
    for (std::size_t i = 0; i < pairs; ++i) {
      if (ws[i]->pid == rs[i]->pid) continue;  // same-process echo, skip
      ++edge_count[{ws[i]->pid, rs[i]->pid}];
    }

    // A read waiting past the timeout with no counterpart write is blocked.
    std::set<std::int32_t> reported_pids;
    for (const Access& r : reads[fd]) {
      if (reported_pids.count(r.pid) != 0) continue;
      const Ns deadline = r.entry_ts + timeout;
      if (r.exit_ts.has_value() && *r.exit_ts <= deadline) continue;
      if (deadline > experiment.end_ts()) continue;  // trace too short to say
      bool answered = false;
      for (const Access& w : writes[fd]) {
        if (w.pid != r.pid && w.entry_ts > r.entry_ts &&
            w.entry_ts <= deadline) {
          answered = true;
          break;
        }
      }
      if (answered) continue;
      DetectionReport rep;
      rep.kind = DetectionReport::Kind::kIpcBlockage;
      rep.begin_ts = r.entry_ts;
      rep.end_ts = r.exit_ts.value_or(experiment.end_ts());
      rep.subject = {{"pid", r.pid}, {"fd", fd}};
      rep.evidence = {{"waited", rep.end_ts - rep.begin_ts},
                      {"timeout", timeout}};
      rep.note = "process blocked on a pipe read with no counterpart write";
      reports.push_back(std::move(rep));
      reported_pids.insert(r.pid);
    }
  }

  for (const auto& [edge, count] : edge_count) {
    flow.edges.push_back({edge.first, edge.second, count});
  }
  return {std::move(flow), std::move(reports)};
}

std::vector<DetectionReport> overhead_reports(
    std::span<const VerticalSpan> spans, double threshold) {
  std::vector<DetectionReport> reports;
  for (const VerticalSpan& span : spans) {
    if (!overhead_flag(span, threshold)) continue;
    Ns gap_sum = 0;
    for (Ns g : span.gaps) gap_sum += g;
    DetectionReport r;
    r.kind = DetectionReport::Kind::kOverheadExceeded;
    r.begin_ts = span.bec.entry_ts;
    r.end_ts = span.bec.exit_ts;
    r.subject = {{"root", span.bec.root_name},
                 {"root_ctx", span.bec.root_ctx},
                 {"pid", span.bec.pid}};
    r.evidence = {{"total_exec", span.total_exec},
                  {"gap_sum", gap_sum},
                  {"latency", span.latency},
                  {"threshold", threshold}};
    r.note = "orchestration gaps dominate the span";
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace uvspan::metrics
