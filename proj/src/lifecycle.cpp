// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/lifecycle.hpp"

#include "uvspan/errors.hpp"

namespace uvspan {

namespace {

using S = RequestState;

[[noreturn]] void illegal(S current, const TraceEvent& ev) {
  throw IllegalTransition(std::string(to_string(current)), ev.name);
}

}  // namespace

std::string_view to_string(RequestState s) {
  switch (s) {
    case S::kS0:
      return "S0";
    case S::kS1:
      return "S1";
    case S::kS2:
      return "S2";
    case S::kS3:
      return "S3";
    case S::kS4:
      return "S4";
    case S::kS5:
      return "S5";
    case S::kS6:
      return "S6";
    case S::kS7:
      return "S7";
  }
  return "?";
}

std::string_view to_string(PathKind k) {
  switch (k) {
    case PathKind::kRuntimeDirect:
      return "RuntimeDirect";
    case PathKind::kOsDelegated:
      return "OsDelegated";
    case PathKind::kThreadPool:
      return "ThreadPool";
  }
  return "?";
}

RequestState advance(RequestState current, const TraceEvent& event) {
  const std::string_view name = event.name;

  if (name == events::kUvSend) {
    if (is_exit_method(event.arg_str("method"))) {
      if (current == S::kS7) return S::kS0;
      illegal(current, event);
    }
    if (current == S::kS0 || current == S::kS7) return S::kS1;
    illegal(current, event);
  }
  if (name == events::kUvDequeue) {
    if (current == S::kS1) return S::kS2;
    illegal(current, event);
  }
  if (name == events::kRun) {
    if (current == S::kS2) return S::kS3;
    illegal(current, event);
  }
  if (name == events::kUvSubmit) {
    if (current == S::kS2) return S::kS4;
    illegal(current, event);
  }
  if (name == events::kUvWorkerqRemove) {
    if (current == S::kS4) return S::kS5;
    illegal(current, event);
  }
  if (is_fs_task_event(name) && event.arg_str("phase") == "begin") {
    // First kernel-delegation evidence marks the S6 entry.
    if (current == S::kS2) return S::kS6;
    illegal(current, event);
  }
  if (name == events::kUvDone) {
    if (current == S::kS3 || current == S::kS5 || current == S::kS6) {
      return S::kS7;
    }
    illegal(current, event);
  }
  illegal(current, event);
}

RequestTimeline replay(std::int64_t request_id,
                       std::span<const TraceEvent> transition_events) {
  RequestTimeline timeline;
  timeline.request_id = request_id;
  if (transition_events.empty()) return timeline;

  S state = S::kS0;
  timeline.states.push_back({state, transition_events.front().ts});
  for (const TraceEvent& ev : transition_events) {
    state = advance(state, ev);
    timeline.states.push_back({state, ev.ts});
  }
  return timeline;
}

std::vector<HopPath> classify_path(const RequestTimeline& timeline) {
  const auto& st = timeline.states;
  if (st.size() < 2 || st.front().state != S::kS0 ||
      st.back().state != S::kS0) {
    throw NoLegalPath("timeline does not start and end at S0");
  }

  std::vector<HopPath> hops;
  std::size_t i = 1;  // skip the initial S0
  while (i < st.size() && st[i].state != S::kS0) {
    // One hop: S1 S2 (S3 | S6 | S4 S5) S7
    HopPath hop;
    auto expect = [&](S s) {
      if (i >= st.size() || st[i].state != s) {
        throw NoLegalPath("expected " + std::string(to_string(s)) +
                          " in hop " + std::to_string(hops.size() + 1));
      }
      hop.witness.push_back(s);
      ++i;
    };
    expect(S::kS1);
    expect(S::kS2);
    if (i >= st.size()) throw NoLegalPath("timeline truncated after S2");
    switch (st[i].state) {
      case S::kS3:
        hop.kind = PathKind::kRuntimeDirect;
        expect(S::kS3);
        break;
      case S::kS6:
        hop.kind = PathKind::kOsDelegated;
        expect(S::kS6);
        break;
      case S::kS4:
        hop.kind = PathKind::kThreadPool;
        expect(S::kS4);
        expect(S::kS5);
        break;
      default:
        throw NoLegalPath("no legal middle state after S2, got " +
                          std::string(to_string(st[i].state)));
    }
    expect(S::kS7);
    hops.push_back(std::move(hop));
  }
  if (i != st.size() - 1 || st[i].state != S::kS0) {
    throw NoLegalPath("timeline does not terminate with S7 -> S0");
  }
  if (hops.empty()) throw NoLegalPath("timeline has no hops");
  return hops;
}

std::map<RequestState, Ns> dwell_times(const RequestTimeline& timeline) {
  std::map<RequestState, Ns> dwell;
  const auto& st = timeline.states;
  for (std::size_t i = 0; i + 1 < st.size(); ++i) {
    dwell[st[i].state] += st[i + 1].ts - st[i].ts;
  }
  if (!st.empty()) dwell[st.back().state] += 0;
  return dwell;
}

}  // namespace uvspan
