// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "uvspan/sht.hpp"
#include "uvspan/trace_event.hpp"

namespace uvspan {

// An asynchronous execution context: one async resource's scope, linked to
// the resource that triggered it.
struct ExecContext {
  std::int64_t id = 0;
  std::optional<std::int64_t> trigger_id;  // the channel field
  std::string method;
  Quark quark;
  Ns open_ts = 0;
  std::optional<Ns> close_ts;
  bool orphan = false;
  std::int32_t parent_handle = -1;  // index into contexts(), -1 for roots
};

// Builds the nested execution-context forest from uv_send / run / resolve
// events, mirroring it into the state history tree under /ctx/...
//
// A context opens on a uv_send with an id not currently open; its parent is
// the context named by the channel field. It closes on run/resolve with the
// same id or on a uv_send whose method is js_exit_<fn>. A uv_send naming an
// already-open id is an activation marker and changes nothing.
//
// Context ids may be reused after closure; instances are keyed by
// (id, open_ts) and lookups resolve to the most recent instance at a time.
class ContextTracker {
 public:
  struct Diagnostic {
    enum class Kind {
      kUnknownTrigger,  // channel id never seen; attached under /ctx/orphan
      kTriggerClosed,   // channel known but already closed at open time
      kDoubleClose,
      kCloseUnknown,
    };
    Kind kind;
    std::int64_t id = 0;
    Ns ts = 0;
  };

  explicit ContextTracker(StateHistoryTree& sht) : sht_(&sht) {}

  // Consumes one event from the merged stream; events other than js/vm
  // uv_send, run and resolve are ignored.
  void process_event(const TraceEvent& event);

  const std::vector<ExecContext>& contexts() const { return contexts_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

  // Most recent instance of id opened at or before ts; nullptr if none.
  const ExecContext* find_at(std::int64_t id, Ns ts) const;
  // Most recent instance regardless of time.
  const ExecContext* find_latest(std::int64_t id) const;

  std::int32_t handle_of(const ExecContext& ctx) const;

  // Ancestor list from id up to its root, inclusive. Throws UnknownContext.
  std::vector<ExecContext> context_chain(std::int64_t id) const;

  // Root ancestor of the most recent instance of id.
  const ExecContext* chain_root(std::int64_t id, Ns ts) const;

 private:
  void open_context(const TraceEvent& event, std::int64_t id);
  void close_context(std::int64_t id, Ns ts);
  const ExecContext* find_open(std::int64_t id) const;

  StateHistoryTree* sht_;
  std::vector<ExecContext> contexts_;
  std::unordered_map<std::int64_t, std::vector<std::int32_t>> by_id_;
  std::vector<Diagnostic> diagnostics_;
};

}  // namespace uvspan
