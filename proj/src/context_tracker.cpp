// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/context_tracker.hpp"

#include "uvspan/errors.hpp"

namespace uvspan {

void ContextTracker::process_event(const TraceEvent& event) {
  if (event.layer != Layer::kJs && event.layer != Layer::kVm) return;

  if (event.name == events::kRun || event.name == events::kResolve) {
    close_context(event.arg_int("id"), event.ts);
    return;
  }
  if (event.name != events::kUvSend) return;

  const std::int64_t id = event.arg_int("id");
  if (is_exit_method(event.arg_str("method"))) {
    close_context(id, event.ts);
    return;
  }
  if (find_open(id) != nullptr) return;  // activation marker
  open_context(event, id);
}

void ContextTracker::open_context(const TraceEvent& event, std::int64_t id) {
  ExecContext ctx;
  ctx.id = id;
  ctx.method = event.arg_str("method");
  ctx.open_ts = event.ts;
  ctx.trigger_id = event.arg_int_opt("channel");

  if (!ctx.trigger_id.has_value()) {
    ctx.quark = sht_->quark_for_path("/ctx/" + std::to_string(id));
  } else {
    const ExecContext* parent = find_open(*ctx.trigger_id);
    if (parent == nullptr) {
      // Fall back to the most recent closed instance; a child opening after
      // its trigger closed is suspicious but analyzable.
      parent = find_latest(*ctx.trigger_id);
      if (parent != nullptr) {
        diagnostics_.push_back(
            {Diagnostic::Kind::kTriggerClosed, id, event.ts});
      }
    }
    if (parent != nullptr) {
      ctx.parent_handle = handle_of(*parent);
      ctx.quark =
          sht_->get_or_create_quark(parent->quark, std::to_string(id));
    } else {
      ctx.orphan = true;
      ctx.quark = sht_->quark_for_path("/ctx/orphan/" + std::to_string(id));
      diagnostics_.push_back(
          {Diagnostic::Kind::kUnknownTrigger, id, event.ts});
    }
  }

  sht_->modify_attribute(ctx.quark, ctx.open_ts, StateValue{ctx.method});
  const auto handle = static_cast<std::int32_t>(contexts_.size());
  contexts_.push_back(std::move(ctx));
  by_id_[id].push_back(handle);
}

void ContextTracker::close_context(std::int64_t id, Ns ts) {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) {
    diagnostics_.push_back({Diagnostic::Kind::kCloseUnknown, id, ts});
    return;
  }
  ExecContext& ctx = contexts_[static_cast<std::size_t>(it->second.back())];
  if (ctx.close_ts.has_value()) {
    diagnostics_.push_back({Diagnostic::Kind::kDoubleClose, id, ts});
    return;
  }
  ctx.close_ts = ts;
  sht_->modify_attribute(ctx.quark, ts, StateValue{});
}

const ExecContext* ContextTracker::find_open(std::int64_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return nullptr;
  for (auto h = it->second.rbegin(); h != it->second.rend(); ++h) {
    const ExecContext& ctx = contexts_[static_cast<std::size_t>(*h)];
    if (!ctx.close_ts.has_value()) return &ctx;
  }
  return nullptr;
}

const ExecContext* ContextTracker::find_at(std::int64_t id, Ns ts) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return nullptr;
  for (auto h = it->second.rbegin(); h != it->second.rend(); ++h) {
    const ExecContext& ctx = contexts_[static_cast<std::size_t>(*h)];
    if (ctx.open_ts <= ts) return &ctx;
  }
  return nullptr;
}

const ExecContext* ContextTracker::find_latest(std::int64_t id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end() || it->second.empty()) return nullptr;
  return &contexts_[static_cast<std::size_t>(it->second.back())];
}

std::int32_t ContextTracker::handle_of(const ExecContext& ctx) const {
  return static_cast<std::int32_t>(&ctx - contexts_.data());
}

std::vector<ExecContext> ContextTracker::context_chain(std::int64_t id) const {
  const ExecContext* ctx = find_latest(id);
  if (ctx == nullptr) {
    throw UnknownContext("unknown execution context id: " + std::to_string(id));
  }
  std::vector<ExecContext> chain;
  chain.push_back(*ctx);
  std::int32_t parent = ctx->parent_handle;
  while (parent >= 0) {
    chain.push_back(contexts_[static_cast<std::size_t>(parent)]);
    parent = chain.back().parent_handle;
  }
  return chain;
}

const ExecContext* ContextTracker::chain_root(std::int64_t id, Ns ts) const {
  const ExecContext* ctx = find_at(id, ts);
  if (ctx == nullptr) return nullptr;
  while (ctx->parent_handle >= 0) {
    ctx = &contexts_[static_cast<std::size_t>(ctx->parent_handle)];
  }
  return ctx;
}

}  // namespace uvspan
