// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/trace_event.hpp"

#include <array>

namespace uvspan {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 7> kElPhases = {
    "timers", "pending", "idle", "prepare", "poll", "check", "close"};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

const json* find_arg(const json& args, std::string_view key) {
  auto it = args.find(key);
  if (it == args.end()) return nullptr;
  return &*it;
}

std::int64_t require_int_arg(const TraceEvent& ev, std::string_view key) {
  const json* v = find_arg(ev.args, key);
  if (v == nullptr || v->is_null()) throw MissingField(std::string(key));
  if (!v->is_number_integer() && !v->is_number_unsigned()) {
    throw MalformedRecord("field '" + std::string(key) + "' of " + ev.name +
                          " must be an integer");
  }
  return v->get<std::int64_t>();
}

std::string require_str_arg(const TraceEvent& ev, std::string_view key) {
  const json* v = find_arg(ev.args, key);
  if (v == nullptr || v->is_null()) throw MissingField(std::string(key));
  if (!v->is_string()) {
    throw MalformedRecord("field '" + std::string(key) + "' of " + ev.name +
                          " must be a string");
  }
  return v->get<std::string>();
}

// Validates the per-name required payload. Unknown names must be filtered
// before calling this.
void validate_args(const TraceEvent& ev) {
  const std::string_view name = ev.name;
  if (name == events::kUvSend) {
    require_int_arg(ev, "id");
    const json* channel = find_arg(ev.args, "channel");
    if (channel == nullptr) throw MissingField("channel");
    if (!channel->is_null() && !channel->is_number_integer() &&
        !channel->is_number_unsigned()) {
      throw MalformedRecord("field 'channel' of uv_send must be int or null");
    }
    require_str_arg(ev, "method");
    return;
  }
  if (name == events::kRun || name == events::kResolve) {
    require_int_arg(ev, "id");
    return;
  }
  if (name == events::kUvDequeue) {
    require_int_arg(ev, "req_id");
    return;
  }
  if (name == events::kUvSubmit || name == events::kUvWorkerqRemove ||
      name == events::kUvDone || name == events::kUvAsyncFile) {
    require_int_arg(ev, "op_id");
    return;
  }
  if (is_fs_task_event(name)) {
    require_int_arg(ev, "op_id");
    const std::string phase = require_str_arg(ev, "phase");
    if (phase != "begin" && phase != "end") {
      throw MalformedRecord("field 'phase' of " + ev.name +
                            " must be \"begin\" or \"end\"");
    }
    return;
  }
  if (name == events::kElPhase) {
    const std::string phase = require_str_arg(ev, "phase");
    if (!is_el_phase_name(phase)) {
      throw MalformedRecord("unknown event-loop phase: " + phase);
    }
    return;
  }
  if (name == events::kGcBegin || name == events::kGcEnd) {
    require_str_arg(ev, "kind");
    return;
  }
  if (is_syscall_exit(name)) {
    require_int_arg(ev, "ret");
    return;
  }
  // syscall_entry_*: free-form args.
}

}  // namespace

std::string_view to_string(Layer layer) {
  switch (layer) {
    case Layer::kJs:
      return "js";
    case Layer::kVm:
      return "vm";
    case Layer::kLibuv:
      return "libuv";
    case Layer::kKernel:
      return "kernel";
  }
  return "?";
}

std::optional<Layer> layer_from_string(std::string_view s) {
  if (s == "js") return Layer::kJs;
  if (s == "vm") return Layer::kVm;
  if (s == "libuv") return Layer::kLibuv;
  if (s == "kernel") return Layer::kKernel;
  return std::nullopt;
}

std::int64_t TraceEvent::arg_int(std::string_view key) const {
  return require_int_arg(*this, key);
}

std::optional<std::int64_t> TraceEvent::arg_int_opt(
    std::string_view key) const {
  const json* v = find_arg(args, key);
  if (v == nullptr || v->is_null()) return std::nullopt;
  if (!v->is_number_integer() && !v->is_number_unsigned()) {
    throw MalformedRecord("field '" + std::string(key) + "' of " + name +
                          " must be an integer");
  }
  return v->get<std::int64_t>();
}

std::string TraceEvent::arg_str(std::string_view key) const {
  return require_str_arg(*this, key);
}

bool is_syscall_entry(std::string_view name) {
  return starts_with(name, "syscall_entry_") &&
         name.size() > std::string_view("syscall_entry_").size();
}

bool is_syscall_exit(std::string_view name) {
  return starts_with(name, "syscall_exit_") &&
         name.size() > std::string_view("syscall_exit_").size();
}

std::string_view syscall_name(std::string_view event_name) {
  if (is_syscall_entry(event_name)) {
    return event_name.substr(std::string_view("syscall_entry_").size());
  }
  if (is_syscall_exit(event_name)) {
    return event_name.substr(std::string_view("syscall_exit_").size());
  }
  return {};
}

bool is_fs_task_event(std::string_view name) {
  return name == "uv_fs_open" || name == "uv_fs_stat" ||
         name == "uv_fs_read" || name == "uv_fs_close" ||
         name == "uv_socketRead";
}

std::string_view fs_task_name(std::string_view event_name) {
  if (event_name == "uv_socketRead") return "socketRead";
  if (starts_with(event_name, "uv_")) return event_name.substr(3);
  return event_name;
}

bool is_exit_method(std::string_view method) {
  return starts_with(method, kExitMethodPrefix);
}

bool is_el_phase_name(std::string_view phase) {
  for (std::string_view p : kElPhases) {
    if (p == phase) return true;
  }
  return false;
}

bool is_known_event(Layer layer, std::string_view name) {
  switch (layer) {
    case Layer::kJs:
      return name == events::kUvSend;
    case Layer::kVm:
      return name == events::kUvSend || name == events::kRun ||
             name == events::kResolve || name == events::kGcBegin ||
             name == events::kGcEnd;
    case Layer::kLibuv:
      return name == events::kUvDequeue || name == events::kUvSubmit ||
             name == events::kUvWorkerqRemove || name == events::kUvDone ||
             name == events::kUvAsyncFile || name == events::kElPhase ||
             is_fs_task_event(name);
    case Layer::kKernel:
      return is_syscall_entry(name) || is_syscall_exit(name);
  }
  return false;
}

TraceEvent parse_event_line(std::string_view line, ParseMode mode) {
  json doc = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw MalformedRecord("record is not a JSON object");
  }

  TraceEvent ev;

  auto ts_it = doc.find("ts");
  if (ts_it == doc.end()) throw MissingField("ts");
  if (!ts_it->is_number_integer() && !ts_it->is_number_unsigned()) {
    throw MalformedRecord("field 'ts' must be an integer");
  }
  ev.ts = ts_it->get<Ns>();
  if (ev.ts < 0) throw MalformedRecord("field 'ts' must be >= 0");

  auto layer_it = doc.find("layer");
  if (layer_it == doc.end()) throw MissingField("layer");
  if (!layer_it->is_string()) {
    throw MalformedRecord("field 'layer' must be a string");
  }
  auto layer = layer_from_string(layer_it->get<std::string>());
  if (!layer) {
    throw MalformedRecord("unknown layer: " + layer_it->get<std::string>());
  }
  ev.layer = *layer;

  auto name_it = doc.find("name");
  if (name_it == doc.end()) throw MissingField("name");
  if (!name_it->is_string()) {
    throw MalformedRecord("field 'name' must be a string");
  }
  ev.name = name_it->get<std::string>();
  if (ev.name.empty()) throw MalformedRecord("field 'name' must be nonempty");

  for (const char* key : {"pid", "tid"}) {
    auto it = doc.find(key);
    if (it == doc.end()) continue;
    if (!it->is_number_integer() && !it->is_number_unsigned()) {
      throw MalformedRecord("field '" + std::string(key) +
                            "' must be an integer");
    }
    (key[0] == 'p' ? ev.pid : ev.tid) = it->get<std::int32_t>();
  }

  auto args_it = doc.find("args");
  if (args_it != doc.end()) {
    if (!args_it->is_object()) {
      throw MalformedRecord("field 'args' must be an object");
    }
    ev.args = *args_it;
  }

  if (!is_known_event(ev.layer, ev.name)) {
    if (mode == ParseMode::kStrict) {
      throw UnknownEvent("unknown event " + std::string(to_string(ev.layer)) +
                         "/" + ev.name);
    }
    return ev;  // lenient: preserved but payload not validated
  }
  validate_args(ev);
  return ev;
}

std::string serialize_event(const TraceEvent& event) {
  nlohmann::ordered_json doc;
  doc["ts"] = event.ts;
  doc["layer"] = to_string(event.layer);
  doc["name"] = event.name;
  doc["pid"] = event.pid;
  doc["tid"] = event.tid;
  doc["args"] = event.args;
  return doc.dump();
}

}  // namespace uvspan
