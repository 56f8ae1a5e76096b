// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "uvspan/errors.hpp"

namespace uvspan {

// Integer nanoseconds since the trace origin. All time in this project is
// integer ns; there is no floating-point time anywhere.
using Ns = std::int64_t;

enum class Layer { kJs, kVm, kLibuv, kKernel };

std::string_view to_string(Layer layer);
std::optional<Layer> layer_from_string(std::string_view s);

// One timestamped record from one of the four layers. `args` holds the
// layer-specific payload, validated against the event vocabulary on parse.
struct TraceEvent {
  Ns ts = 0;
  Layer layer = Layer::kJs;
  std::string name;
  std::int32_t pid = 0;
  std::int32_t tid = 0;
  nlohmann::json args = nlohmann::json::object();

  bool operator==(const TraceEvent&) const = default;

  // Payload accessors. arg_int throws MissingField when the key is absent or
  // null; the _opt variant maps absent/null to nullopt.
  std::int64_t arg_int(std::string_view key) const;
  std::optional<std::int64_t> arg_int_opt(std::string_view key) const;
  std::string arg_str(std::string_view key) const;
};

enum class ParseMode {
  kStrict,   // unknown layer/name pairs are rejected
  kLenient,  // unknown pairs are preserved but their payload is not validated
};

// Parses one newline-delimited JSON record. Throws MalformedRecord,
// UnknownEvent (strict mode only) or MissingField.
TraceEvent parse_event_line(std::string_view line,
                            ParseMode mode = ParseMode::kStrict);

// Canonical single-line serialization; parse_event_line(serialize_event(e))
// reproduces e exactly.
std::string serialize_event(const TraceEvent& event);

// True when (layer, name) is in the closed event vocabulary.
bool is_known_event(Layer layer, std::string_view name);

// ---- event-name helpers ----

namespace events {
inline constexpr std::string_view kUvSend = "uv_send";
inline constexpr std::string_view kRun = "run";
inline constexpr std::string_view kResolve = "resolve";
inline constexpr std::string_view kUvDequeue = "uv_dequeue";
inline constexpr std::string_view kUvSubmit = "uv_submit";
inline constexpr std::string_view kUvWorkerqRemove = "uv_workerq_remove";
inline constexpr std::string_view kUvDone = "uv_done";
inline constexpr std::string_view kUvAsyncFile = "uv_async_file";
inline constexpr std::string_view kElPhase = "el_phase";
inline constexpr std::string_view kGcBegin = "gc_begin";
inline constexpr std::string_view kGcEnd = "gc_end";
}  // namespace events

// syscall_entry_<name> / syscall_exit_<name>
bool is_syscall_entry(std::string_view name);
bool is_syscall_exit(std::string_view name);
std::string_view syscall_name(std::string_view event_name);

// uv_fs_open|uv_fs_stat|uv_fs_read|uv_fs_close|uv_socketRead carry a
// begin/end phase and an op_id; they mark the execution window of an
// atomic task.
bool is_fs_task_event(std::string_view name);
// uv_fs_open -> fs_open, uv_socketRead -> socketRead
std::string_view fs_task_name(std::string_view event_name);

// Exit markers are encoded as method == "js_exit_<fn>".
bool is_exit_method(std::string_view method);
inline constexpr std::string_view kExitMethodPrefix = "js_exit_";

// Event-loop phase names accepted by el_phase.
bool is_el_phase_name(std::string_view phase);

}  // namespace uvspan
