// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include <doctest.h>

#include "support/oracles.hpp"
#include "support/tmpdir.hpp"
#include "uvspan/experiment.hpp"
#include "uvspan/sim/rng.hpp"
#include "uvspan/trace_event.hpp"

using namespace uvspan;

namespace {

TraceEvent make_event(Ns ts, Layer layer, std::string name,
                      nlohmann::json args = nlohmann::json::object(),
                      std::int32_t pid = 1, std::int32_t tid = 1) {
  TraceEvent ev;
  ev.ts = ts;
  ev.layer = layer;
  ev.name = std::move(name);
  ev.pid = pid;
  ev.tid = tid;
  ev.args = std::move(args);
  return ev;
}

}  // namespace

TEST_CASE("parse_event_line accepts a context-opening uv_send") {
  const auto ev = parse_event_line(
      R"({"ts":100,"layer":"js","name":"uv_send","args":{"id":324,"channel":null,"method":"computePromise"}})");
  CHECK(ev.ts == 100);
  CHECK(ev.layer == Layer::kJs);
  CHECK(ev.name == "uv_send");
  CHECK(ev.arg_int("id") == 324);
  CHECK(!ev.arg_int_opt("channel").has_value());
  CHECK(ev.arg_str("method") == "computePromise");
}

TEST_CASE("parse_event_line accepts a minimal kernel record") {
  const auto ev = parse_event_line(
      R"({"ts":0,"layer":"kernel","name":"syscall_entry_read","args":{"fd":3}})");
  CHECK(ev.ts == 0);
  CHECK(ev.layer == Layer::kKernel);
  CHECK(is_syscall_entry(ev.name));
  CHECK(syscall_name(ev.name) == "read");
}

TEST_CASE("parse_event_line reports missing required payload fields") {
  try {
    parse_event_line(R"({"ts":5,"layer":"libuv","name":"uv_done"})");
    FAIL("expected MissingField");
  } catch (const MissingField& e) {
    CHECK(e.field() == "op_id");
  }
}

TEST_CASE("parse_event_line rejects malformed records") {
  CHECK_THROWS_AS(parse_event_line("{not json"), MalformedRecord);
  CHECK_THROWS_AS(parse_event_line("[1,2,3]"), MalformedRecord);
  CHECK_THROWS_AS(
      parse_event_line(R"({"ts":-1,"layer":"js","name":"uv_send"})"),
      MalformedRecord);
  CHECK_THROWS_AS(
      parse_event_line(R"({"ts":1,"layer":"midearth","name":"uv_send"})"),
      MalformedRecord);
  CHECK_THROWS_AS(parse_event_line(R"({"layer":"js","name":"uv_send"})"),
                  MissingField);
  // wrong arg type
  CHECK_THROWS_AS(
      parse_event_line(
          R"({"ts":1,"layer":"libuv","name":"uv_done","args":{"op_id":"x"}})"),
      MalformedRecord);
  // bad el_phase name
  CHECK_THROWS_AS(
      parse_event_line(
          R"({"ts":1,"layer":"libuv","name":"el_phase","args":{"phase":"spin"}})"),
      MalformedRecord);
}

TEST_CASE("unknown events are rejected in strict mode, kept in lenient") {
  const std::string line =
      R"({"ts":7,"layer":"libuv","name":"uv_mystery","args":{"x":1}})";
  CHECK_THROWS_AS(parse_event_line(line, ParseMode::kStrict), UnknownEvent);
  const auto ev = parse_event_line(line, ParseMode::kLenient);
  CHECK(ev.name == "uv_mystery");
  CHECK(ev.args["x"] == 1);
}

TEST_CASE("parse/serialize round trip is identity") {
  const std::vector<std::string> lines = {
      R"({"ts":100,"layer":"js","name":"uv_send","pid":1,"tid":1,"args":{"channel":null,"id":324,"method":"computePromise"}})",
      R"({"ts":905,"layer":"libuv","name":"uv_async_file","pid":1,"tid":7,"args":{"op_id":51}})",
      R"({"ts":906,"layer":"libuv","name":"uv_fs_open","pid":1,"tid":12,"args":{"op_id":51,"phase":"begin"}})",
      R"({"ts":910,"layer":"kernel","name":"syscall_exit_openat","pid":1,"tid":12,"args":{"ret":3}})",
      R"({"ts":950,"layer":"vm","name":"gc_begin","pid":1,"tid":1,"args":{"kind":"scavenge"}})",
      R"({"ts":960,"layer":"libuv","name":"el_phase","pid":1,"tid":1,"args":{"phase":"poll"}})",
  };
  for (const auto& line : lines) {
    const auto ev = parse_event_line(line);
    CHECK(serialize_event(ev) == line);
    CHECK(parse_event_line(serialize_event(ev)) == ev);
  }
}

TEST_CASE("experiment merge keeps ts order over multiple sources") {
  std::vector<TraceEvent> user = {
      make_event(10, Layer::kJs, "uv_send",
                 {{"id", 1}, {"channel", nullptr}, {"method", "f"}}),
      make_event(30, Layer::kLibuv, "uv_dequeue", {{"req_id", 1}}),
      make_event(50, Layer::kLibuv, "uv_done", {{"op_id", 9}}),
  };
  std::vector<TraceEvent> kernel = {
      make_event(20, Layer::kKernel, "syscall_entry_read", {{"fd", 3}}),
      make_event(40, Layer::kKernel, "syscall_exit_read", {{"ret", 128}}),
  };

  const auto exp =
      Experiment::from_sources({user, kernel}, {0, 0}, {"user", "kernel"});
  REQUIRE(exp.size() == 5);
  for (std::size_t i = 0; i + 1 < exp.size(); ++i) {
    CHECK(exp.events()[i].ts <= exp.events()[i + 1].ts);
  }
  CHECK(exp.origin_ts() == 10);
  CHECK(exp.end_ts() == 50);
  CHECK(exp.sources()[0].event_count == 3);
  CHECK(exp.sources()[1].event_count == 2);
}

TEST_CASE("per-source offsets shift events before merging") {
  std::vector<TraceEvent> user = {
      make_event(10, Layer::kLibuv, "uv_done", {{"op_id", 1}})};
  std::vector<TraceEvent> kernel = {
      make_event(5, Layer::kKernel, "syscall_entry_read", {})};

  const auto exp = Experiment::from_sources({user, kernel}, {0, 1000});
  CHECK(exp.events()[0].ts == 10);
  CHECK(exp.events()[1].ts == 1005);
}

TEST_CASE("merge equals the concatenate+offset+stable-sort oracle") {
  sim::Rng rng(42);
  std::vector<std::vector<TraceEvent>> sources(3);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    Ns ts = 0;
    for (int i = 0; i < 200; ++i) {
      ts += rng.uniform(0, 8);  // internally sorted, frequent ts ties
      sources[s].push_back(make_event(ts, Layer::kLibuv, "uv_done",
                                      {{"op_id", static_cast<int>(s) * 1000 + i}}));
    }
  }
  const std::vector<Ns> offsets = {0, 37, 1000};

  const auto expected = testing::merge_oracle(sources, offsets);
  const auto exp = Experiment::from_sources(sources, offsets);
  REQUIRE(exp.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(exp.events()[i] == expected[i]);
  }
}

TEST_CASE("open_experiment loads and merges trace files") {
  testing::TmpDir dir;
  const auto user = dir.write_file(
      "user.ndjson",
      R"({"ts":10,"layer":"js","name":"uv_send","pid":1,"tid":1,"args":{"channel":null,"id":1,"method":"f"}})"
      "\n"
      R"({"ts":30,"layer":"libuv","name":"uv_done","pid":1,"tid":1,"args":{"op_id":2}})"
      "\n");
  const auto kern = dir.write_file(
      "kernel.ndjson",
      R"({"ts":15,"layer":"kernel","name":"syscall_entry_read","pid":1,"tid":1,"args":{"fd":3}})"
      "\n");

  const auto exp = open_experiment({user, kern});
  CHECK(exp.size() == 3);
  CHECK(exp.events()[1].layer == Layer::kKernel);

  CHECK_THROWS_AS(open_experiment({dir.path().string() + "/missing.ndjson"}),
                  FileUnreadable);
  const auto empty = dir.write_file("empty.ndjson", "");
  CHECK_THROWS_AS(open_experiment({empty}), EmptyTrace);
  CHECK_THROWS_AS(open_experiment({user}, {0, 0}), InvalidParams);
}
