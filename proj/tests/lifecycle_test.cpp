// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include <doctest.h>

#include "uvspan/lifecycle.hpp"
#include "uvspan/errors.hpp"

using namespace uvspan;

namespace {

TraceEvent ev(Ns ts, Layer layer, std::string name,
              nlohmann::json args = nlohmann::json::object()) {
  TraceEvent e;
  e.ts = ts;
  e.layer = layer;
  e.name = std::move(name);
  e.pid = 1;
  e.tid = 1;
  e.args = std::move(args);
  return e;
}

TraceEvent send(Ns ts, std::int64_t id, std::string method,
                Layer layer = Layer::kVm) {
  return ev(ts, layer, "uv_send",
            {{"id", id}, {"channel", nullptr}, {"method", std::move(method)}});
}

TraceEvent dequeue(Ns ts, std::int64_t req) {
  return ev(ts, Layer::kLibuv, "uv_dequeue", {{"req_id", req}});
}

TraceEvent done(Ns ts, std::int64_t op) {
  return ev(ts, Layer::kLibuv, "uv_done", {{"op_id", op}});
}

}  // namespace

TEST_CASE("advance follows the instrumented edges") {
  using S = RequestState;
  CHECK(advance(S::kS1, dequeue(5, 1)) == S::kS2);
  CHECK(advance(S::kS0, send(1, 1, "readFile", Layer::kJs)) == S::kS1);
  CHECK(advance(S::kS7, send(9, 1, "js_exit_readFile", Layer::kJs)) == S::kS0);
  CHECK(advance(S::kS7, send(9, 2, "promise")) == S::kS1);
  CHECK(advance(S::kS2, ev(3, Layer::kVm, "run", {{"id", 2}})) == S::kS3);
  CHECK(advance(S::kS2, ev(3, Layer::kLibuv, "uv_submit", {{"op_id", 4}})) ==
        S::kS4);
  CHECK(advance(S::kS4, ev(3, Layer::kLibuv, "uv_workerq_remove",
                           {{"op_id", 4}})) == S::kS5);
  CHECK(advance(S::kS2, ev(3, Layer::kLibuv, "uv_fs_read",
                           {{"op_id", 4}, {"phase", "begin"}})) == S::kS6);
  CHECK(advance(S::kS5, done(8, 4)) == S::kS7);
  CHECK(advance(S::kS3, done(8, 4)) == S::kS7);
  CHECK(advance(S::kS6, done(8, 4)) == S::kS7);
}

TEST_CASE("advance rejects edges that are not in the state machine") {
  using S = RequestState;
  try {
    advance(S::kS3, ev(3, Layer::kLibuv, "uv_submit", {{"op_id", 4}}));
    FAIL("expected IllegalTransition");
  } catch (const IllegalTransition& e) {
    CHECK(e.state() == "S3");
    CHECK(e.event() == "uv_submit");
  }
  CHECK_THROWS_AS(advance(S::kS2, done(3, 4)), IllegalTransition);
  CHECK_THROWS_AS(advance(S::kS0, dequeue(3, 1)), IllegalTransition);
  CHECK_THROWS_AS(advance(S::kS1, send(3, 1, "js_exit_f", Layer::kJs)),
                  IllegalTransition);
  // phase=end never drives a transition
  CHECK_THROWS_AS(advance(S::kS2, ev(3, Layer::kLibuv, "uv_fs_read",
                                     {{"op_id", 4}, {"phase", "end"}})),
                  IllegalTransition);
}

TEST_CASE("classify_path identifies the three legal hop shapes") {
  using S = RequestState;

  auto timeline = [](std::vector<StateEnter> states) {
    RequestTimeline t;
    t.request_id = 1;
    t.states = std::move(states);
    return t;
  };

  const auto pool = classify_path(timeline({{S::kS0, 0},
                                            {S::kS1, 0},
                                            {S::kS2, 10},
                                            {S::kS4, 20},
                                            {S::kS5, 30},
                                            {S::kS7, 40},
                                            {S::kS0, 50}}));
  REQUIRE(pool.size() == 1);
  CHECK(pool[0].kind == PathKind::kThreadPool);

  const auto direct = classify_path(timeline({{S::kS0, 0},
                                              {S::kS1, 0},
                                              {S::kS2, 10},
                                              {S::kS3, 20},
                                              {S::kS7, 40},
                                              {S::kS0, 50}}));
  REQUIRE(direct.size() == 1);
  CHECK(direct[0].kind == PathKind::kRuntimeDirect);

  const auto os = classify_path(timeline({{S::kS0, 0},
                                          {S::kS1, 0},
                                          {S::kS2, 10},
                                          {S::kS6, 20},
                                          {S::kS7, 40},
                                          {S::kS0, 50}}));
  REQUIRE(os.size() == 1);
  CHECK(os[0].kind == PathKind::kOsDelegated);

  // skipping the mandatory middle state is illegal
  CHECK_THROWS_AS(classify_path(timeline({{S::kS0, 0},
                                          {S::kS1, 0},
                                          {S::kS2, 10},
                                          {S::kS7, 40},
                                          {S::kS0, 50}})),
                  NoLegalPath);
}

TEST_CASE("chained requests classify per hop") {
  using S = RequestState;
  RequestTimeline t;
  t.request_id = 9;
  t.states = {{S::kS0, 0},  {S::kS1, 0},  {S::kS2, 5},  {S::kS3, 6},
              {S::kS7, 8},  {S::kS1, 9},  {S::kS2, 10}, {S::kS4, 11},
              {S::kS5, 14}, {S::kS7, 20}, {S::kS0, 21}};
  const auto hops = classify_path(t);
  REQUIRE(hops.size() == 2);
  CHECK(hops[0].kind == PathKind::kRuntimeDirect);
  CHECK(hops[1].kind == PathKind::kThreadPool);
}

TEST_CASE("replay builds a legal timeline from transition events") {
  const std::vector<TraceEvent> events = {
      send(100, 324, "computePromise", Layer::kJs),
      dequeue(160, 324),
      ev(170, Layer::kVm, "run", {{"id", 400}}),
      done(180, 51),
      send(200, 324, "js_exit_computePromise", Layer::kJs),
  };
  const auto timeline = replay(324, events);
  REQUIRE(timeline.states.size() == 6);
  CHECK(timeline.states.front() == StateEnter{RequestState::kS0, 100});
  CHECK(timeline.states.back() == StateEnter{RequestState::kS0, 200});

  const auto dwell = dwell_times(timeline);
  CHECK(dwell.at(RequestState::kS1) == 60);
  CHECK(dwell.at(RequestState::kS2) == 10);
  CHECK(dwell.at(RequestState::kS3) == 10);
  CHECK(dwell.at(RequestState::kS7) == 20);

  // telescoping: total dwell equals exit - entry
  Ns total = 0;
  for (const auto& [state, ns] : dwell) total += ns;
  CHECK(total == 200 - 100);
}

TEST_CASE("dwell of a zero-duration passage is zero, not an error") {
  using S = RequestState;
  RequestTimeline t;
  t.states = {{S::kS0, 10}, {S::kS1, 10}, {S::kS2, 10},
              {S::kS3, 10}, {S::kS7, 10}, {S::kS0, 10}};
  const auto dwell = dwell_times(t);
  for (const auto& [state, ns] : dwell) CHECK(ns == 0);
}
