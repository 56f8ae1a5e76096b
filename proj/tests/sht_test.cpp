// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include <doctest.h>

#include <set>

#include "support/oracles.hpp"
#include "uvspan/sht.hpp"
#include "uvspan/sim/rng.hpp"

using namespace uvspan;

TEST_CASE("get_or_create_quark is idempotent") {
  StateHistoryTree sht;
  const Quark a = sht.quark_for_path("/ctx/324");
  const Quark b = sht.quark_for_path("/ctx/324");
  CHECK(a == b);
  CHECK(sht.quark_count() == 2);  // "ctx" and "324"
}

TEST_CASE("child quarks hang off their parent") {
  StateHistoryTree sht;
  const Quark parent = sht.quark_for_path("/ctx/324");
  const Quark child = sht.get_or_create_quark(parent, "17786");
  CHECK(parent != child);
  CHECK(sht.parent_of(child) == parent);
  CHECK(sht.path_of(child) == "/ctx/324/17786");
  CHECK(sht.find_quark_by_path("/ctx/324/17786") == child);
}

TEST_CASE("quarks are dense and unique per path") {
  StateHistoryTree sht;
  const Quark parent = sht.quark_for_path("/ctx");
  std::set<std::int32_t> values;
  std::set<std::string> paths;
  for (int i = 0; i < 1000; ++i) {
    const Quark q = sht.get_or_create_quark(parent, std::to_string(i));
    values.insert(q.value());
    paths.insert(sht.path_of(q));
  }
  CHECK(values.size() == 1000);
  CHECK(paths.size() == 1000);
  // dense: 1 for "/ctx" plus the 1000 children
  CHECK(*values.rbegin() == 1000);
  CHECK(sht.quark_count() == 1001);
}

TEST_CASE("modify_attribute seals half-open intervals") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/op/1");
  sht.modify_attribute(q, 10, StateValue{std::string("fs_open")});
  sht.modify_attribute(q, 60, StateValue{});
  sht.close_history(100);

  const auto iv = sht.query_single(q, 10);
  CHECK(iv.start == 10);
  CHECK(iv.end == 60);
  CHECK(std::get<std::string>(iv.value) == "fs_open");
  CHECK(sht.query_single(q, 59) == iv);
  // half-open: ts=60 belongs to the successor
  const auto next = sht.query_single(q, 60);
  CHECK(next.start == 60);
  CHECK(is_null_state(next.value));
}

TEST_CASE("out-of-order modifications are rejected") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/op/1");
  sht.modify_attribute(q, 10, StateValue{std::int64_t{1}});
  CHECK_THROWS_AS(sht.modify_attribute(q, 5, StateValue{std::int64_t{2}}),
                  OutOfOrderModification);
}

TEST_CASE("close_history seals the transient state and locks the tree") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/ctx/1");
  sht.modify_attribute(q, 10, StateValue{std::string("open")});
  sht.close_history(100);

  const auto last = sht.query_single(q, 100);
  CHECK(last.start == 10);
  CHECK(last.end == 100);
  CHECK(std::get<std::string>(last.value) == "open");

  CHECK_THROWS_AS(sht.close_history(200), TreeClosed);
  CHECK_THROWS_AS(sht.modify_attribute(q, 150, StateValue{}), TreeClosed);
}

TEST_CASE("close_history before the last modification is an error") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/ctx/1");
  sht.modify_attribute(q, 50, StateValue{std::int64_t{1}});
  CHECK_THROWS_AS(sht.close_history(40), OutOfOrderModification);
}

TEST_CASE("closing an empty tree is valid and yields zero intervals") {
  StateHistoryTree sht;
  sht.close_history(100);
  CHECK(sht.quark_count() == 0);
  CHECK(sht.closed());
}

TEST_CASE("query before the first modification returns the null state") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/ctx/1");
  sht.modify_attribute(q, 40, StateValue{std::int64_t{7}});
  sht.close_history(80);
  const auto iv = sht.query_single(q, 12);
  CHECK(is_null_state(iv.value));
  CHECK(iv.start == 0);
  CHECK(iv.end == 40);
}

TEST_CASE("queries outside the recorded range are rejected") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/ctx/1");
  sht.close_history(80);
  CHECK_THROWS_AS(sht.query_single(q, 81), OutOfRange);
  CHECK_THROWS_AS(sht.query_single(q, -1), OutOfRange);
  CHECK_THROWS_AS(sht.query_range(q, 5, 4), OutOfRange);
}

TEST_CASE("point queries match the linear-scan oracle") {
  sim::Rng rng(1234);
  StateHistoryTree sht;
  testing::StateModLog log;

  std::vector<Quark> quarks;
  for (int i = 0; i < 8; ++i) {
    quarks.push_back(sht.quark_for_path("/q/" + std::to_string(i)));
  }
  std::vector<Ns> cursor(quarks.size(), 0);
  for (int step = 0; step < 500; ++step) {
    const auto qi = rng.index(quarks.size());
    cursor[qi] += rng.uniform(0, 20);
    StateValue v;
    switch (rng.uniform(0, 2)) {
      case 0:
        v = StateValue{};
        break;
      case 1:
        v = StateValue{rng.uniform(0, 99)};
        break;
      default:
        v = StateValue{std::string("s") + std::to_string(rng.uniform(0, 9))};
        break;
    }
    sht.modify_attribute(quarks[qi], cursor[qi], v);
    log.record(quarks[qi].value(), cursor[qi], v);
  }
  const Ns end = *std::max_element(cursor.begin(), cursor.end()) + 10;
  sht.close_history(end);

  for (int i = 0; i < 20000; ++i) {
    const auto qi = rng.index(quarks.size());
    const Ns ts = rng.uniform(0, end);
    const auto got = sht.query_single(quarks[qi], ts);
    CHECK(got.value == log.value_at(quarks[qi].value(), ts));
    CHECK(got.start <= ts);
    const bool terminal = got.end == end;
    CHECK((ts < got.end || (terminal && ts <= got.end)));
  }
}

TEST_CASE("intervals tile the history exactly") {
  sim::Rng rng(99);
  StateHistoryTree sht;
  std::vector<Quark> quarks;
  for (int i = 0; i < 5; ++i) {
    quarks.push_back(sht.quark_for_path("/t/" + std::to_string(i)));
  }
  std::vector<Ns> cursor(quarks.size(), 0);
  for (int step = 0; step < 300; ++step) {
    const auto qi = rng.index(quarks.size());
    cursor[qi] += rng.uniform(0, 15);
    sht.modify_attribute(quarks[qi], cursor[qi],
                         StateValue{rng.uniform(0, 5)});
  }
  const Ns end = 300 * 15 + 1;
  sht.close_history(end);
  for (const Quark q : quarks) {
    CHECK(testing::tiles_exactly(sht.intervals_of(q), 0, end));
  }
}

TEST_CASE("range queries match a scan over the sealed intervals") {
  sim::Rng rng(7);
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/r/0");
  Ns at = 0;
  for (int i = 0; i < 60; ++i) {
    at += rng.uniform(1, 12);
    sht.modify_attribute(q, at, StateValue{rng.uniform(0, 3)});
  }
  const Ns end = at + 5;
  sht.close_history(end);
  const auto& all = sht.intervals_of(q);

  for (int i = 0; i < 500; ++i) {
    Ns t0 = rng.uniform(0, end);
    Ns t1 = rng.uniform(t0, end);
    const auto got = sht.query_range(q, t0, t1);
    std::vector<StateInterval> expect;
    for (const auto& iv : all) {
      const bool terminal = &iv == &all.back();
      if (iv.start <= t1 && (terminal ? iv.end >= t0 : iv.end > t0)) {
        expect.push_back(iv);
      }
    }
    CHECK(got == expect);
  }

  // full-range query returns the complete history
  CHECK(sht.query_range(q, 0, end) == all);
}

TEST_CASE("an untouched quark holds a single null interval after close") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/quiet");
  sht.close_history(50);
  const auto ivs = sht.query_range(q, 0, 50);
  REQUIRE(ivs.size() == 1);
  CHECK(ivs[0].start == 0);
  CHECK(ivs[0].end == 50);
  CHECK(is_null_state(ivs[0].value));
}

TEST_CASE("snapshot export lists every quark with its intervals") {
  StateHistoryTree sht;
  const Quark q = sht.quark_for_path("/ctx/324");
  sht.modify_attribute(q, 5, StateValue{std::string("computePromise")});
  sht.close_history(20);
  const auto snap = sht.snapshot();
  REQUIRE(snap.size() == 2);
  CHECK(snap[1]["path"] == "/ctx/324");
  CHECK(snap[1]["intervals"].size() == 2);
  CHECK(snap[1]["intervals"][1]["value"] == "computePromise");
}
