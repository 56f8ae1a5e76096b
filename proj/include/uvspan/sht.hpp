// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "uvspan/errors.hpp"
#include "uvspan/trace_event.hpp"

namespace uvspan {

// Stable integer handle for one attribute (one node of the tree). Quarks
// are dense, 0..n-1, assigned in creation order. The tree root is a
// sentinel that never owns state and does not count toward n.
class Quark {
 public:
  constexpr Quark() = default;
  constexpr explicit Quark(std::int32_t value) : value_(value) {}
  static constexpr Quark root() { return Quark(); }

  std::int32_t value() const { return value_; }
  bool is_root() const { return value_ < 0; }
  auto operator<=>(const Quark&) const = default;

 private:
  std::int32_t value_ = -1;
};

// Attribute state: null (monostate), integer or string.
using StateValue = std::variant<std::monostate, std::int64_t, std::string>;

inline bool is_null_state(const StateValue& v) {
  return std::holds_alternative<std::monostate>(v);
}

nlohmann::json state_value_to_json(const StateValue& v);

struct StateInterval {
  Quark quark;
  Ns start = 0;
  Ns end = 0;
  StateValue value;

  bool operator==(const StateInterval&) const = default;
};

// Attribute tree with interval-indexed state storage. Intervals of each
// quark are half-open [start, end), except the terminal interval sealed by
// close_history which is closed at end_ts, so that every quark's intervals
// tile [origin, end_ts] exactly.
//
// Single writer during construction; after close_history the tree is
// immutable and all queries are pure.
class StateHistoryTree {
 public:
  explicit StateHistoryTree(Ns origin_ts = 0) : origin_(origin_ts) {}

  // Returns the existing quark for (parent, name) or creates a fresh one.
  Quark get_or_create_quark(Quark parent, std::string_view name);

  // Slash-separated convenience over get_or_create_quark; "/ctx/324" and
  // "ctx/324" are equivalent.
  Quark quark_for_path(std::string_view path);

  std::optional<Quark> find_child(Quark parent, std::string_view name) const;
  std::optional<Quark> find_quark_by_path(std::string_view path) const;

  std::string path_of(Quark q) const;
  Quark parent_of(Quark q) const;
  std::vector<Quark> children_of(Quark q) const;
  std::size_t quark_count() const { return nodes_.size(); }

  // Seals the previous transient state of q as [prev_ts, ts) and starts a
  // new transient state at ts. A modification at the exact timestamp of the
  // previous one replaces it instead of sealing a zero-length interval.
  void modify_attribute(Quark q, Ns ts, StateValue value);

  // Seals every quark's transient state with end = end_ts and makes the
  // tree read-only.
  void close_history(Ns end_ts);

  bool closed() const { return closed_; }
  Ns origin_ts() const { return origin_; }
  Ns end_ts() const { return end_; }

  // The unique interval of q containing ts. Requires a closed tree and
  // origin <= ts <= end_ts.
  StateInterval query_single(Quark q, Ns ts) const;

  // All intervals of q intersecting [t0, t1], in time order.
  std::vector<StateInterval> query_range(Quark q, Ns t0, Ns t1) const;

  const std::vector<StateInterval>& intervals_of(Quark q) const;

  // JSON array of {quark, path, intervals:[{start,end,value}]}.
  nlohmann::ordered_json snapshot() const;

 private:
  struct Node {
    std::string name;
    Quark parent;
    std::map<std::string, std::int32_t, std::less<>> children;
    StateValue transient;
    Ns transient_since = 0;
    std::vector<StateInterval> sealed;
  };

  const Node& node(Quark q) const;
  Node& node(Quark q);
  const std::map<std::string, std::int32_t, std::less<>>& children_map(
      Quark q) const;

  std::vector<Node> nodes_;
  std::map<std::string, std::int32_t, std::less<>> top_;  // root's children
  Ns origin_ = 0;
  Ns end_ = 0;
  Ns last_modification_ = 0;
  bool closed_ = false;
};

}  // namespace uvspan
