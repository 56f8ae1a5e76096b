// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#include "uvspan/sht.hpp"

#include <algorithm>

namespace uvspan {

nlohmann::json state_value_to_json(const StateValue& v) {
  if (std::holds_alternative<std::monostate>(v)) return nullptr;
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

const StateHistoryTree::Node& StateHistoryTree::node(Quark q) const {
  if (q.is_root() || static_cast<std::size_t>(q.value()) >= nodes_.size()) {
    throw OutOfRange("unknown quark: " + std::to_string(q.value()));
  }
  return nodes_[static_cast<std::size_t>(q.value())];
}

StateHistoryTree::Node& StateHistoryTree::node(Quark q) {
  return const_cast<Node&>(
      static_cast<const StateHistoryTree*>(this)->node(q));
}

const std::map<std::string, std::int32_t, std::less<>>&
StateHistoryTree::children_map(Quark q) const {
  return q.is_root() ? top_ : node(q).children;
}

Quark StateHistoryTree::get_or_create_quark(Quark parent,
                                            std::string_view name) {
  if (!parent.is_root()) node(parent);  // validates existence
  auto& siblings = parent.is_root() ? top_ : node(parent).children;
  if (auto it = siblings.find(name); it != siblings.end()) {
    return Quark(it->second);
  }
  if (closed_) throw TreeClosed("cannot create attributes on closed history");

  const auto idx = static_cast<std::int32_t>(nodes_.size());
  Node n;
  n.name = std::string(name);
  n.parent = parent;
  n.transient_since = origin_;
  nodes_.push_back(std::move(n));
  siblings.emplace(std::string(name), idx);
  return Quark(idx);
}

Quark StateHistoryTree::quark_for_path(std::string_view path) {
  Quark q = Quark::root();
  std::size_t pos = 0;
  while (pos < path.size()) {
    if (path[pos] == '/') {
      ++pos;
      continue;
    }
    const std::size_t next = path.find('/', pos);
    const std::size_t len = next == std::string_view::npos ? path.size() - pos
                                                           : next - pos;
    q = get_or_create_quark(q, path.substr(pos, len));
    pos += len;
  }
  return q;
}

std::optional<Quark> StateHistoryTree::find_child(Quark parent,
                                                  std::string_view name) const {
  const auto& siblings = children_map(parent);
  if (auto it = siblings.find(name); it != siblings.end()) {
    return Quark(it->second);
  }
  return std::nullopt;
}

std::optional<Quark> StateHistoryTree::find_quark_by_path(
    std::string_view path) const {
  Quark q = Quark::root();
  std::size_t pos = 0;
  while (pos < path.size()) {
    if (path[pos] == '/') {
      ++pos;
      continue;
    }
    const std::size_t next = path.find('/', pos);
    const std::size_t len = next == std::string_view::npos ? path.size() - pos
                                                           : next - pos;
    auto child = find_child(q, path.substr(pos, len));
    if (!child) return std::nullopt;
    q = *child;
    pos += len;
  }
  if (q.is_root()) return std::nullopt;
  return q;
}

std::string StateHistoryTree::path_of(Quark q) const {
  std::vector<std::string_view> parts;
  for (Quark cur = q; !cur.is_root(); cur = node(cur).parent) {
    parts.push_back(node(cur).name);
  }
  std::string path;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    path += '/';
    path += *it;
  }
  return path;
}

Quark StateHistoryTree::parent_of(Quark q) const { return node(q).parent; }

std::vector<Quark> StateHistoryTree::children_of(Quark q) const {
  std::vector<Quark> out;
  for (const auto& [name, idx] : children_map(q)) out.push_back(Quark(idx));
  return out;
}

void StateHistoryTree::modify_attribute(Quark q, Ns ts, StateValue value) {
  if (closed_) throw TreeClosed("history already closed");
  Node& n = node(q);
  if (ts < n.transient_since) {
    throw OutOfOrderModification(
        "modification at " + std::to_string(ts) + " precedes state start " +
        std::to_string(n.transient_since) + " on quark " +
        std::to_string(q.value()));
  }
  if (ts < origin_) {
    throw OutOfOrderModification("modification precedes history origin");
  }
  if (ts == n.transient_since) {
    n.transient = std::move(value);
  } else {
    n.sealed.push_back(StateInterval{q, n.transient_since, ts, n.transient});
    n.transient = std::move(value);
    n.transient_since = ts;
  }
  last_modification_ = std::max(last_modification_, ts);
}

void StateHistoryTree::close_history(Ns end_ts) {
  if (closed_) throw TreeClosed("history already closed");
  if (end_ts < last_modification_ || end_ts < origin_) {
    throw OutOfOrderModification("close_history at " + std::to_string(end_ts) +
                                 " precedes the last modification");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Node& n = nodes_[i];
    n.sealed.push_back(StateInterval{Quark(static_cast<std::int32_t>(i)),
                                     n.transient_since, end_ts, n.transient});
  }
  end_ = end_ts;
  closed_ = true;
}

const std::vector<StateInterval>& StateHistoryTree::intervals_of(
    Quark q) const {
  if (!closed_) throw TreeClosed("history not closed yet");
  return node(q).sealed;
}

StateInterval StateHistoryTree::query_single(Quark q, Ns ts) const {
  if (!closed_) throw TreeClosed("history not closed yet");
  if (ts < origin_ || ts > end_) {
    throw OutOfRange("query at " + std::to_string(ts) + " outside [" +
                     std::to_string(origin_) + ", " + std::to_string(end_) +
                     "]");
  }
  const auto& sealed = node(q).sealed;
  // Last interval with start <= ts; the terminal interval is closed at end_.
  auto it = std::upper_bound(
      sealed.begin(), sealed.end(), ts,
      [](Ns t, const StateInterval& iv) { return t < iv.start; });
  if (it == sealed.begin()) {
    throw OutOfRange("query precedes the first interval");
  }
  return *(it - 1);
}

std::vector<StateInterval> StateHistoryTree::query_range(Quark q, Ns t0,
                                                         Ns t1) const {
  if (!closed_) throw TreeClosed("history not closed yet");
  if (t0 > t1) throw OutOfRange("empty query window: t0 > t1");
  if (t1 < origin_ || t0 > end_) {
    throw OutOfRange("query window outside the recorded history");
  }
  const auto& sealed = node(q).sealed;
  std::vector<StateInterval> out;
  for (const StateInterval& iv : sealed) {
    if (iv.start > t1) break;
    const bool terminal = &iv == &sealed.back();
    const bool intersects = terminal ? iv.end >= t0 : iv.end > t0;
    if (intersects) out.push_back(iv);
  }
  return out;
}

nlohmann::ordered_json StateHistoryTree::snapshot() const {
  if (!closed_) throw TreeClosed("history not closed yet");
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Quark q(static_cast<std::int32_t>(i));
    nlohmann::ordered_json entry;
    entry["quark"] = q.value();
    entry["path"] = path_of(q);
    nlohmann::ordered_json intervals = nlohmann::ordered_json::array();
    for (const StateInterval& iv : nodes_[i].sealed) {
      intervals.push_back({{"start", iv.start},
                           {"end", iv.end},
                           {"value", state_value_to_json(iv.value)}});
    }
    entry["intervals"] = std::move(intervals);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace uvspan
