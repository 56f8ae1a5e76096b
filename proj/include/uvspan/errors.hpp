// Copyright (c) 2026 The uvspan Authors
// Licensed under the Apache 2.0 license found in the LICENSE file or at:
//     https://opensource.org/licenses/Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace uvspan {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- trace parsing / loading ----

class MalformedRecord : public Error {
 public:
  using Error::Error;
};

class UnknownEvent : public Error {
 public:
  using Error::Error;
};

class MissingField : public Error {
 public:
  explicit MissingField(std::string field)
      : Error("missing required field: " + field), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class FileUnreadable : public Error {
 public:
  using Error::Error;
};

class EmptyTrace : public Error {
 public:
  using Error::Error;
};

// ---- state history ----

class OutOfOrderModification : public Error {
 public:
  using Error::Error;
};

class TreeClosed : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

// ---- request lifecycle ----

class IllegalTransition : public Error {
 public:
  IllegalTransition(std::string state, std::string event)
      : Error("illegal transition from " + state + " on event " + event),
        state_(std::move(state)),
        event_(std::move(event)) {}
  const std::string& state() const { return state_; }
  const std::string& event() const { return event_; }

 private:
  std::string state_;
  std::string event_;
};

class NoLegalPath : public Error {
 public:
  using Error::Error;
};

// ---- context tracking ----

class UnknownContext : public Error {
 public:
  using Error::Error;
};

// ---- metrics / gc ----

class UnpairedGcEvent : public Error {
 public:
  using Error::Error;
};

// ---- simulator / cli ----

class InvalidParams : public Error {
 public:
  using Error::Error;
};

class IncompatibleFault : public Error {
 public:
  using Error::Error;
};

class UnknownFormat : public Error {
 public:
  using Error::Error;
};

class ReadUnresolvedAtShutdown : public Error {
 public:
  using Error::Error;
};

}  // namespace uvspan
