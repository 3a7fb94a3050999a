// Copyright 2026 isax authors. Apache 2.0 License.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "isax/grid.hpp"
#include "isax/tape.hpp"

namespace isax {

// Named parameter arrays with parallel gradient buffers and the optimizer's
// moment estimates. Single-writer: no concurrent mutation of one store.
class ParamStore {
 public:
  ValueGrid& create(const std::string& name, ValueGrid init);
  bool has(const std::string& name) const;

  ValueGrid& value(const std::string& name);
  const ValueGrid& value(const std::string& name) const;
  ValueGrid& grad(const std::string& name);

  // Adam moment buffers, zero until the first step.
  ValueGrid& moment1(const std::string& name);
  ValueGrid& moment2(const std::string& name);

  void zero_grads();
  long step_count() const { return step_; }
  void increment_step() { ++step_; }

  std::vector<std::string> names() const;  // sorted, deterministic
  long total_coords() const;

  // Versioned JSON document {version, params: {name: {shape, values}}}.
  // Doubles survive a round trip bit-exactly.
  std::string to_json() const;
  static ParamStore from_json(const std::string& text);
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  struct Entry {
    ValueGrid value;
    ValueGrid grad;
    ValueGrid m1;
    ValueGrid m2;
  };
  std::map<std::string, Entry> entries_;
  long step_ = 0;

  Entry& entry(const std::string& name);
};

// Binds store parameters into a tape as leaf nodes, one node per parameter
// per recording, and routes gradients back after backward().
class ParamBinding {
 public:
  ParamBinding(Tape& tape, ParamStore& store) : tape_(tape), store_(store) {}

  Var operator[](const std::string& name);

  // Adds tape gradients of every bound parameter into the store's buffers.
  void accumulate_grads();

 private:
  Tape& tape_;
  ParamStore& store_;
  std::map<std::string, Var> bound_;
};

}  // namespace isax
