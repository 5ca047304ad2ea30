#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "abdoshape/neural/tensor.hpp"

namespace abdoshape::neural {

/// Ordered collection of named parameter tensors.
class ParameterStore {
 public:
  std::size_t add(std::string name, Tensor value);

  std::size_t size() const { return values_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const Tensor& value(std::size_t i) const { return values_.at(i); }
  Tensor& value(std::size_t i) { return values_.at(i); }
  std::vector<Tensor>& values() { return values_; }
  const std::vector<Tensor>& values() const { return values_; }
  const std::vector<std::string>& names() const { return names_; }

  std::optional<std::size_t> find(const std::string& name) const;
  std::size_t scalar_count() const;

  friend bool operator==(const ParameterStore&, const ParameterStore&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<Tensor> values_;
};

/// Binds parameters of a store to a tape, once each, on first use.
class ParameterBinding {
 public:
  ParameterBinding(Tape& tape, const ParameterStore& store) : tape_(tape), store_(store), vars_(store.size()) {}

  Var operator()(std::size_t index);

  /// Gradients after tape.backward(); zero tensors for parameters not used.
  std::vector<Tensor> gradients() const;

 private:
  Tape& tape_;
  const ParameterStore& store_;
  std::vector<std::optional<Var>> vars_;
};

}  // namespace abdoshape::neural
