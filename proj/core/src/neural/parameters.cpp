#include "abdoshape/neural/parameters.hpp"

#include "abdoshape/error.hpp"

namespace abdoshape::neural {

std::size_t ParameterStore::add(std::string name, Tensor value) {
  if (find(name)) throw InvalidArgument("duplicate parameter name '" + name + "'");
  names_.push_back(std::move(name));
  values_.push_back(std::move(value));
  return values_.size() - 1;
}

std::optional<std::size_t> ParameterStore::find(const std::string& name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

Var ParameterBinding::operator()(std::size_t index) {
  auto& slot = vars_.at(index);
  if (!slot) slot = tape_.leaf(store_.value(index), /*requires_grad=*/true);
  return *slot;
}

std::vector<Tensor> ParameterBinding::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    out.push_back(vars_[i] ? tape_.grad(*vars_[i]) : Tensor::zeros(store_.value(i).shape));
  }
  return out;
}

}  // namespace abdoshape::neural
