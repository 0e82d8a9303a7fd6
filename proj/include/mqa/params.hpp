#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "mqa/tensor.hpp"

namespace mqa {

struct Param {
  std::string name;
  Tensor value;
  friend bool operator==(const Param&, const Param&) = default;
};

// Ordered collection of uniquely named tensors. Indices are stable, so model
// code keeps integer handles instead of names.
class ParamSet {
 public:
  std::size_t add(std::string name, std::vector<std::size_t> shape);
  std::optional<std::size_t> find(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  Tensor& value(std::size_t i) { return params_[i].value; }
  const Tensor& value(std::size_t i) const { return params_[i].value; }

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Param> params_;
};

// One gradient accumulator per parameter, same shapes and order.
using GradSet = std::vector<Tensor>;

GradSet zero_grads(const ParamSet& params);
void zero(GradSet& grads);
// dst += src, parameter by parameter in index order.
void accumulate(GradSet& dst, const GradSet& src);
void scale(GradSet& grads, double factor);
double global_norm(const GradSet& grads);
// Rescales so the global L2 norm is at most max_norm. Returns the norm before.
double clip_global_norm(GradSet& grads, double max_norm);

namespace init {

void uniform(Tensor& t, double limit, std::mt19937_64& rng);
// U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
void xavier_uniform(Tensor& t, std::mt19937_64& rng);

}  // namespace init

}  // namespace mqa
