#include "mqa/params.hpp"

#include <cmath>

#include "mqa/kernels.hpp"

namespace mqa {

std::size_t ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  if (find(name)) {
    throw ContractViolation("duplicate parameter name: " + name);
  }
  params_.push_back({std::move(name), Tensor(std::move(shape))});
  return params_.size() - 1;
}

std::optional<std::size_t> ParamSet::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

GradSet zero_grads(const ParamSet& params) {
  GradSet g;
  g.reserve(params.size());
  for (const auto& p : params) g.emplace_back(p.value.shape());
  return g;
}

void zero(GradSet& grads) {
  for (auto& g : grads) g.fill(0.0);
}

void accumulate(GradSet& dst, const GradSet& src) {
  require_dim(src.size(), dst.size(), "gradient set");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    kernels::parallel::add_scaled(src[i], 1.0, dst[i]);
  }
}

void scale(GradSet& grads, double factor) {
  for (auto& g : grads) {
    for (auto& x : g.values()) x *= factor;
  }
}

double global_norm(const GradSet& grads) {
  double s = 0.0;
  for (const auto& g : grads) {
    for (double x : g.values()) s += x * x;
  }
  return std::sqrt(s);
}

double clip_global_norm(GradSet& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (norm > max_norm) scale(grads, max_norm / norm);
  return norm;
}

namespace init {

void uniform(Tensor& t, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& x : t.values()) x = dist(rng);
}

void xavier_uniform(Tensor& t, std::mt19937_64& rng) {
  const double fan_out = static_cast<double>(t.rows());
  const double fan_in = static_cast<double>(t.cols());
  const double denom = fan_in + fan_out;
  uniform(t, denom > 0 ? std::sqrt(6.0 / denom) : 0.0, rng);
}

}  // namespace init

}  // namespace mqa
