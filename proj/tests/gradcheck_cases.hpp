#pragma once

// Finite-difference scenarios for each layer and for the full ranking loss.
// Each returns the check result for one seed.

#include <random>

#include "mqa/gradcheck.hpp"
#include "mqa/layers.hpp"
#include "model_fixtures.hpp"

namespace mqa::testing::gradcases {

using nn::Sequence;

inline ParamSet point(
    std::initializer_list<std::pair<const char*, std::vector<std::size_t>>> shapes,
    std::mt19937_64& rng) {
  ParamSet ps;
  for (const auto& [name, shape] : shapes) {
    fill_normal(ps.value(ps.add(name, shape)), rng);
  }
  return ps;
}

inline double project(const Sequence& ys, const Sequence& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) s += dot(ys[i], r[i]);
  return s;
}

inline Sequence rows_of(const Tensor& t) {
  Sequence s;
  for (std::size_t i = 0; i < t.rows(); ++i) {
    s.emplace_back(t.row(i).begin(), t.row(i).end());
  }
  return s;
}

inline void add_rows(const Sequence& s, Tensor& t) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!s[i].empty()) axpy(1.0, s[i], t.row(i));
  }
}

inline GradCheckResult feed_forward(int seed, nn::Activation act) {
  std::mt19937_64 rng(100 + seed);
  ParamSet ps = point({{"x", {4}}, {"w", {3, 4}}, {"b", {3}}}, rng);
  const Vec r = random_vec(3, rng, 1.0);
  auto loss = [&](const ParamSet& p) {
    return dot(nn::feed_forward(p.value(0).values(), p.value(1), p.value(2), act), r);
  };
  GradSet g = zero_grads(ps);
  const Vec y = nn::feed_forward(ps.value(0).values(), ps.value(1), ps.value(2), act);
  nn::feed_forward_backward(ps.value(0).values(), y, r, ps.value(1), act, g[1],
                            g[2], g[0].values());
  return grad_check(loss, ps, g);
}

inline GradCheckResult softmax_ce(int seed) {
  std::mt19937_64 rng(200 + seed);
  ParamSet ps = point({{"logits", {6}}}, rng);
  const std::size_t k = seed % 6;
  auto loss = [&](const ParamSet& p) {
    Vec d(6);
    return nn::softmax_cross_entropy(p.value(0).values(), k, d);
  };
  GradSet g = zero_grads(ps);
  nn::softmax_cross_entropy(ps.value(0).values(), k, g[0].values());
  return grad_check(loss, ps, g);
}

inline GradCheckResult embedding(int seed) {
  std::mt19937_64 rng(300 + seed);
  ParamSet ps = point({{"table", {5, 3}}}, rng);
  const std::vector<nn::NGramId> ids{0, 3, 3, 4};
  const Vec r = random_vec(3, rng, 1.0);
  auto loss = [&](const ParamSet& p) {
    return dot(nn::embedding_sum(ids, p.value(0)), r);
  };
  GradSet g = zero_grads(ps);
  nn::embedding_sum_backward(ids, r, g[0]);
  return grad_check(loss, ps, g);
}

inline GradCheckResult bilstm(int seed) {
  std::mt19937_64 rng(400 + seed);
  const std::size_t D = 3, H = 2, T = 3;
  ParamSet ps = point({{"x", {T, D}},
                       {"h0", {H}},
                       {"fw", {4 * H, D}},
                       {"fu", {4 * H, H}},
                       {"fb", {4 * H}},
                       {"bw", {4 * H, D}},
                       {"bu", {4 * H, H}},
                       {"bb", {4 * H}}},
                      rng);
  Sequence r;
  for (std::size_t t = 0; t < T; ++t) r.push_back(random_vec(2 * H, rng, 1.0));
  auto run = [&](const ParamSet& p, nn::BiLstmTrace* tr) {
    return nn::bilstm({p.value(2), p.value(3), p.value(4)},
                      {p.value(5), p.value(6), p.value(7)}, rows_of(p.value(0)),
                      p.value(1).values(), tr);
  };
  auto loss = [&](const ParamSet& p) { return project(run(p, nullptr), r); };
  GradSet g = zero_grads(ps);
  nn::BiLstmTrace tr;
  run(ps, &tr);
  Sequence dx(T);
  const Vec dh0 = nn::bilstm_backward(
      {ps.value(2), ps.value(3), ps.value(4)}, {ps.value(5), ps.value(6), ps.value(7)},
      tr, r, {g[2], g[3], g[4]}, {g[5], g[6], g[7]}, dx);
  add_rows(dx, g[0]);
  axpy(1.0, dh0, g[1].values());
  return grad_check(loss, ps, g);
}

inline GradCheckResult lstm_final(int seed) {
  std::mt19937_64 rng(500 + seed);
  const std::size_t D = 3, H = 3, T = 4;
  ParamSet ps = point(
      {{"x", {T, D}}, {"w", {4 * H, D}}, {"u", {4 * H, H}}, {"b", {4 * H}}}, rng);
  const Vec r = random_vec(H, rng, 1.0);
  auto loss = [&](const ParamSet& p) {
    return dot(nn::lstm_final({p.value(1), p.value(2), p.value(3)}, rows_of(p.value(0))),
               r);
  };
  GradSet g = zero_grads(ps);
  const nn::LstmWeights wts{ps.value(1), ps.value(2), ps.value(3)};
  const auto tr = nn::lstm_forward(wts, rows_of(ps.value(0)), Vec(H, 0.0));
  Sequence dh(T), dx(T);
  dh[T - 1] = r;
  nn::lstm_backward(wts, tr, dh, {g[1], g[2], g[3]}, dx);
  add_rows(dx, g[0]);
  return grad_check(loss, ps, g);
}

inline GradCheckResult attention(int seed) {
  std::mt19937_64 rng(600 + seed);
  const std::size_t D = 3, T = 4;
  ParamSet ps = point({{"x", {T, D}},
                       {"wq", {D, D}},
                       {"wk", {D, D}},
                       {"wv", {D, D}},
                       {"wo", {D, D}},
                       {"bo", {D}}},
                      rng);
  Sequence r;
  for (std::size_t t = 0; t < T; ++t) r.push_back(random_vec(D, rng, 1.0));
  auto weights = [](const ParamSet& p) {
    return nn::AttentionWeights{p.value(1), p.value(2), p.value(3), p.value(4),
                                p.value(5)};
  };
  auto loss = [&](const ParamSet& p) {
    return project(nn::self_attention(weights(p), rows_of(p.value(0))), r);
  };
  GradSet g = zero_grads(ps);
  nn::AttentionTrace tr;
  nn::self_attention(weights(ps), rows_of(ps.value(0)), &tr);
  Sequence dx(T);
  nn::self_attention_backward(weights(ps), tr, r, {g[1], g[2], g[3], g[4], g[5]}, dx);
  add_rows(dx, g[0]);
  return grad_check(loss, ps, g);
}

// Cross-entropy of the full model for one variant (flags as in tiny_config).
inline GradCheckResult full_loss(int flags, int seed) {
  Model m = random_model(flags, 1000 + 31 * flags + seed);
  std::mt19937_64 rng(seed + 17 * flags);
  FeaturizedInput in = random_input(m.vocab.size(), rng);
  while (in.candidates.size() < 2) in.candidates.push_back(random_bag(m.vocab.size(), rng));
  const std::size_t label = rng() % (in.candidates.size() + 1);
  GradSet g = zero_grads(m.params);
  loss_and_grad(in, label, m, g);
  auto loss = [&](const ParamSet& p) {
    Model probe = m;
    probe.params = p;
    return nn::cross_entropy(score(in, probe).probs, label);
  };
  return grad_check(loss, m.params, g);
}

}  // namespace mqa::testing::gradcases
