#include <cmath>
#include <random>

#include "doctest.h"
#include "mqa/gradcheck.hpp"
#include "mqa/layers.hpp"
#include "mqa/optim.hpp"
#include "gradcheck_cases.hpp"
#include "reference.hpp"
#include "test_util.hpp"

using namespace mqa;
using nn::Sequence;

namespace {

using reference::as_matrix;
using testing::fill_normal;
using testing::random_vec;

std::vector<Vec> reference_lstm(const reference::Matrix& w,
                                const reference::Matrix& u, const Vec& b,
                                const Sequence& xs, Vec h) {
  return reference::lstm(w, u, b, xs, std::move(h));
}

struct LstmParams {
  Tensor w, u, b;
  LstmParams(std::size_t in, std::size_t H, std::mt19937_64& rng)
      : w(4 * H, in), u(4 * H, H), b(4 * H) {
    fill_normal(w, rng);
    fill_normal(u, rng);
    fill_normal(b, rng);
  }
  nn::LstmWeights view() const { return {w, u, b}; }
};

}  // namespace

TEST_CASE("embedding_sum") {
  Tensor table(3, 2);
  table.at(0, 0) = 1.0;
  table.at(0, 1) = -2.0;
  table.at(1, 0) = 0.25;
  table.at(1, 1) = 4.0;
  SUBCASE("empty bag is the zero vector") {
    CHECK(nn::embedding_sum({}, table) == Vec{0.0, 0.0});
  }
  SUBCASE("single id returns its row") {
    const std::vector<nn::NGramId> ids{0};
    CHECK(nn::embedding_sum(ids, table) == Vec{1.0, -2.0});
  }
  SUBCASE("multiplicity counts") {
    const std::vector<nn::NGramId> ids{0, 0, 1};
    CHECK(nn::embedding_sum(ids, table) == Vec{2.25, 0.0});
  }
  SUBCASE("out of range id") {
    const std::vector<nn::NGramId> ids{3};
    CHECK_THROWS_AS(nn::embedding_sum(ids, table), DimensionError);
  }
  SUBCASE("backward scatters with multiplicity") {
    Tensor g(3, 2);
    const std::vector<nn::NGramId> ids{1, 1, 2};
    nn::embedding_sum_backward(ids, Vec{1.0, 0.5}, g);
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(1, 0) == 2.0);
    CHECK(g.at(1, 1) == 1.0);
    CHECK(g.at(2, 1) == 0.5);
  }
}

TEST_CASE("feed_forward examples") {
  Tensor w(2, 2), b(2);
  SUBCASE("zero map under tanh") {
    CHECK(nn::feed_forward(Vec{0.3, -1.0}, w, b, nn::Activation::kTanh) ==
          Vec{0.0, 0.0});
  }
  SUBCASE("identity") {
    w.at(0, 0) = w.at(1, 1) = 1.0;
    CHECK(nn::feed_forward(Vec{0.3, -1.0}, w, b, nn::Activation::kIdentity) ==
          Vec{0.3, -1.0});
  }
  SUBCASE("hand multiply") {
    w.at(0, 0) = 1;
    w.at(0, 1) = 2;
    w.at(1, 0) = 3;
    w.at(1, 1) = 4;
    b[0] = 0.5;
    b[1] = -0.5;
    CHECK(nn::feed_forward(Vec{1, 1}, w, b, nn::Activation::kIdentity) ==
          Vec{3.5, 6.5});
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(
        nn::feed_forward(Vec{1, 2, 3}, w, b, nn::Activation::kTanh),
        DimensionError);
  }
}

TEST_CASE("softmax") {
  SUBCASE("equal logits are uniform") {
    const auto p = nn::softmax(Vec{2.5, 2.5, 2.5, 2.5});
    for (double x : p) CHECK(x == doctest::Approx(0.25).epsilon(1e-15));
  }
  SUBCASE("closed form [0, ln 2]") {
    const auto p = nn::softmax(Vec{0.0, std::log(2.0)});
    CHECK(std::abs(p[0] - 1.0 / 3.0) < 1e-15);
    CHECK(std::abs(p[1] - 2.0 / 3.0) < 1e-15);
  }
  SUBCASE("NaN rejected") {
    CHECK_THROWS_AS(nn::softmax(Vec{0.0, std::nan("")}), NumericError);
  }
  SUBCASE("properties over random logits") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 40);
    std::uniform_real_distribution<double> shift(-50, 50);
    for (int trial = 0; trial < 500; ++trial) {
      const Vec x = random_vec(len(rng), rng, 5.0);
      const Vec p = nn::softmax(x);
      double s = 0.0;
      for (double v : p) {
        CHECK(v > 0.0);
        s += v;
      }
      CHECK(std::abs(s - 1.0) <= 1e-12);
      Vec shifted = x;
      const double c = shift(rng);
      for (auto& v : shifted) v += c;
      const Vec q = nn::softmax(shifted);
      for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::abs(p[i] - q[i]) <= 1e-12);
      }
    }
  }
}

TEST_CASE("cross_entropy") {
  CHECK(nn::cross_entropy(Vec{0.0, 1.0}, 1) == 0.0);
  CHECK(nn::cross_entropy(Vec{0.25, 0.25, 0.25, 0.25}, 3) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-15));
  CHECK(nn::cross_entropy(Vec{0.5, 0.5}, 0) ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(nn::cross_entropy(Vec{1.0, 0.0}, 1) ==
        doctest::Approx(-std::log(1e-30)));
  CHECK_THROWS_AS(nn::cross_entropy(Vec{1.0}, 1), ContractViolation);
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(nn::argmax(Vec{0.25, 0.25, 0.25, 0.25}) == 0);
  CHECK(nn::argmax(Vec{0.1, 0.45, 0.45}) == 1);
}

TEST_CASE("LSTM") {
  std::mt19937_64 rng(5);
  SUBCASE("zero parameters give zero outputs") {
    Tensor w(12, 4), u(12, 3), b(12);
    const nn::LstmWeights z{w, u, b};
    Sequence seq{random_vec(4, rng), random_vec(4, rng), random_vec(4, rng)};
    for (const auto& h : nn::bilstm(z, z, seq, Vec(3, 0.0))) {
      for (double x : h) CHECK(x == 0.0);
    }
    for (double x : nn::lstm_final(z, seq)) CHECK(x == 0.0);
  }
  SUBCASE("length-1 bi-LSTM halves agree for shared weights") {
    LstmParams p(4, 3, rng);
    const auto out =
        nn::bilstm(p.view(), p.view(), {random_vec(4, rng)}, random_vec(3, rng));
    REQUIRE(out.size() == 1);
    for (std::size_t j = 0; j < 3; ++j) CHECK(out[0][j] == out[0][j + 3]);
  }
  SUBCASE("length-1 lstm_final is one step") {
    LstmParams p(4, 3, rng);
    const Sequence seq{random_vec(4, rng)};
    const auto ref = reference_lstm(as_matrix(p.w), as_matrix(p.u),
                                    Vec(p.b.values().begin(), p.b.values().end()),
                                    seq, Vec(3, 0.0));
    const Vec got = nn::lstm_final(p.view(), seq);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(got[j] - ref[0][j]) < 1e-15);
  }
  SUBCASE("lstm_final matches the reference recurrence on length 4") {
    LstmParams p(5, 3, rng);
    Sequence seq;
    for (int i = 0; i < 4; ++i) seq.push_back(random_vec(5, rng));
    const Vec b(p.b.values().begin(), p.b.values().end());
    const auto ref =
        reference_lstm(as_matrix(p.w), as_matrix(p.u), b, seq, Vec(3, 0.0));
    const Vec got = nn::lstm_final(p.view(), seq);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(got[j] - ref.back()[j]) < 1e-12);
  }
  SUBCASE("bi-LSTM matches the reference recurrence on length 3") {
    LstmParams f(4, 2, rng), g(4, 2, rng);
    Sequence seq{random_vec(4, rng), random_vec(4, rng), random_vec(4, rng)};
    const Vec h0 = random_vec(2, rng);
    const auto out = nn::bilstm(f.view(), g.view(), seq, h0);
    const auto fwd = reference_lstm(as_matrix(f.w), as_matrix(f.u),
                                    Vec(f.b.values().begin(), f.b.values().end()),
                                    seq, h0);
    Sequence rev(seq.rbegin(), seq.rend());
    const auto bwd = reference_lstm(as_matrix(g.w), as_matrix(g.u),
                                    Vec(g.b.values().begin(), g.b.values().end()),
                                    rev, h0);
    for (std::size_t p = 0; p < 3; ++p) {
      for (std::size_t j = 0; j < 2; ++j) {
        CHECK(std::abs(out[p][j] - fwd[p][j]) < 1e-12);
        CHECK(std::abs(out[p][2 + j] - bwd[2 - p][j]) < 1e-12);
      }
    }
  }
  SUBCASE("empty sequence") {
    LstmParams p(2, 2, rng);
    CHECK_THROWS_AS(nn::lstm_final(p.view(), {}), ContractViolation);
  }
}

namespace {

struct AttentionParams {
  Tensor wq, wk, wv, wo, bo;
  AttentionParams(std::size_t d, std::mt19937_64& rng)
      : wq(d, d), wk(d, d), wv(d, d), wo(d, d), bo(d) {
    for (Tensor* t : {&wq, &wk, &wv, &wo, &bo}) fill_normal(*t, rng);
  }
  nn::AttentionWeights view() const { return {wq, wk, wv, wo, bo}; }
};

Vec matvec(const Tensor& w, const Vec& x) {
  Vec y(w.rows(), 0.0);
  for (std::size_t r = 0; r < w.rows(); ++r)
    for (std::size_t c = 0; c < w.cols(); ++c) y[r] += w.at(r, c) * x[c];
  return y;
}

}  // namespace

TEST_CASE("self-attention") {
  std::mt19937_64 rng(8);
  SUBCASE("length 1 puts all weight on itself") {
    AttentionParams p(3, rng);
    nn::AttentionTrace t;
    nn::self_attention(p.view(), {random_vec(3, rng)}, &t);
    CHECK(t.weights[0][0] == 1.0);
  }
  SUBCASE("identical inputs give identical outputs") {
    AttentionParams p(4, rng);
    const Vec x = random_vec(4, rng);
    const auto y = nn::self_attention(p.view(), {x, x, x, x});
    for (const auto& yi : y) CHECK(yi == y[0]);
  }
  SUBCASE("matches a hand-unrolled computation on length 3") {
    AttentionParams p(2, rng);
    const Sequence x{random_vec(2, rng), random_vec(2, rng), random_vec(2, rng)};
    const auto y = nn::self_attention(p.view(), x);
    for (std::size_t i = 0; i < 3; ++i) {
      const Vec q = matvec(p.wq, x[i]);
      double e[3], z = 0;
      for (std::size_t j = 0; j < 3; ++j) {
        const Vec k = matvec(p.wk, x[j]);
        e[j] = std::exp((q[0] * k[0] + q[1] * k[1]) / std::sqrt(2.0));
        z += e[j];
      }
      Vec ctx(2, 0.0);
      for (std::size_t j = 0; j < 3; ++j) {
        const Vec v = matvec(p.wv, x[j]);
        ctx[0] += e[j] / z * v[0];
        ctx[1] += e[j] / z * v[1];
      }
      const Vec o = matvec(p.wo, ctx);
      for (std::size_t r = 0; r < 2; ++r) {
        const double want = x[i][r] + std::tanh(o[r] + p.bo[r]);
        CHECK(std::abs(y[i][r] - want) < 1e-12);
      }
    }
  }
  SUBCASE("empty sequence") {
    AttentionParams p(2, rng);
    CHECK_THROWS_AS(nn::self_attention(p.view(), {}), ContractViolation);
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    ParamSet ps;
    ps.add("w", {3});
    ps.value(0)[1] = 0.7;
    const ParamSet before = ps;
    AdamState st;
    for (int i = 0; i < 5; ++i) adam_step(ps, zero_grads(ps), st);
    CHECK(ps == before);
    CHECK(st.step == 5);
  }
  SUBCASE("first step moves by about lr") {
    ParamSet ps;
    ps.add("w", {1});
    ps.value(0)[0] = 1.0;
    GradSet g = zero_grads(ps);
    g[0][0] = 1.0;
    AdamState st;
    st.lr = 0.1;
    adam_step(ps, g, st);
    // m_hat = 1, v_hat = 1 -> step = lr / (1 + eps)
    CHECK(ps.value(0)[0] == doctest::Approx(0.9).epsilon(1e-9));
  }
}

// ------------------------------------------------------------ grad checks

namespace {
constexpr int kSeeds = 20;
namespace gc = testing::gradcases;
}  // namespace

TEST_CASE("feed_forward gradient matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    for (auto act : {nn::Activation::kTanh, nn::Activation::kIdentity}) {
      const auto res = gc::feed_forward(seed, act);
      CHECK_MESSAGE(res.max_rel_error < 1e-6, "seed ", seed, " ", res.worst_param);
    }
  }
}

TEST_CASE("softmax cross-entropy gradient matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    CHECK_MESSAGE(gc::softmax_ce(seed).max_rel_error < 1e-6, "seed ", seed);
  }
}

TEST_CASE("embedding_sum gradient matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    CHECK(gc::embedding(seed).max_rel_error < 1e-6);
  }
}

TEST_CASE("bi-LSTM gradient matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto res = gc::bilstm(seed);
    CHECK_MESSAGE(res.max_rel_error < 1e-5, "seed ", seed, " ", res.worst_param,
                  " ", res.max_rel_error);
  }
}

TEST_CASE("lstm_final gradient matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    CHECK(gc::lstm_final(seed).max_rel_error < 1e-5);
  }
}

TEST_CASE("self-attention gradient matches finite differences") {
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto res = gc::attention(seed);
    CHECK_MESSAGE(res.max_rel_error < 1e-5, "seed ", seed, " ", res.worst_param);
  }
}
