#include <random>

#include "doctest.h"
#include "mqa/kernels.hpp"

using namespace mqa;

namespace {

Tensor random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  Tensor t(r, c);
  std::normal_distribution<double> n;
  for (auto& x : t.values()) x = n(rng);
  return t;
}

Vec random_vec(std::size_t n, std::mt19937_64& rng) {
  Vec v(n);
  std::normal_distribution<double> d;
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST_CASE("parallel kernels match the serial reference bit for bit") {
  std::mt19937_64 rng(3);
  // Large enough to cross kMinParallelWork.
  for (auto [r, c] : {std::pair{3, 5}, std::pair{257, 300}, std::pair{1, 40000}}) {
    const Tensor w = random_matrix(r, c, rng);
    const Vec x = random_vec(c, rng);
    const Vec dy = random_vec(r, rng);

    Vec ys(r), yp(r);
    kernels::serial::gemv(w, x, ys);
    kernels::parallel::gemv(w, x, yp);
    CHECK(ys == yp);

    Vec dxs = random_vec(c, rng);
    Vec dxp = dxs;
    kernels::serial::gemv_t_acc(w, dy, dxs);
    kernels::parallel::gemv_t_acc(w, dy, dxp);
    CHECK(dxs == dxp);

    Tensor gs = random_matrix(r, c, rng);
    Tensor gp = gs;
    kernels::serial::ger_acc(gs, dy, x);
    kernels::parallel::ger_acc(gp, dy, x);
    CHECK(gs == gp);
  }
}

TEST_CASE("gemv hand example") {
  Tensor w(2, 2);
  w.at(0, 0) = 1;
  w.at(0, 1) = 2;
  w.at(1, 0) = 3;
  w.at(1, 1) = 4;
  Vec y(2);
  kernels::serial::gemv(w, Vec{1, 1}, y);
  CHECK(y == Vec{3, 7});
}

TEST_CASE("shape mismatch raises DimensionError") {
  Tensor w(2, 3);
  Vec y(2);
  CHECK_THROWS_AS(kernels::parallel::gemv(w, Vec{1, 2}, y), DimensionError);
}
