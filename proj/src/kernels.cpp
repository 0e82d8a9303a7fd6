#include "mqa/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mqa::kernels {

namespace {

void check_gemv(const Tensor& w, std::size_t x, std::size_t y) {
  require_dim(x, w.cols(), "gemv input");
  require_dim(y, w.rows(), "gemv output");
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace serial {

void gemv(const Tensor& w, std::span<const double> x, std::span<double> y) {
  check_gemv(w, x.size(), y.size());
  const std::size_t rows = w.rows(), cols = w.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = w.data() + i * cols;
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) s += wr[j] * x[j];
    y[i] = s;
  }
}

void gemv_t_acc(const Tensor& w, std::span<const double> dy,
                std::span<double> dx) {
  check_gemv(w, dx.size(), dy.size());
  const std::size_t rows = w.rows(), cols = w.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wr = w.data() + i * cols;
    const double g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) dx[j] += wr[j] * g;
  }
}

void ger_acc(Tensor& dw, std::span<const double> dy,
             std::span<const double> x) {
  check_gemv(dw, x.size(), dy.size());
  const std::size_t rows = dw.rows(), cols = dw.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    double* wr = dw.data() + i * cols;
    const double g = dy[i];
    for (std::size_t j = 0; j < cols; ++j) wr[j] += g * x[j];
  }
}

void add_scaled(const Tensor& x, double alpha, Tensor& y) {
  require_dim(y.size(), x.size(), "add_scaled");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

}  // namespace serial

namespace parallel {

void gemv(const Tensor& w, std::span<const double> x, std::span<double> y) {
  check_gemv(w, x.size(), y.size());
  const long rows = static_cast<long>(w.rows());
  const long cols = static_cast<long>(w.cols());
#pragma omp parallel for schedule(static) if (rows * cols >= kMinParallelWork)
  for (long i = 0; i < rows; ++i) {
    const double* wr = w.data() + i * cols;
    double s = 0.0;
    for (long j = 0; j < cols; ++j) s += wr[j] * x[j];
    y[i] = s;
  }
}

// Parallel over output columns; each dx[j] still accumulates rows in
// ascending order, matching the serial loop.
void gemv_t_acc(const Tensor& w, std::span<const double> dy,
                std::span<double> dx) {
  check_gemv(w, dx.size(), dy.size());
  const long rows = static_cast<long>(w.rows());
  const long cols = static_cast<long>(w.cols());
#pragma omp parallel for schedule(static) if (rows * cols >= kMinParallelWork)
  for (long j = 0; j < cols; ++j) {
    double acc = dx[j];
    for (long i = 0; i < rows; ++i) acc += w.data()[i * cols + j] * dy[i];
    dx[j] = acc;
  }
}

void ger_acc(Tensor& dw, std::span<const double> dy,
             std::span<const double> x) {
  check_gemv(dw, x.size(), dy.size());
  const long rows = static_cast<long>(dw.rows());
  const long cols = static_cast<long>(dw.cols());
#pragma omp parallel for schedule(static) if (rows * cols >= kMinParallelWork)
  for (long i = 0; i < rows; ++i) {
    double* wr = dw.data() + i * cols;
    const double g = dy[i];
    for (long j = 0; j < cols; ++j) wr[j] += g * x[j];
  }
}

void add_scaled(const Tensor& x, double alpha, Tensor& y) {
  require_dim(y.size(), x.size(), "add_scaled");
  const long n = static_cast<long>(x.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallelWork)
  for (long i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace parallel

}  // namespace mqa::kernels
