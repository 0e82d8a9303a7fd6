#pragma once

#include <span>

#include "mqa/tensor.hpp"

// Dense linear-algebra kernels used by every layer. Each kernel exists twice:
// `serial` is the plain reference loop nest, `parallel` splits the outer loop
// across OpenMP threads. Both perform the same floating-point operations in
// the same order per output element, so results are bit-identical.
namespace mqa::kernels {

namespace serial {

// y = W x
void gemv(const Tensor& w, std::span<const double> x, std::span<double> y);
// dx += W^T dy
void gemv_t_acc(const Tensor& w, std::span<const double> dy,
                std::span<double> dx);
// dW += dy x^T
void ger_acc(Tensor& dw, std::span<const double> dy, std::span<const double> x);
// y += alpha * x over whole tensors
void add_scaled(const Tensor& x, double alpha, Tensor& y);

}  // namespace serial

namespace parallel {

void gemv(const Tensor& w, std::span<const double> x, std::span<double> y);
void gemv_t_acc(const Tensor& w, std::span<const double> dy,
                std::span<double> dx);
void ger_acc(Tensor& dw, std::span<const double> dy, std::span<const double> x);
void add_scaled(const Tensor& x, double alpha, Tensor& y);

}  // namespace parallel

// Loops smaller than this many multiply-adds stay on the calling thread.
inline constexpr long kMinParallelWork = 1 << 15;

int max_threads();

}  // namespace mqa::kernels
