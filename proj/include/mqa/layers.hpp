#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mqa/tensor.hpp"

// Forward and backward passes for the building blocks of the ranker. Backward
// functions accumulate (+=) into the gradient buffers they are handed, so a
// caller can sum over many examples before an optimizer step.
namespace mqa::nn {

using NGramId = std::uint32_t;
using Sequence = std::vector<Vec>;

// Sum of table rows selected by `ids`, counting duplicates.
Vec embedding_sum(std::span<const NGramId> ids, const Tensor& table);
void embedding_sum_backward(std::span<const NGramId> ids,
                            std::span<const double> dy, Tensor& dtable);

enum class Activation { kTanh, kIdentity };

// activation(W x + b)
Vec feed_forward(std::span<const double> x, const Tensor& w, const Tensor& b,
                 Activation act);
// `y` is the forward output. `dx` may be empty when the input gradient is
// not needed.
void feed_forward_backward(std::span<const double> x, std::span<const double> y,
                           std::span<const double> dy, const Tensor& w,
                           Activation act, Tensor& dw, Tensor& db,
                           std::span<double> dx);

// Numerically stable softmax. The normalizer is summed in ascending order of
// the exponentiated terms, which makes the result independent of the order of
// the logits.
Vec softmax(std::span<const double> logits);

inline constexpr double kMinProb = 1e-30;

double cross_entropy(std::span<const double> probs, std::size_t k);
// Loss of softmax(logits) at label k; writes d loss / d logits into dlogits.
double softmax_cross_entropy(std::span<const double> logits, std::size_t k,
                             std::span<double> dlogits);

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> v);

// ---------------------------------------------------------------- LSTM

// Gate rows are stacked [input; forget; output; candidate], each `hidden` tall.
struct LstmWeights {
  const Tensor& w;  // 4H x in
  const Tensor& u;  // 4H x H
  const Tensor& b;  // 4H
  std::size_t hidden() const { return u.cols(); }
  std::size_t input() const { return w.cols(); }
};

struct LstmGrads {
  Tensor& w;
  Tensor& u;
  Tensor& b;
};

struct LstmStep {
  Vec x, h_prev, c_prev;
  Vec i, f, o, g;
  Vec c, tanh_c, h;
};

struct LstmTrace {
  std::vector<LstmStep> steps;  // in processing order
  bool reversed = false;
};

// Runs the recurrence from (h0, c = 0). With `reversed` the sequence is read
// back to front; trace.steps stays in processing order.
LstmTrace lstm_forward(const LstmWeights& wts, const Sequence& seq,
                       std::span<const double> h0, bool reversed = false);

// Hidden state after the last element of a unidirectional pass, h0 = c0 = 0.
Vec lstm_final(const LstmWeights& wts, const Sequence& seq);

// dh_out[t] is the gradient on the hidden output at sequence position t
// (empty entries are treated as zero). Input gradients are added into dx
// (indexed by sequence position). Returns the gradient on h0.
Vec lstm_backward(const LstmWeights& wts, const LstmTrace& trace,
                  const Sequence& dh_out, LstmGrads grads, Sequence& dx);

struct BiLstmTrace {
  LstmTrace fwd, bwd;
};

// Per-position [h_fwd; h_bwd]. Both directions start from h0 and zero cell.
Sequence bilstm(const LstmWeights& fwd, const LstmWeights& bwd,
                const Sequence& seq, std::span<const double> h0,
                BiLstmTrace* trace = nullptr);

Vec bilstm_backward(const LstmWeights& fwd, const LstmWeights& bwd,
                    const BiLstmTrace& trace, const Sequence& dy,
                    LstmGrads gfwd, LstmGrads gbwd, Sequence& dx);

// ------------------------------------------------------- self-attention

// Single-head scaled dot-product attention followed by a position-wise tanh
// projection and a residual connection:
//   y_i = x_i + tanh(Wo sum_j a_ij (Wv x_j) + bo),
//   a_i = softmax_j((Wq x_i) . (Wk x_j) / sqrt(D)).
struct AttentionWeights {
  const Tensor& wq;
  const Tensor& wk;
  const Tensor& wv;
  const Tensor& wo;
  const Tensor& bo;
};

struct AttentionGrads {
  Tensor& wq;
  Tensor& wk;
  Tensor& wv;
  Tensor& wo;
  Tensor& bo;
};

struct AttentionTrace {
  Sequence x, q, k, v, z, out;
  std::vector<Vec> weights;  // weights[i][j] = a_ij
};

Sequence self_attention(const AttentionWeights& wts, const Sequence& seq,
                        AttentionTrace* trace = nullptr);

void self_attention_backward(const AttentionWeights& wts,
                             const AttentionTrace& trace, const Sequence& dy,
                             AttentionGrads grads, Sequence& dx);

}  // namespace mqa::nn
