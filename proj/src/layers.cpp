#include "mqa/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mqa/kernels.hpp"

namespace mqa::nn {

namespace kp = kernels::parallel;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Vec embedding_sum(std::span<const NGramId> ids, const Tensor& table) {
  Vec out(table.cols(), 0.0);
  for (NGramId id : ids) {
    if (id >= table.rows()) {
      throw DimensionError("n-gram id " + std::to_string(id) +
                           " outside embedding table of " +
                           std::to_string(table.rows()) + " rows");
    }
    axpy(1.0, table.row(id), out);
  }
  return out;
}

void embedding_sum_backward(std::span<const NGramId> ids,
                            std::span<const double> dy, Tensor& dtable) {
  require_dim(dy.size(), dtable.cols(), "embedding gradient");
  for (NGramId id : ids) {
    if (id >= dtable.rows()) throw DimensionError("n-gram id out of range");
    axpy(1.0, dy, dtable.row(id));
  }
}

Vec feed_forward(std::span<const double> x, const Tensor& w, const Tensor& b,
                 Activation act) {
  require_dim(b.size(), w.rows(), "feed_forward bias");
  Vec y(w.rows());
  kp::gemv(w, x, y);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] += b[i];
    if (act == Activation::kTanh) y[i] = std::tanh(y[i]);
  }
  return y;
}

void feed_forward_backward(std::span<const double> x, std::span<const double> y,
                           std::span<const double> dy, const Tensor& w,
                           Activation act, Tensor& dw, Tensor& db,
                           std::span<double> dx) {
  Vec dpre(dy.begin(), dy.end());
  if (act == Activation::kTanh) {
    for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] *= 1.0 - y[i] * y[i];
  }
  kp::ger_acc(dw, dpre, x);
  for (std::size_t i = 0; i < dpre.size(); ++i) db[i] += dpre[i];
  if (!dx.empty()) kp::gemv_t_acc(w, dpre, dx);
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw ContractViolation("softmax of empty vector");
  for (double x : logits) {
    if (std::isnan(x)) throw NumericError("NaN logit in softmax");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  Vec out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
  }
  Vec sorted = out;
  std::sort(sorted.begin(), sorted.end());
  double z = 0.0;
  for (double e : sorted) z += e;
  for (auto& p : out) p /= z;
  return out;
}

double cross_entropy(std::span<const double> probs, std::size_t k) {
  if (k >= probs.size()) {
    throw ContractViolation("label " + std::to_string(k) +
                            " out of range for " +
                            std::to_string(probs.size()) + " classes");
  }
  return -std::log(std::max(probs[k], kMinProb));
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t k,
                             std::span<double> dlogits) {
  const Vec p = softmax(logits);
  const double loss = cross_entropy(p, k);
  require_dim(dlogits.size(), logits.size(), "softmax_cross_entropy");
  if (p[k] < kMinProb) {
    std::fill(dlogits.begin(), dlogits.end(), 0.0);
  } else {
    for (std::size_t i = 0; i < p.size(); ++i) dlogits[i] = p[i];
    dlogits[k] -= 1.0;
  }
  return loss;
}

std::size_t argmax(std::span<const double> v) {
  if (v.empty()) throw ContractViolation("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

// ---------------------------------------------------------------- LSTM

LstmTrace lstm_forward(const LstmWeights& wts, const Sequence& seq,
                       std::span<const double> h0, bool reversed) {
  if (seq.empty()) throw ContractViolation("LSTM over empty sequence");
  const std::size_t H = wts.hidden();
  require_dim(wts.w.rows(), 4 * H, "LSTM input weights");
  require_dim(wts.u.rows(), 4 * H, "LSTM recurrent weights");
  require_dim(wts.b.size(), 4 * H, "LSTM bias");
  require_dim(h0.size(), H, "LSTM initial state");

  LstmTrace trace;
  trace.reversed = reversed;
  trace.steps.reserve(seq.size());
  Vec h(h0.begin(), h0.end());
  Vec c(H, 0.0);
  Vec pre(4 * H), rec(4 * H);
  const std::size_t T = seq.size();
  for (std::size_t s = 0; s < T; ++s) {
    const Vec& x = seq[reversed ? T - 1 - s : s];
    require_dim(x.size(), wts.input(), "LSTM input");
    kp::gemv(wts.w, x, pre);
    kp::gemv(wts.u, h, rec);
    LstmStep st;
    st.x = x;
    st.h_prev = h;
    st.c_prev = c;
    st.i.resize(H);
    st.f.resize(H);
    st.o.resize(H);
    st.g.resize(H);
    st.c.resize(H);
    st.tanh_c.resize(H);
    st.h.resize(H);
    for (std::size_t j = 0; j < H; ++j) {
      st.i[j] = sigmoid(pre[j] + rec[j] + wts.b[j]);
      st.f[j] = sigmoid(pre[H + j] + rec[H + j] + wts.b[H + j]);
      st.o[j] = sigmoid(pre[2 * H + j] + rec[2 * H + j] + wts.b[2 * H + j]);
      st.g[j] = std::tanh(pre[3 * H + j] + rec[3 * H + j] + wts.b[3 * H + j]);
      st.c[j] = st.f[j] * c[j] + st.i[j] * st.g[j];
      st.tanh_c[j] = std::tanh(st.c[j]);
      st.h[j] = st.o[j] * st.tanh_c[j];
    }
    h = st.h;
    c = st.c;
    trace.steps.push_back(std::move(st));
  }
  return trace;
}

Vec lstm_final(const LstmWeights& wts, const Sequence& seq) {
  const Vec h0(wts.hidden(), 0.0);
  return lstm_forward(wts, seq, h0).steps.back().h;
}

Vec lstm_backward(const LstmWeights& wts, const LstmTrace& trace,
                  const Sequence& dh_out, LstmGrads grads, Sequence& dx) {
  const std::size_t H = wts.hidden();
  const std::size_t T = trace.steps.size();
  require_dim(dh_out.size(), T, "LSTM output gradient");
  require_dim(dx.size(), T, "LSTM input gradient");
  Vec dh_next(H, 0.0), dc_next(H, 0.0), da(4 * H);
  for (std::size_t s = T; s-- > 0;) {
    const LstmStep& st = trace.steps[s];
    const std::size_t pos = trace.reversed ? T - 1 - s : s;
    Vec dh = dh_next;
    if (!dh_out[pos].empty()) axpy(1.0, dh_out[pos], dh);
    for (std::size_t j = 0; j < H; ++j) {
      const double d_o = dh[j] * st.tanh_c[j];
      const double dc =
          dh[j] * st.o[j] * (1.0 - st.tanh_c[j] * st.tanh_c[j]) + dc_next[j];
      const double di = dc * st.g[j];
      const double dg = dc * st.i[j];
      const double df = dc * st.c_prev[j];
      dc_next[j] = dc * st.f[j];
      da[j] = di * st.i[j] * (1.0 - st.i[j]);
      da[H + j] = df * st.f[j] * (1.0 - st.f[j]);
      da[2 * H + j] = d_o * st.o[j] * (1.0 - st.o[j]);
      da[3 * H + j] = dg * (1.0 - st.g[j] * st.g[j]);
    }
    kp::ger_acc(grads.w, da, st.x);
    kp::ger_acc(grads.u, da, st.h_prev);
    for (std::size_t j = 0; j < 4 * H; ++j) grads.b[j] += da[j];
    if (dx[pos].empty()) dx[pos].assign(wts.input(), 0.0);
    kp::gemv_t_acc(wts.w, da, dx[pos]);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    kp::gemv_t_acc(wts.u, da, dh_next);
  }
  return dh_next;
}

Sequence bilstm(const LstmWeights& fwd, const LstmWeights& bwd,
                const Sequence& seq, std::span<const double> h0,
                BiLstmTrace* trace) {
  require_dim(bwd.hidden(), fwd.hidden(), "bi-LSTM hidden sizes");
  BiLstmTrace local;
  BiLstmTrace& t = trace ? *trace : local;
  t.fwd = lstm_forward(fwd, seq, h0, false);
  t.bwd = lstm_forward(bwd, seq, h0, true);
  const std::size_t T = seq.size();
  const std::size_t H = fwd.hidden();
  Sequence out(T, Vec(2 * H));
  for (std::size_t p = 0; p < T; ++p) {
    const Vec& hf = t.fwd.steps[p].h;
    const Vec& hb = t.bwd.steps[T - 1 - p].h;
    std::copy(hf.begin(), hf.end(), out[p].begin());
    std::copy(hb.begin(), hb.end(), out[p].begin() + H);
  }
  return out;
}

Vec bilstm_backward(const LstmWeights& fwd, const LstmWeights& bwd,
                    const BiLstmTrace& trace, const Sequence& dy,
                    LstmGrads gfwd, LstmGrads gbwd, Sequence& dx) {
  const std::size_t T = dy.size();
  const std::size_t H = fwd.hidden();
  Sequence dfwd(T), dbwd(T);
  for (std::size_t p = 0; p < T; ++p) {
    require_dim(dy[p].size(), 2 * H, "bi-LSTM output gradient");
    dfwd[p].assign(dy[p].begin(), dy[p].begin() + H);
    dbwd[p].assign(dy[p].begin() + H, dy[p].end());
  }
  Vec dh0 = lstm_backward(fwd, trace.fwd, dfwd, gfwd, dx);
  axpy(1.0, lstm_backward(bwd, trace.bwd, dbwd, gbwd, dx), dh0);
  return dh0;
}

// ------------------------------------------------------- self-attention

Sequence self_attention(const AttentionWeights& wts, const Sequence& seq,
                        AttentionTrace* trace) {
  if (seq.empty()) throw ContractViolation("self-attention over empty sequence");
  const std::size_t n = seq.size();
  const std::size_t D = wts.wq.cols();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(wts.wk.rows()));
  AttentionTrace local;
  AttentionTrace& t = trace ? *trace : local;
  t.x = seq;
  t.q.assign(n, Vec(wts.wq.rows()));
  t.k.assign(n, Vec(wts.wk.rows()));
  t.v.assign(n, Vec(wts.wv.rows()));
  for (std::size_t i = 0; i < n; ++i) {
    require_dim(seq[i].size(), D, "attention input");
    kp::gemv(wts.wq, seq[i], t.q[i]);
    kp::gemv(wts.wk, seq[i], t.k[i]);
    kp::gemv(wts.wv, seq[i], t.v[i]);
  }
  t.weights.assign(n, Vec());
  t.z.assign(n, Vec(wts.wv.rows(), 0.0));
  t.out.assign(n, Vec());
  Sequence y(n);
  Vec scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = dot(t.q[i], t.k[j]) * inv_sqrt;
    }
    t.weights[i] = softmax(scores);
    for (std::size_t j = 0; j < n; ++j) axpy(t.weights[i][j], t.v[j], t.z[i]);
    t.out[i] = feed_forward(t.z[i], wts.wo, wts.bo, Activation::kTanh);
    require_dim(t.out[i].size(), D, "attention output projection");
    y[i] = seq[i];
    axpy(1.0, t.out[i], y[i]);
  }
  return y;
}

void self_attention_backward(const AttentionWeights& wts,
                             const AttentionTrace& t, const Sequence& dy,
                             AttentionGrads grads, Sequence& dx) {
  const std::size_t n = t.x.size();
  const std::size_t D = wts.wq.cols();
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(wts.wk.rows()));
  require_dim(dy.size(), n, "attention output gradient");
  require_dim(dx.size(), n, "attention input gradient");
  Sequence dz(n, Vec(wts.wv.rows(), 0.0));
  Sequence dq(n, Vec(wts.wq.rows(), 0.0));
  Sequence dk(n, Vec(wts.wk.rows(), 0.0));
  Sequence dv(n, Vec(wts.wv.rows(), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (dx[i].empty()) dx[i].assign(D, 0.0);
    axpy(1.0, dy[i], dx[i]);
    feed_forward_backward(t.z[i], t.out[i], dy[i], wts.wo, Activation::kTanh,
                          grads.wo, grads.bo, dz[i]);
  }
  Vec da(n), ds(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& a = t.weights[i];
    double mean = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      axpy(a[j], dz[i], dv[j]);
      da[j] = dot(dz[i], t.v[j]);
      mean += a[j] * da[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
      ds[j] = a[j] * (da[j] - mean) * inv_sqrt;
      axpy(ds[j], t.k[j], dq[i]);
      axpy(ds[j], t.q[i], dk[j]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    kp::ger_acc(grads.wq, dq[i], t.x[i]);
    kp::ger_acc(grads.wk, dk[i], t.x[i]);
    kp::ger_acc(grads.wv, dv[i], t.x[i]);
    kp::gemv_t_acc(wts.wq, dq[i], dx[i]);
    kp::gemv_t_acc(wts.wk, dk[i], dx[i]);
    kp::gemv_t_acc(wts.wv, dv[i], dx[i]);
  }
}

}  // namespace mqa::nn
