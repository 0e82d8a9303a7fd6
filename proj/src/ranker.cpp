#include "mqa/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#include "json.hpp"
#include "mqa/kernels.hpp"

namespace mqa {

namespace kp = kernels::parallel;
using nn::Activation;
using nn::Sequence;

// ---------------------------------------------------------------- config

std::string ModelConfig::variant() const {
  std::string v;
  auto add = [&](const char* s) {
    if (!v.empty()) v += "+";
    v += s;
  };
  if (use_answer_lstm) add("lstm");
  if (use_attention) add("attention");
  if (use_conv_context) add("context");
  return v.empty() ? "baseline" : v;
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v < 1) throw ConfigError(std::string(name) + " must be >= 1");
  };
  positive(embed_dim, "embed_dim");
  positive(ff_layers, "ff_layers");
  positive(ff_size, "ff_size");
  positive(lstm_hidden, "lstm_hidden");
  positive(max_history, "max_history");
  positive(unigram_cap, "unigram_cap");
  positive(bigram_cap, "bigram_cap");
  positive(max_candidates, "max_candidates");
  positive(max_sentence_tokens, "max_sentence_tokens");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"embed_dim", c.embed_dim},
                     {"ff_layers", c.ff_layers},
                     {"ff_size", c.ff_size},
                     {"lstm_hidden", c.lstm_hidden},
                     {"use_answer_lstm", c.use_answer_lstm},
                     {"use_attention", c.use_attention},
                     {"use_conv_context", c.use_conv_context},
                     {"max_history", c.max_history},
                     {"unigram_cap", c.unigram_cap},
                     {"bigram_cap", c.bigram_cap},
                     {"max_candidates", c.max_candidates},
                     {"max_sentence_tokens", c.max_sentence_tokens}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  j.at("embed_dim").get_to(c.embed_dim);
  j.at("ff_layers").get_to(c.ff_layers);
  j.at("ff_size").get_to(c.ff_size);
  j.at("lstm_hidden").get_to(c.lstm_hidden);
  j.at("use_answer_lstm").get_to(c.use_answer_lstm);
  j.at("use_attention").get_to(c.use_attention);
  j.at("use_conv_context").get_to(c.use_conv_context);
  j.at("max_history").get_to(c.max_history);
  j.at("unigram_cap").get_to(c.unigram_cap);
  j.at("bigram_cap").get_to(c.bigram_cap);
  j.at("max_candidates").get_to(c.max_candidates);
  j.at("max_sentence_tokens").get_to(c.max_sentence_tokens);
}

// ---------------------------------------------------------------- params

ParamSet make_param_shapes(const ModelConfig& c, std::size_t vocab_size,
                           ParamLayout* layout) {
  c.validate();
  ParamSet ps;
  ParamLayout l;
  const std::size_t d = c.embed_dim, f = c.ff_size, h = c.lstm_hidden;
  l.embedding = ps.add("embedding", {vocab_size, d});
  for (const char* tower : {"question", "candidate"}) {
    auto& ws = std::string(tower) == "question" ? l.question_w : l.candidate_w;
    auto& bs = std::string(tower) == "question" ? l.question_b : l.candidate_b;
    for (std::size_t i = 0; i < c.ff_layers; ++i) {
      const std::string prefix =
          std::string(tower) + ".ff" + std::to_string(i);
      ws.push_back(ps.add(prefix + ".w", {f, i == 0 ? d : f}));
      bs.push_back(ps.add(prefix + ".b", {f}));
    }
  }
  l.no_answer = ps.add("no_answer", {f});
  auto lstm = [&](const std::string& prefix, std::size_t in) {
    return ParamLayout::Lstm{ps.add(prefix + ".w", {4 * h, in}),
                             ps.add(prefix + ".u", {4 * h, h}),
                             ps.add(prefix + ".b", {4 * h})};
  };
  l.answer_fwd = lstm("answer_lstm.fwd", d);
  l.answer_bwd = lstm("answer_lstm.bwd", d);
  l.answer_h0 = ps.add("answer_lstm.h0_proj", {h, d});
  l.answer_merge = ps.add("answer_lstm.merge", {d, 2 * h});
  l.att_q = ps.add("attention.wq", {d, d});
  l.att_k = ps.add("attention.wk", {d, d});
  l.att_v = ps.add("attention.wv", {d, d});
  l.att_o = ps.add("attention.wo", {d, d});
  l.att_bo = ps.add("attention.bo", {d});
  l.context = lstm("context_lstm", d);
  l.context_merge = ps.add("context_lstm.merge", {d, h});
  if (layout) *layout = l;
  return ps;
}

ParamLayout layout_for(const ModelConfig& c) {
  ParamLayout l;
  make_param_shapes(c, 0, &l);
  return l;
}

Model Model::create(const ModelConfig& config, NGramVocab vocab,
                    std::uint64_t seed) {
  Model m;
  m.config = config;
  m.params = make_param_shapes(config, vocab.size(), &m.layout);
  m.vocab = std::move(vocab);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    Tensor& t = m.params.value(i);
    if (i == m.layout.embedding || i == m.layout.no_answer) {
      init::uniform(t, 0.05, rng);
    } else if (t.rank() == 2) {
      init::xavier_uniform(t, rng);
    }
  }
  return m;
}

Model Model::from_parts(const ModelConfig& config, NGramVocab vocab,
                        ParamSet params) {
  Model m;
  m.config = config;
  const ParamSet expected = make_param_shapes(config, vocab.size(), &m.layout);
  if (params.size() != expected.size()) {
    throw ValidationError("expected " + std::to_string(expected.size()) +
                          " tensors, found " + std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (params[i].name != expected[i].name) {
      throw ValidationError("tensor " + std::to_string(i) + " is '" +
                            params[i].name + "', expected '" +
                            expected[i].name + "'");
    }
    if (!params[i].value.same_shape(expected[i].value)) {
      throw ValidationError("tensor '" + params[i].name + "' has shape " +
                            shape_string(params[i].value.shape()) +
                            ", config implies " +
                            shape_string(expected[i].value.shape()));
    }
  }
  m.vocab = std::move(vocab);
  m.params = std::move(params);
  return m;
}

// ----------------------------------------------------------------- input

QAInput make_input(const std::vector<Message>& history,
                   const std::string& question,
                   std::vector<std::string> candidates,
                   const ModelConfig& config) {
  QAInput in;
  const std::size_t keep = std::min(history.size(), config.max_history);
  in.context.assign(history.end() - static_cast<std::ptrdiff_t>(keep),
                    history.end());
  in.question = question;
  if (!config.use_conv_context) {
    for (auto it = in.context.rbegin(); it != in.context.rend(); ++it) {
      if (it->speaker == Speaker::kBuyer) {
        in.question = it->text + " " + question;
        break;
      }
    }
  }
  in.candidates = std::move(candidates);
  return in;
}

FeaturizedInput featurize_input(const QAInput& input, const Model& model) {
  const auto& c = model.config;
  FeaturizedInput f;
  if (c.use_conv_context) {
    const std::size_t keep = std::min(input.context.size(), c.max_history);
    for (std::size_t i = input.context.size() - keep; i < input.context.size();
         ++i) {
      f.context.push_back(featurize(input.context[i].text, model.vocab,
                                    c.max_sentence_tokens));
    }
  }
  f.question = featurize(input.question, model.vocab);
  f.candidates.reserve(input.candidates.size());
  for (const auto& s : input.candidates) {
    f.candidates.push_back(featurize(s, model.vocab, c.max_sentence_tokens));
  }
  return f;
}

// --------------------------------------------------------------- forward

namespace {

struct FfTrace {
  std::vector<Vec> acts;  // acts[0] = input, acts[l + 1] = layer l output
};

Vec ff_forward(const Model& m, const std::vector<std::size_t>& ws,
               const std::vector<std::size_t>& bs, Vec x, FfTrace* trace) {
  if (trace) trace->acts = {x};
  for (std::size_t l = 0; l < ws.size(); ++l) {
    x = nn::feed_forward(x, m.params.value(ws[l]), m.params.value(bs[l]),
                         Activation::kTanh);
    if (trace) trace->acts.push_back(x);
  }
  return x;
}

Vec ff_backward(const Model& m, const std::vector<std::size_t>& ws,
                const std::vector<std::size_t>& bs, const FfTrace& trace,
                Vec dy, GradSet& g) {
  for (std::size_t l = ws.size(); l-- > 0;) {
    Vec dx(trace.acts[l].size(), 0.0);
    nn::feed_forward_backward(trace.acts[l], trace.acts[l + 1], dy,
                              m.params.value(ws[l]), Activation::kTanh,
                              g[ws[l]], g[bs[l]], dx);
    dy = std::move(dx);
  }
  return dy;
}

nn::LstmWeights lstm_weights(const Model& m, const ParamLayout::Lstm& l) {
  return {m.params.value(l.w), m.params.value(l.u), m.params.value(l.b)};
}

nn::LstmGrads lstm_grads(GradSet& g, const ParamLayout::Lstm& l) {
  return {g[l.w], g[l.u], g[l.b]};
}

nn::AttentionWeights attention_weights(const Model& m) {
  const auto& l = m.layout;
  return {m.params.value(l.att_q), m.params.value(l.att_k),
          m.params.value(l.att_v), m.params.value(l.att_o),
          m.params.value(l.att_bo)};
}

struct QuestionTrace {
  Vec psi;
  Sequence ctx_seq;
  nn::LstmTrace ctx;
  Vec ctx_h;
  FfTrace ff;
};

struct CandidateTrace {
  Sequence psi;
  Vec h0;
  nn::BiLstmTrace bi;
  Sequence bi_out;
  nn::AttentionTrace att;
  std::vector<FfTrace> ff;
};

Vec question_forward(const FeaturizedInput& in, const Model& m,
                     QuestionTrace* t) {
  const auto& c = m.config;
  const auto& l = m.layout;
  const Tensor& emb = m.params.value(l.embedding);
  Vec psi = nn::embedding_sum(in.question.ids, emb);
  Vec u = psi;
  if (c.use_conv_context) {
    Sequence seq;
    seq.reserve(in.context.size() + 1);
    for (const auto& bag : in.context) {
      seq.push_back(nn::embedding_sum(bag.ids, emb));
    }
    seq.push_back(psi);
    const Vec zero(c.lstm_hidden, 0.0);
    auto trace = nn::lstm_forward(lstm_weights(m, l.context), seq, zero);
    const Vec& hq = trace.steps.back().h;
    Vec merged(c.embed_dim);
    kp::gemv(m.params.value(l.context_merge), hq, merged);
    axpy(1.0, merged, u);
    if (t) {
      t->ctx_seq = std::move(seq);
      t->ctx_h = hq;
      t->ctx = std::move(trace);
    }
  }
  if (t) t->psi = std::move(psi);
  return ff_forward(m, l.question_w, l.question_b, std::move(u),
                    t ? &t->ff : nullptr);
}

std::vector<Vec> candidates_forward(const FeaturizedInput& in, const Model& m,
                                    CandidateTrace* t) {
  const auto& c = m.config;
  const auto& l = m.layout;
  const std::size_t n = in.candidates.size();
  if (n == 0) return {};
  const Tensor& emb = m.params.value(l.embedding);
  Sequence psi(n);
  for (std::size_t i = 0; i < n; ++i) {
    psi[i] = nn::embedding_sum(in.candidates[i].ids, emb);
  }
  Sequence u = psi;
  if (c.use_answer_lstm) {
    const Vec psi_q = nn::embedding_sum(in.question.ids, emb);
    Vec h0(c.lstm_hidden);
    kp::gemv(m.params.value(l.answer_h0), psi_q, h0);
    nn::BiLstmTrace bt;
    Sequence out = nn::bilstm(lstm_weights(m, l.answer_fwd),
                              lstm_weights(m, l.answer_bwd), psi, h0, &bt);
    Vec merged(c.embed_dim);
    for (std::size_t i = 0; i < n; ++i) {
      kp::gemv(m.params.value(l.answer_merge), out[i], merged);
      axpy(1.0, merged, u[i]);
    }
    if (t) {
      t->h0 = std::move(h0);
      t->bi = std::move(bt);
      t->bi_out = std::move(out);
    }
  }
  if (c.use_attention) {
    u = nn::self_attention(attention_weights(m), u, t ? &t->att : nullptr);
  }
  if (t) {
    t->psi = std::move(psi);
    t->ff.resize(n);
  }
  std::vector<Vec> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = ff_forward(m, l.candidate_w, l.candidate_b, std::move(u[i]),
                      t ? &t->ff[i] : nullptr);
  }
  return g;
}

// Returns d loss / d psi(q) contributed by the candidate tower.
Vec candidates_backward(const FeaturizedInput& in, const Model& m,
                        const CandidateTrace& t, const std::vector<Vec>& dg,
                        GradSet& g) {
  const auto& c = m.config;
  const auto& l = m.layout;
  const std::size_t n = dg.size();
  Vec dpsi_q(c.embed_dim, 0.0);
  Sequence du(n);
  for (std::size_t i = 0; i < n; ++i) {
    du[i] = ff_backward(m, l.candidate_w, l.candidate_b, t.ff[i], dg[i], g);
  }
  if (c.use_attention) {
    Sequence dx(n);
    nn::self_attention_backward(
        attention_weights(m), t.att, du,
        {g[l.att_q], g[l.att_k], g[l.att_v], g[l.att_o], g[l.att_bo]}, dx);
    du = std::move(dx);
  }
  Sequence dpsi = du;
  if (c.use_answer_lstm) {
    const Tensor& merge = m.params.value(l.answer_merge);
    Sequence dout(n);
    for (std::size_t i = 0; i < n; ++i) {
      kp::ger_acc(g[l.answer_merge], du[i], t.bi_out[i]);
      dout[i].assign(2 * c.lstm_hidden, 0.0);
      kp::gemv_t_acc(merge, du[i], dout[i]);
    }
    Sequence dx(n);
    const Vec dh0 = nn::bilstm_backward(
        lstm_weights(m, l.answer_fwd), lstm_weights(m, l.answer_bwd), t.bi,
        dout, lstm_grads(g, l.answer_fwd), lstm_grads(g, l.answer_bwd), dx);
    for (std::size_t i = 0; i < n; ++i) axpy(1.0, dx[i], dpsi[i]);
    const Vec psi_q =
        nn::embedding_sum(in.question.ids, m.params.value(l.embedding));
    kp::ger_acc(g[l.answer_h0], dh0, psi_q);
    kp::gemv_t_acc(m.params.value(l.answer_h0), dh0, dpsi_q);
  }
  for (std::size_t i = 0; i < n; ++i) {
    nn::embedding_sum_backward(in.candidates[i].ids, dpsi[i], g[l.embedding]);
  }
  return dpsi_q;
}

void question_backward(const FeaturizedInput& in, const Model& m,
                       const QuestionTrace& t, const Vec& dh, Vec dpsi_q,
                       GradSet& g) {
  const auto& c = m.config;
  const auto& l = m.layout;
  const Vec du = ff_backward(m, l.question_w, l.question_b, t.ff, dh, g);
  axpy(1.0, du, dpsi_q);
  if (c.use_conv_context) {
    kp::ger_acc(g[l.context_merge], du, t.ctx_h);
    const std::size_t T = t.ctx_seq.size();
    Sequence dh_out(T);
    dh_out[T - 1].assign(c.lstm_hidden, 0.0);
    kp::gemv_t_acc(m.params.value(l.context_merge), du, dh_out[T - 1]);
    Sequence dx(T);
    nn::lstm_backward(lstm_weights(m, l.context), t.ctx, dh_out,
                      lstm_grads(g, l.context), dx);
    for (std::size_t i = 0; i + 1 < T; ++i) {
      nn::embedding_sum_backward(in.context[i].ids, dx[i], g[l.embedding]);
    }
    axpy(1.0, dx[T - 1], dpsi_q);
  }
  nn::embedding_sum_backward(in.question.ids, dpsi_q, g[l.embedding]);
}

Vec logits(std::span<const double> h, std::span<const double> g0,
           const std::vector<Vec>& g) {
  Vec s(g.size() + 1);
  s[0] = dot(h, g0);
  for (std::size_t i = 0; i < g.size(); ++i) s[i + 1] = dot(h, g[i]);
  return s;
}

[[noreturn]] void throw_non_finite(const Model& m, const char* where) {
  std::ostringstream os;
  os << "non-finite " << where << " encoding; parameters with non-finite "
     << "values:";
  bool any = false;
  for (const auto& p : m.params) {
    std::size_t bad = 0;
    for (double x : p.value.values()) bad += !std::isfinite(x);
    if (bad) {
      os << ' ' << p.name << " (" << bad << '/' << p.value.size() << ')';
      any = true;
    }
  }
  if (!any) os << " none (overflow inside the forward pass)";
  throw NumericError(os.str());
}

void check_finite(const Model& m, const Vec& v, const char* where) {
  for (double x : v) {
    if (!std::isfinite(x)) throw_non_finite(m, where);
  }
}

}  // namespace

Vec encode_question(const FeaturizedInput& in, const Model& model) {
  return question_forward(in, model, nullptr);
}

std::vector<Vec> encode_candidates(const FeaturizedInput& in,
                                   const Model& model) {
  return candidates_forward(in, model, nullptr);
}

ScoreResult score_encodings(std::span<const double> h,
                            std::span<const double> g0,
                            const std::vector<Vec>& g) {
  ScoreResult r;
  r.scores = logits(h, g0, g);
  r.probs = nn::softmax(r.scores);
  r.best = nn::argmax(r.probs);
  return r;
}

ScoreResult score(const FeaturizedInput& in, const Model& model) {
  const Vec h = question_forward(in, model, nullptr);
  check_finite(model, h, "question");
  const auto g = candidates_forward(in, model, nullptr);
  for (const auto& gi : g) check_finite(model, gi, "candidate");
  const auto g0 = model.params.value(model.layout.no_answer).values();
  check_finite(model, Vec(g0.begin(), g0.end()), "no-answer");
  return score_encodings(h, g0, g);
}

ScoreResult score(const QAInput& in, const Model& model) {
  return score(featurize_input(in, model), model);
}

std::size_t predict(const QAInput& in, const Model& model) {
  return score(in, model).best;
}

double loss_and_grad(const FeaturizedInput& in, std::size_t label,
                     const Model& model, GradSet& grads) {
  const std::size_t n = in.candidates.size();
  if (label > n) {
    throw ContractViolation("label " + std::to_string(label) +
                            " out of range for " + std::to_string(n) +
                            " candidates");
  }
  require_dim(grads.size(), model.params.size(), "gradient set");
  QuestionTrace qt;
  CandidateTrace ct;
  const Vec h = question_forward(in, model, &qt);
  const auto g = candidates_forward(in, model, &ct);
  const auto g0 = model.params.value(model.layout.no_answer).values();
  const Vec s = logits(h, g0, g);
  check_finite(model, s, "score");
  Vec ds(s.size());
  const double loss = nn::softmax_cross_entropy(s, label, ds);

  Vec dh(h.size(), 0.0);
  axpy(ds[0], g0, dh);
  axpy(ds[0], h, grads[model.layout.no_answer].values());
  std::vector<Vec> dg(n);
  for (std::size_t i = 0; i < n; ++i) {
    axpy(ds[i + 1], g[i], dh);
    dg[i].assign(h.size(), 0.0);
    axpy(ds[i + 1], h, dg[i]);
  }
  Vec dpsi_q = n > 0 ? candidates_backward(in, model, ct, dg, grads)
                     : Vec(model.config.embed_dim, 0.0);
  question_backward(in, model, qt, dh, std::move(dpsi_q), grads);
  return loss;
}

double reply_ranking_loss_and_grad(std::span<const BagOfNGrams> contexts,
                                   std::span<const BagOfNGrams> replies,
                                   const Model& model, GradSet& grads) {
  const std::size_t B = contexts.size();
  require_dim(replies.size(), B, "reply batch");
  if (B < 2) throw ConfigError("in-batch negatives need a batch of >= 2");
  const auto& l = model.layout;
  const Tensor& emb = model.params.value(l.embedding);
  std::vector<FfTrace> qt(B), rt(B);
  std::vector<Vec> h(B), g(B);
  for (std::size_t i = 0; i < B; ++i) {
    h[i] = ff_forward(model, l.question_w, l.question_b,
                      nn::embedding_sum(contexts[i].ids, emb), &qt[i]);
    g[i] = ff_forward(model, l.candidate_w, l.candidate_b,
                      nn::embedding_sum(replies[i].ids, emb), &rt[i]);
  }
  std::vector<Vec> dh(B, Vec(model.tower_dim(), 0.0));
  std::vector<Vec> dg(B, Vec(model.tower_dim(), 0.0));
  double total = 0.0;
  Vec row(B), drow(B);
  const double inv_b = 1.0 / static_cast<double>(B);
  for (std::size_t i = 0; i < B; ++i) {
    for (std::size_t j = 0; j < B; ++j) row[j] = dot(h[i], g[j]);
    check_finite(model, row, "reply score");
    total += nn::softmax_cross_entropy(row, i, drow);
    for (std::size_t j = 0; j < B; ++j) {
      axpy(drow[j] * inv_b, g[j], dh[i]);
      axpy(drow[j] * inv_b, h[i], dg[j]);
    }
  }
  for (std::size_t i = 0; i < B; ++i) {
    const Vec dq = ff_backward(model, l.question_w, l.question_b, qt[i],
                               dh[i], grads);
    nn::embedding_sum_backward(contexts[i].ids, dq, grads[l.embedding]);
    const Vec dr = ff_backward(model, l.candidate_w, l.candidate_b, rt[i],
                               dg[i], grads);
    nn::embedding_sum_backward(replies[i].ids, dr, grads[l.embedding]);
  }
  return total * inv_b;
}

// ----------------------------------------------------------------- batch

namespace {

struct ChunkPlan {
  std::size_t count;
  std::size_t begin(std::size_t c, std::size_t n) const {
    return c * n / count;
  }
};

ChunkPlan plan_chunks(std::size_t n) {
  return {std::max<std::size_t>(1, std::min(n, kGradChunks))};
}

double run_chunk(std::span<const LabelledInput> batch, std::size_t lo,
                 std::size_t hi, const Model& model, GradSet& g) {
  double loss = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    loss += loss_and_grad(batch[i].input, batch[i].label, model, g);
  }
  return loss;
}

}  // namespace

namespace serial {

double batch_loss_and_grad(std::span<const LabelledInput> batch,
                           const Model& model, GradSet& grads) {
  const ChunkPlan plan = plan_chunks(batch.size());
  std::vector<GradSet> partial(plan.count);
  std::vector<double> losses(plan.count, 0.0);
  for (std::size_t c = 0; c < plan.count; ++c) {
    partial[c] = zero_grads(model.params);
    losses[c] = run_chunk(batch, plan.begin(c, batch.size()),
                          plan.begin(c + 1, batch.size()), model, partial[c]);
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < plan.count; ++c) {
    loss += losses[c];
    accumulate(grads, partial[c]);
  }
  return loss;
}

std::vector<ScoreResult> score_batch(std::span<const FeaturizedInput> inputs,
                                     const Model& model) {
  std::vector<ScoreResult> out;
  out.reserve(inputs.size());
  for (const auto& in : inputs) out.push_back(score(in, model));
  return out;
}

}  // namespace serial

namespace parallel {

double batch_loss_and_grad(std::span<const LabelledInput> batch,
                           const Model& model, GradSet& grads) {
  const ChunkPlan plan = plan_chunks(batch.size());
  std::vector<GradSet> partial(plan.count);
  std::vector<double> losses(plan.count, 0.0);
  std::vector<std::exception_ptr> errors(plan.count);
  const long chunks = static_cast<long>(plan.count);
#pragma omp parallel for schedule(dynamic, 1)
  for (long c = 0; c < chunks; ++c) {
    try {
      partial[c] = zero_grads(model.params);
      losses[c] = run_chunk(batch, plan.begin(c, batch.size()),
                            plan.begin(c + 1, batch.size()), model,
                            partial[c]);
    } catch (...) {
      errors[c] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  double loss = 0.0;
  for (std::size_t c = 0; c < plan.count; ++c) {
    loss += losses[c];
    accumulate(grads, partial[c]);
  }
  return loss;
}

std::vector<ScoreResult> score_batch(std::span<const FeaturizedInput> inputs,
                                     const Model& model) {
  std::vector<ScoreResult> out(inputs.size());
  std::vector<std::exception_ptr> errors(inputs.size());
  const long n = static_cast<long>(inputs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (long i = 0; i < n; ++i) {
    try {
      out[i] = score(inputs[i], model);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace parallel

}  // namespace mqa
