#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "mqa/layers.hpp"
#include "mqa/params.hpp"
#include "mqa/textproc.hpp"
#include "mqa/types.hpp"

namespace mqa {

struct ModelConfig {
  std::size_t embed_dim = 256;
  std::size_t ff_layers = 2;
  std::size_t ff_size = 500;
  std::size_t lstm_hidden = 256;
  bool use_answer_lstm = false;
  bool use_attention = false;
  bool use_conv_context = false;
  std::size_t max_history = 10;
  std::size_t unigram_cap = 100000;
  std::size_t bigram_cap = 200000;
  std::size_t max_candidates = 50;
  std::size_t max_sentence_tokens = 60;

  // 500 for the plain feed-forward model, 128 once any encoder is added.
  static std::size_t default_ff_size(bool any_encoder) {
    return any_encoder ? 128 : 500;
  }
  bool any_encoder() const {
    return use_answer_lstm || use_attention || use_conv_context;
  }
  // "baseline", or the enabled encoders joined by '+', e.g. "lstm+attention".
  std::string variant() const;
  // Throws ConfigError when a size is zero.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

void to_json(nlohmann::json& j, const ModelConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);

// Integer handles into a model's ParamSet.
struct ParamLayout {
  struct Lstm {
    std::size_t w, u, b;
  };
  std::size_t embedding;
  std::vector<std::size_t> question_w, question_b;
  std::vector<std::size_t> candidate_w, candidate_b;
  std::size_t no_answer;
  Lstm answer_fwd, answer_bwd;
  std::size_t answer_h0, answer_merge;
  std::size_t att_q, att_k, att_v, att_o, att_bo;
  Lstm context;
  std::size_t context_merge;
};

// Every tensor exists regardless of the variant flags; flags decide which
// ones take part in the forward pass.
ParamSet make_param_shapes(const ModelConfig& c, std::size_t vocab_size,
                           ParamLayout* layout = nullptr);
ParamLayout layout_for(const ModelConfig& c);

struct Model {
  ModelConfig config;
  NGramVocab vocab;
  ParamSet params;
  ParamLayout layout;

  // Seeded initialization: U(-0.05, 0.05) embeddings, Xavier-uniform weight
  // matrices, zero biases, U(-0.05, 0.05) for the no-answer vector.
  static Model create(const ModelConfig& config, NGramVocab vocab,
                      std::uint64_t seed);
  // Adopts existing parameters; throws ValidationError when names or shapes
  // disagree with the config and vocabulary.
  static Model from_parts(const ModelConfig& config, NGramVocab vocab,
                          ParamSet params);

  std::size_t tower_dim() const { return config.ff_size; }
};

// Builds the ranker input for a question asked after `history`. Keeps the
// most recent max_history messages. Models without the conversational-context
// encoder see the last two buyer messages joined as the question.
QAInput make_input(const std::vector<Message>& history,
                   const std::string& question,
                   std::vector<std::string> candidates,
                   const ModelConfig& config);

struct FeaturizedInput {
  std::vector<BagOfNGrams> context;
  BagOfNGrams question;
  std::vector<BagOfNGrams> candidates;
};

// Context is featurized only when the model uses it.
FeaturizedInput featurize_input(const QAInput& input, const Model& model);

struct ScoreResult {
  Vec scores;  // h.g_i for i = 0..N
  Vec probs;
  std::size_t best = 0;  // lowest index among the maxima
};

Vec encode_question(const FeaturizedInput& in, const Model& model);
// g_1..g_N. The no-answer vector g_0 is the "no_answer" parameter.
std::vector<Vec> encode_candidates(const FeaturizedInput& in,
                                   const Model& model);

// Logits h.g_i (g_0 first), their softmax, and the argmax.
ScoreResult score_encodings(std::span<const double> h,
                            std::span<const double> g0,
                            const std::vector<Vec>& g);

ScoreResult score(const FeaturizedInput& in, const Model& model);
ScoreResult score(const QAInput& in, const Model& model);
std::size_t predict(const QAInput& in, const Model& model);

// Cross-entropy of the candidate distribution at `label`; adds parameter
// gradients into `grads`. Parameters outside the active variant receive
// nothing.
double loss_and_grad(const FeaturizedInput& in, std::size_t label,
                     const Model& model, GradSet& grads);

// In-batch reply ranking: S_ij = h(context_i) . g(reply_j) with the plain
// feed-forward towers; returns mean_i CE(softmax(S_i), i) and adds gradients
// of that mean into `grads`.
double reply_ranking_loss_and_grad(std::span<const BagOfNGrams> contexts,
                                   std::span<const BagOfNGrams> replies,
                                   const Model& model, GradSet& grads);

struct LabelledInput {
  FeaturizedInput input;
  std::size_t label = 0;
};

// Sum of per-example losses and gradients over a batch. The batch is cut into
// a fixed number of contiguous chunks that are reduced in order, so both
// versions give bit-identical results for any thread count.
namespace serial {
double batch_loss_and_grad(std::span<const LabelledInput> batch,
                           const Model& model, GradSet& grads);
std::vector<ScoreResult> score_batch(std::span<const FeaturizedInput> inputs,
                                     const Model& model);
}  // namespace serial

namespace parallel {
double batch_loss_and_grad(std::span<const LabelledInput> batch,
                           const Model& model, GradSet& grads);
std::vector<ScoreResult> score_batch(std::span<const FeaturizedInput> inputs,
                                     const Model& model);
}  // namespace parallel

inline constexpr std::size_t kGradChunks = 8;

}  // namespace mqa
