#include "mqa/trainer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mqa/errors.hpp"

namespace mqa {

// ------------------------------------------------------------------ config

ModelConfig TrainConfig::resolved_model() const {
  ModelConfig m = model;
  m.ff_size = ff_size ? *ff_size : ModelConfig::default_ff_size(m.any_encoder());
  return m;
}

void TrainConfig::validate() const {
  resolved_model().validate();
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (phase == Phase::kPretrain && batch_size < 2) {
    throw ConfigError("pretraining needs batch_size >= 2 for in-batch negatives");
  }
  if (epochs < 1) throw ConfigError("epochs must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(lr >= 0.0)) throw ConfigError("lr must be non-negative");
  if (!(clip_norm > 0.0)) throw ConfigError("clip_norm must be positive");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) {
    throw ConfigError("bad value for " + key + ": '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("bad boolean for " + key + ": '" + v + "'");
}

}  // namespace

void set_option(TrainConfig& c, const std::string& key,
                const std::string& value) {
  const auto size = [&] { return parse_number<std::size_t>(key, value); };
  auto& m = c.model;
  if (key == "batch_size") c.batch_size = size();
  else if (key == "epochs") c.epochs = size();
  else if (key == "patience") c.patience = size();
  else if (key == "lr") c.lr = parse_number<double>(key, value);
  else if (key == "clip_norm") c.clip_norm = parse_number<double>(key, value);
  else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
  else if (key == "phase") {
    if (value == "pretrain") c.phase = Phase::kPretrain;
    else if (value == "finetune") c.phase = Phase::kFinetune;
    else throw ConfigError("phase must be pretrain or finetune");
  } else if (key == "flags") set_flags(m, value);
  else if (key == "lstm") m.use_answer_lstm = parse_bool(key, value);
  else if (key == "attention") m.use_attention = parse_bool(key, value);
  else if (key == "context") m.use_conv_context = parse_bool(key, value);
  else if (key == "embed_dim") m.embed_dim = size();
  else if (key == "ff_layers") m.ff_layers = size();
  else if (key == "ff_size") c.ff_size = size();
  else if (key == "lstm_hidden") m.lstm_hidden = size();
  else if (key == "max_history") m.max_history = size();
  else if (key == "unigram_cap") m.unigram_cap = size();
  else if (key == "bigram_cap") m.bigram_cap = size();
  else if (key == "max_candidates") m.max_candidates = size();
  else if (key == "max_sentence_tokens") m.max_sentence_tokens = size();
  else throw ConfigError("unknown config key '" + key + "'");
}

TrainConfig parse_train_config(std::istream& in, TrainConfig base) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      set_option(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

TrainConfig read_train_config_file(const std::string& path, TrainConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_train_config(in, std::move(base));
}

void set_flags(ModelConfig& c, const std::string& flags) {
  c.use_answer_lstm = c.use_attention = c.use_conv_context = false;
  if (flags.empty() || flags == "none" || flags == "baseline") return;
  std::stringstream ss(flags);
  for (std::string f; std::getline(ss, f, ',');) {
    f = trim(f);
    if (f == "lstm") c.use_answer_lstm = true;
    else if (f == "attention") c.use_attention = true;
    else if (f == "context") c.use_conv_context = true;
    else throw ConfigError("unknown flag '" + f + "'");
  }
}

NGramVocab vocab_for(const std::vector<QAExample>& examples,
                     const std::vector<ReplyPair>& pairs,
                     const ModelConfig& config) {
  std::vector<std::string> texts;
  for (const auto& ex : examples) {
    texts.push_back(ex.question);
    for (const auto& m : ex.context) texts.push_back(m.text);
    texts.insert(texts.end(), ex.candidates.begin(), ex.candidates.end());
  }
  for (const auto& p : pairs) {
    texts.push_back(p.context);
    texts.push_back(p.reply);
  }
  return build_vocab(texts, config.unigram_cap, config.bigram_cap);
}

// ---------------------------------------------------------------- training

namespace {

class Stepper {
 public:
  Stepper(const Model& model, double lr, double clip)
      : grads_(zero_grads(model.params)), clip_(clip) {
    adam_.lr = lr;
  }

  template <typename LossFn>
  double step(Model& model, LossFn&& loss_fn) {
    zero(grads_);
    const double loss = loss_fn(grads_);
    clip_global_norm(grads_, clip_);
    adam_step(model.params, grads_, adam_);
    return loss;
  }

  AdamState& adam() { return adam_; }

 private:
  GradSet grads_;
  AdamState adam_;
  double clip_;
};

double finetune_batch(const Model& model, std::span<const LabelledInput> batch,
                      GradSet& grads) {
  const double sum = parallel::batch_loss_and_grad(batch, model, grads);
  const double inv = 1.0 / static_cast<double>(batch.size());
  scale(grads, inv);
  return sum * inv;
}

bool is_encoder_param(const std::string& name, const ModelConfig& c) {
  const auto starts = [&](const char* p) { return name.rfind(p, 0) == 0; };
  if (starts("answer_lstm.")) return !c.use_answer_lstm;
  if (starts("attention.")) return !c.use_attention;
  if (starts("context_lstm.")) return !c.use_conv_context;
  return false;
}

}  // namespace

double pretrain_step(Model& model, std::span<const BagOfNGrams> contexts,
                     std::span<const BagOfNGrams> replies, AdamState& adam,
                     double clip_norm) {
  GradSet grads = zero_grads(model.params);
  const double loss =
      reply_ranking_loss_and_grad(contexts, replies, model, grads);
  clip_global_norm(grads, clip_norm);
  adam_step(model.params, grads, adam);
  return loss;
}

double finetune_step(Model& model, std::span<const LabelledInput> batch,
                     AdamState& adam, double clip_norm) {
  GradSet grads = zero_grads(model.params);
  const double loss = finetune_batch(model, batch, grads);
  clip_global_norm(grads, clip_norm);
  adam_step(model.params, grads, adam);
  return loss;
}

PretrainResult pretrain(const std::vector<ReplyPair>& pairs,
                        const TrainConfig& config,
                        std::optional<NGramVocab> vocab,
                        const EpochCallback& on_epoch) {
  TrainConfig c = config;
  c.phase = Phase::kPretrain;
  c.validate();
  if (pairs.size() < c.batch_size) {
    throw ConfigError("pretraining needs at least batch_size (" +
                      std::to_string(c.batch_size) + ") pairs, got " +
                      std::to_string(pairs.size()));
  }
  ModelConfig mc = c.resolved_model();
  mc.use_answer_lstm = mc.use_attention = mc.use_conv_context = false;
  if (!vocab) vocab = vocab_for({}, pairs, mc);

  PretrainResult out{Model::create(mc, std::move(*vocab), c.seed), {}};
  Model& model = out.model;
  std::vector<BagOfNGrams> ctx(pairs.size()), rep(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ctx[i] = featurize(pairs[i].context, model.vocab);
    rep[i] = featurize(pairs[i].reply, model.vocab, mc.max_sentence_tokens);
  }

  std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Stepper stepper(model, c.lr, c.clip_norm);
  std::vector<BagOfNGrams> bc, br;
  for (std::size_t epoch = 1; epoch <= c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    std::size_t batches = 0;
    for (std::size_t s = 0; s + c.batch_size <= order.size(); s += c.batch_size) {
      bc.clear();
      br.clear();
      for (std::size_t j = s; j < s + c.batch_size; ++j) {
        bc.push_back(ctx[order[j]]);
        br.push_back(rep[order[j]]);
      }
      total += stepper.step(model, [&](GradSet& g) {
        return reply_ranking_loss_and_grad(bc, br, model, g);
      });
      ++batches;
    }
    EpochStats st{epoch, total / static_cast<double>(batches), std::nullopt};
    out.history.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  return out;
}

std::vector<LabelledInput> prepare_examples(const std::vector<QAExample>& ex,
                                            const Model& model) {
  for (std::size_t i = 0; i < ex.size(); ++i) {
    if (ex[i].label > ex[i].candidates.size()) {
      throw ValidationError("example " + std::to_string(i) + " (listing '" +
                            ex[i].listing_id + "'): label " +
                            std::to_string(ex[i].label) + " exceeds " +
                            std::to_string(ex[i].candidates.size()) +
                            " candidates");
    }
  }
  std::vector<LabelledInput> out(ex.size());
  const long n = static_cast<long>(ex.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    out[i].input = featurize_input(
        make_input(ex[i].context, ex[i].question, ex[i].candidates,
                   model.config),
        model);
    out[i].label = ex[i].label;
  }
  return out;
}

double accuracy(const Model& model, std::span<const LabelledInput> data) {
  if (data.empty()) return 0.0;
  std::vector<FeaturizedInput> inputs;
  inputs.reserve(data.size());
  for (const auto& d : data) inputs.push_back(d.input);
  const auto scores = parallel::score_batch(inputs, model);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    hits += scores[i].best == data[i].label;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

FinetuneResult finetune(const std::vector<QAExample>& train,
                        const std::vector<QAExample>& dev,
                        const TrainConfig& config, const Model* init,
                        std::optional<NGramVocab> vocab,
                        const EpochCallback& on_epoch) {
  TrainConfig c = config;
  c.phase = Phase::kFinetune;
  c.validate();
  if (train.empty()) throw ConfigError("fine-tuning needs training examples");

  ModelConfig mc = c.resolved_model();
  std::optional<Model> fresh;
  if (init) {
    const auto& ic = init->config;
    mc.embed_dim = ic.embed_dim;
    mc.ff_layers = ic.ff_layers;
    mc.ff_size = ic.ff_size;
    mc.lstm_hidden = ic.lstm_hidden;
    mc.unigram_cap = ic.unigram_cap;
    mc.bigram_cap = ic.bigram_cap;
    fresh = Model::create(mc, init->vocab, c.seed);
    for (const auto& p : init->params) {
      if (is_encoder_param(p.name, ic)) continue;
      const auto idx = fresh->params.find(p.name);
      if (idx && fresh->params.value(*idx).same_shape(p.value)) {
        fresh->params.value(*idx) = p.value;
      }
    }
  } else {
    if (!vocab) vocab = vocab_for(train, {}, mc);
    fresh = Model::create(mc, std::move(*vocab), c.seed);
  }

  FinetuneResult out{std::move(*fresh), {}, 0};
  Model& model = out.model;
  const auto train_in = prepare_examples(train, model);
  const auto dev_in = prepare_examples(dev, model);

  std::mt19937_64 rng(c.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(train_in.size());
  std::iota(order.begin(), order.end(), 0);
  Stepper stepper(model, c.lr, c.clip_norm);
  std::vector<LabelledInput> batch;
  std::optional<ParamSet> best_params;
  double best_acc = -1.0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= c.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t s = 0; s < order.size(); s += c.batch_size) {
      const std::size_t e = std::min(order.size(), s + c.batch_size);
      batch.clear();
      for (std::size_t j = s; j < e; ++j) batch.push_back(train_in[order[j]]);
      total += stepper.step(model, [&](GradSet& g) {
                 return finetune_batch(model, batch, g);
               }) *
               static_cast<double>(e - s);
    }
    EpochStats st{epoch, total / static_cast<double>(order.size()),
                  std::nullopt};
    if (!dev_in.empty()) st.dev_acc = accuracy(model, dev_in);
    out.history.push_back(st);
    if (on_epoch) on_epoch(st);

    if (dev_in.empty()) {
      out.best_epoch = epoch;
      continue;
    }
    if (*st.dev_acc > best_acc) {
      best_acc = *st.dev_acc;
      best_params = model.params;
      out.best_epoch = epoch;
      stale = 0;
    } else if (++stale >= c.patience) {
      break;
    }
  }
  if (best_params) model.params = std::move(*best_params);
  return out;
}

}  // namespace mqa
