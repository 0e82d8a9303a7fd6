#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mqa/optim.hpp"
#include "mqa/ranker.hpp"
#include "mqa/types.hpp"

namespace mqa {

enum class Phase { kPretrain, kFinetune };

struct TrainConfig {
  ModelConfig model;
  // Unset means ModelConfig::default_ff_size for the chosen flags.
  std::optional<std::size_t> ff_size;
  std::size_t batch_size = 64;
  std::size_t epochs = 30;
  std::size_t patience = 5;
  double lr = 1e-3;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  Phase phase = Phase::kFinetune;

  ModelConfig resolved_model() const;
  // Throws ConfigError.
  void validate() const;
};

// Sets one field by its config-file key, e.g. "lr" or "lstm". Throws
// ConfigError for unknown keys and unparsable values.
void set_option(TrainConfig& c, const std::string& key,
                const std::string& value);
// Flat "key = value" lines; '#' starts a comment.
TrainConfig parse_train_config(std::istream& in, TrainConfig base = {});
TrainConfig read_train_config_file(const std::string& path,
                                   TrainConfig base = {});
// "lstm,attention,context" in any order and subset; "" or "none" clears.
void set_flags(ModelConfig& c, const std::string& flags);

// Vocabulary over every text the model would featurize.
NGramVocab vocab_for(const std::vector<QAExample>& examples,
                     const std::vector<ReplyPair>& pairs,
                     const ModelConfig& config);

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean per example (per row when pretraining)
  std::optional<double> dev_acc;
};
using EpochCallback = std::function<void(const EpochStats&)>;

struct PretrainResult {
  Model model;
  std::vector<EpochStats> history;
};

// Reply ranking with in-batch negatives. Trains the embedding table and the
// two feed-forward towers; the returned model has every encoder flag off.
// Throws ConfigError when batch_size < 2 or there are fewer pairs than one
// batch.
PretrainResult pretrain(const std::vector<ReplyPair>& pairs,
                        const TrainConfig& config,
                        std::optional<NGramVocab> vocab = std::nullopt,
                        const EpochCallback& on_epoch = {});

// One Adam step of in-batch reply ranking. Returns the batch loss.
double pretrain_step(Model& model, std::span<const BagOfNGrams> contexts,
                     std::span<const BagOfNGrams> replies, AdamState& adam,
                     double clip_norm);

struct FinetuneResult {
  Model model;  // parameters from the best dev epoch
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 0 when training never ran an epoch
};

// Featurizes with the model's input construction. Throws ValidationError
// naming the example index and listing when a label is out of range.
std::vector<LabelledInput> prepare_examples(const std::vector<QAExample>& ex,
                                            const Model& model);

// Mean loss over the batch and one clipped Adam step. Returns the loss.
double finetune_step(Model& model, std::span<const LabelledInput> batch,
                     AdamState& adam, double clip_norm);

// Share of examples whose argmax equals the label.
double accuracy(const Model& model, std::span<const LabelledInput> data);

// Supervised training on QA examples. With `init`, its embedding and towers
// (and any encoder it was trained with and that stays enabled) are copied
// into a fresh model of the requested variant, and its vocabulary is kept;
// otherwise the vocabulary is `vocab` or built from the training set. Keeps
// the parameters of the best dev epoch and stops after `patience` epochs
// without improvement. With an empty dev set the last epoch is kept.
FinetuneResult finetune(const std::vector<QAExample>& train,
                        const std::vector<QAExample>& dev,
                        const TrainConfig& config,
                        const Model* init = nullptr,
                        std::optional<NGramVocab> vocab = std::nullopt,
                        const EpochCallback& on_epoch = {});

}  // namespace mqa
