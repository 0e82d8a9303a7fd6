#include "mqa/evalkit.hpp"

#include <cstdio>
#include <sstream>

#include "mqa/errors.hpp"
#include "mqa/layers.hpp"

namespace mqa {

namespace {

std::size_t checked_argmax(std::span<const double> probs, std::size_t k) {
  if (probs.empty()) throw ContractViolation("empty probability vector");
  if (k >= probs.size()) {
    throw ContractViolation("label " + std::to_string(k) + " outside [0, " +
                            std::to_string(probs.size() - 1) + "]");
  }
  return nn::argmax(probs);
}

std::optional<double> rate(std::size_t hits, std::size_t n) {
  if (n == 0) return std::nullopt;
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace

int example_accuracy(std::span<const double> probs, std::size_t k) {
  return checked_argmax(probs, k) == k ? 1 : 0;
}

int trigger_accuracy(std::span<const double> probs, std::size_t k) {
  return (checked_argmax(probs, k) == 0) == (k == 0) ? 1 : 0;
}

EvalReport report_from_records(std::vector<EvalRecord> records) {
  EvalReport r;
  std::size_t exact = 0, exact_pos = 0, trigger = 0;
  for (const auto& rec : records) {
    const bool hit = rec.predicted == rec.label;
    exact += hit;
    trigger += (rec.predicted == 0) == (rec.label == 0);
    if (rec.label > 0) {
      ++r.n_positive;
      exact_pos += hit;
    }
  }
  r.n_total = records.size();
  r.overall_acc = rate(exact, r.n_total);
  r.positive_acc = rate(exact_pos, r.n_positive);
  r.trigger_acc = rate(trigger, r.n_total);
  r.records = std::move(records);
  return r;
}

EvalReport evaluate(const Model& model, const std::vector<QAExample>& dataset) {
  std::vector<FeaturizedInput> inputs(dataset.size());
  const long n = static_cast<long>(dataset.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    const auto& ex = dataset[i];
    inputs[i] = featurize_input(
        make_input(ex.context, ex.question, ex.candidates, model.config), model);
  }
  const auto scores = parallel::score_batch(inputs, model);
  std::vector<EvalRecord> records;
  records.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    if (dataset[i].label > dataset[i].candidates.size()) {
      throw ContractViolation("example " + std::to_string(i) +
                              ": label out of range");
    }
    records.push_back({dataset[i].label, scores[i].best});
  }
  return report_from_records(std::move(records));
}

nlohmann::json report_json(const EvalReport& r, const std::string& variant) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"model_variant", variant},
          {"n_total", r.n_total},
          {"n_positive", r.n_positive},
          {"overall_acc", opt(r.overall_acc)},
          {"positive_acc", opt(r.positive_acc)},
          {"trigger_acc", opt(r.trigger_acc)}};
}

std::string format_report(const EvalReport& r, const std::string& variant) {
  const auto cell = [](const std::optional<double>& v) {
    if (!v) return std::string("     n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%8.4f", *v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "model     " << variant << '\n'
      << "examples  " << r.n_total << " (" << r.n_positive << " with an answer)\n"
      << "overall   " << cell(r.overall_acc) << '\n'
      << "positive  " << cell(r.positive_acc) << '\n'
      << "trigger   " << cell(r.trigger_acc) << '\n';
  return out.str();
}

}  // namespace mqa
