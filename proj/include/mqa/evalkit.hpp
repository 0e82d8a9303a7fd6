#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mqa/ranker.hpp"

namespace mqa {

// 1 when the argmax (lowest index on ties) equals k. Throws
// ContractViolation when k is outside [0, N].
int example_accuracy(std::span<const double> probs, std::size_t k);
// 1 when the argmax and k are both zero or both non-zero.
int trigger_accuracy(std::span<const double> probs, std::size_t k);

struct EvalRecord {
  std::size_t label = 0;
  std::size_t predicted = 0;
  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct EvalReport {
  std::size_t n_total = 0;
  std::size_t n_positive = 0;  // examples with k > 0
  // Absent when the subset they average over is empty.
  std::optional<double> overall_acc;
  std::optional<double> positive_acc;
  std::optional<double> trigger_acc;
  std::vector<EvalRecord> records;
};

EvalReport report_from_records(std::vector<EvalRecord> records);

// Scores every example (in parallel, order-preserving) with the model's own
// input construction and aggregates the three rates.
EvalReport evaluate(const Model& model, const std::vector<QAExample>& dataset);

// Rates and counts only; absent rates are null.
nlohmann::json report_json(const EvalReport& r, const std::string& variant);
std::string format_report(const EvalReport& r, const std::string& variant);

}  // namespace mqa
