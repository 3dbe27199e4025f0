#pragma once

// Stratified evaluation of predictions against ground truth.
//
// A record is a candidate when it has ground truth for the evaluated field.
// Candidates whose prediction is missing or malformed are discarded rather
// than scored, so evaluated + discarded = candidates.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nameprobe/ingest.hpp"
#include "nameprobe/parsing.hpp"

namespace nameprobe {

class NoGroundTruth : public Error {
 public:
  using Error::Error;
};

inline constexpr double kDefaultSuppressBelow = 0.20;
inline constexpr std::string_view kUnknownStratum = "Unknown";

struct StratumMetric {
  std::optional<double> value;
  std::size_t evaluated = 0;
  std::size_t discarded = 0;
};

struct EvalReport {
  std::string task;
  std::string model_id;
  std::optional<double> overall;  // absent when nothing was evaluated
  std::map<std::string, StratumMetric> strata;
  std::size_t evaluated_count = 0;
  std::size_t discarded_count = 0;
  /// mean(predicted) - mean(truth); regression tasks only. Positive means
  /// predictions are more recent on average.
  std::optional<double> mean_shift;
  /// Share of candidates with a usable prediction.
  std::optional<double> parse_success;
  /// Parse success fell below the reporting cutoff; tables show "-".
  bool suppressed = false;
  bool is_baseline = false;
};

struct LabelItem {
  std::string record_id;
  std::optional<std::string> truth;
  std::optional<std::string> predicted;  // nullopt when not parsed ok
  std::string stratum;                   // empty = unstratified
};

struct NumericItem {
  std::string record_id;
  std::optional<double> truth;
  std::optional<double> predicted;
  std::string stratum;
};

/// Exact-match accuracy. Throws NoGroundTruth when no item has truth.
EvalReport accuracy(std::string task, std::string model_id, std::span<const LabelItem> items,
                    double suppress_below = kDefaultSuppressBelow);

/// Mean absolute error plus mean shift. Throws NoGroundTruth when no item
/// has truth.
EvalReport mean_absolute_error(std::string task, std::string model_id,
                               std::span<const NumericItem> items,
                               double suppress_below = kDefaultSuppressBelow);

enum class BaselineKind { random_shuffle, most_frequent, average_year, average_year_per_stratum };

std::string_view to_string(BaselineKind kind);

/// random_shuffle scores truth against a seeded permutation of itself;
/// most_frequent predicts the modal label (ties go to the smallest label).
EvalReport baseline(BaselineKind kind, std::span<const LabelItem> items, std::uint64_t seed);
/// random_shuffle, average_year (global mean) or average_year_per_stratum.
EvalReport baseline(BaselineKind kind, std::span<const NumericItem> items, std::uint64_t seed);

// ------------------------------------------------------------ item builders

enum class StrataKind { none, race, gender };

std::optional<StrataKind> parse_strata_kind(std::string_view s);

/// Ground-truth stratum when the record has one, otherwise the model's own
/// prediction for the stratifying field, otherwise "Unknown".
std::string stratum_of(const NameRecord& rec, const Prediction* pred, StrataKind strata);

/// One item per record; `preds` are a single model's predictions.
std::vector<LabelItem> label_items(const RecordSet& rs, std::span<const Prediction> preds,
                                   FieldKind field, StrataKind strata);
/// Birth years (BirthDate) or ages (Age).
std::vector<NumericItem> numeric_items(const RecordSet& rs, std::span<const Prediction> preds,
                                       FieldKind field, StrataKind strata);

/// Year component of a canonical mm/dd/yyyy value.
std::optional<int> year_of(std::string_view mmddyyyy);

// ------------------------------------------------------------ evaluation run

struct EvaluationOptions {
  std::vector<FieldKind> fields;  // empty = every field with ground truth
  StrataKind strata = StrataKind::race;
  double suppress_below = kDefaultSuppressBelow;
  std::uint64_t seed = 0;
};

struct TaskEvaluation {
  FieldKind field = FieldKind::gender;
  std::vector<EvalReport> baselines;
  std::vector<EvalReport> models;
};

/// Baselines followed by one report per model, for each evaluated field.
/// Models never prompted for a field are left out of its table.
std::vector<TaskEvaluation> evaluate_all(const RecordSet& rs, std::span<const Prediction> preds,
                                         const EvaluationOptions& options);

std::string evaluation_json(std::span<const TaskEvaluation> tasks);
std::string evaluation_text(std::span<const TaskEvaluation> tasks);

}  // namespace nameprobe
