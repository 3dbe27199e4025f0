#pragma once

// Inter-model agreement, agglomerative clustering of models and
// birth-year/age distribution diagnostics.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nameprobe/embedding.hpp"
#include "nameprobe/ingest.hpp"
#include "nameprobe/parsing.hpp"

namespace nameprobe {

class EmptyIntersection : public Error {
 public:
  using Error::Error;
};

class DegenerateVariance : public Error {
 public:
  using Error::Error;
};

class InvalidMatrix : public Error {
 public:
  using Error::Error;
};

enum class AgreementMetric { pairwise_agreement, pearson, embedding_cosine };

std::string_view to_string(AgreementMetric m);

/// The natural metric for a field: correlation for Age and BirthDate,
/// embedding cosine for Ethnicity, exact agreement otherwise.
AgreementMetric metric_for(FieldKind field);

struct AgreementMatrix {
  std::vector<std::string> model_ids;
  /// values[i][j]; NaN where the pair shares no usable records.
  std::vector<std::vector<double>> values;
  AgreementMetric metric = AgreementMetric::pairwise_agreement;
};

/// record_id -> ok-parsed value for one model and field.
using LabelMap = std::map<std::string, std::string>;

LabelMap labels_for(std::span<const Prediction> preds, std::string_view model_id, FieldKind field);

/// Fraction of shared records with identical labels. Throws
/// EmptyIntersection when the two maps share no record.
double pairwise_agreement(const LabelMap& a, const LabelMap& b);
double pairwise_agreement(std::span<const Prediction> preds_a, std::span<const Prediction> preds_b,
                          FieldKind field);

/// Pearson correlation. Throws DegenerateVariance when fewer than two
/// points are given or either side is constant.
double pearson(std::span<const double> x, std::span<const double> y);

/// Pearson correlation of ages (or birth years) over shared records.
double age_correlation(const LabelMap& a, const LabelMap& b);
double age_correlation(std::span<const Prediction> preds_a, std::span<const Prediction> preds_b,
                       FieldKind field = FieldKind::age);

/// Mean over shared records of the cosine between embedded strings.
/// Each distinct string is embedded once. Throws EmptyIntersection.
double ethnicity_similarity(const LabelMap& a, const LabelMap& b, Embedder& embedder);
double ethnicity_similarity(std::span<const Prediction> preds_a, std::span<const Prediction> preds_b,
                            Embedder& embedder);

/// `embedder` is only needed for the embedding metric.
AgreementMatrix agreement_matrix(std::span<const Prediction> preds,
                                 std::span<const std::string> model_ids, FieldKind field,
                                 AgreementMetric metric, Embedder* embedder = nullptr);

/// Header row and first column hold model ids; NaN cells are empty.
std::string agreement_csv(const AgreementMatrix& m);

// ------------------------------------------------------------ clustering

enum class Linkage { average, complete, single };

std::string_view to_string(Linkage l);
std::optional<Linkage> parse_linkage(std::string_view s);

/// One agglomeration step. Leaves are 0..n-1 and the cluster formed by
/// merge k gets id n+k, as in scipy's linkage matrix.
struct Merge {
  std::size_t left = 0;
  std::size_t right = 0;
  double distance = 0.0;
  std::size_t size = 0;
};

struct Dendrogram {
  std::size_t leaf_count = 0;
  std::vector<Merge> merges;
  std::vector<std::size_t> leaf_order;
};

/// Naive agglomerative clustering on a symmetric distance matrix. The
/// closest pair of active clusters merges first; ties go to the pair with
/// the lowest (smaller id, larger id). Throws InvalidMatrix on a non-square,
/// asymmetric or NaN-bearing matrix.
Dendrogram hierarchical_cluster(const std::vector<std::vector<double>>& distance, Linkage linkage);

/// Clusters on distance 1 - value.
Dendrogram hierarchical_cluster(const AgreementMatrix& m, Linkage linkage = Linkage::average);

/// Leaves of the cluster with the given id, ascending.
std::vector<std::size_t> cluster_members(const Dendrogram& d, std::size_t cluster_id);

/// Nested tree: leaves are {"id","label"}, inner nodes
/// {"id","distance","size","children":[left,right]}.
std::string dendrogram_json(const Dendrogram& d, std::span<const std::string> labels);

// ------------------------------------------------------------ bias

inline constexpr double kDefaultCollapseThreshold = 0.25;

struct BiasReport {
  std::string model_id;
  FieldKind field = FieldKind::age;
  std::map<int, std::size_t> histogram;
  std::size_t total = 0;
  std::optional<int> top1_value;
  double top1_share = 0.0;
  /// Years divisible by 10, ages divisible by 5.
  double round_share = 0.0;
  std::size_t distinct_count = 0;
  double collapse_threshold = kDefaultCollapseThreshold;
  /// top1_share >= collapse_threshold (a reporting convention).
  bool collapsed = false;
  std::optional<std::map<int, std::size_t>> truth_histogram;
  /// mean(predicted) - mean(truth) over records having both.
  std::optional<double> mean_shift;
};

/// From plain values (years for BirthDate, ages for Age).
BiasReport bias_report(std::string model_id, FieldKind field, std::span<const int> values,
                       const std::vector<int>* truth = nullptr,
                       double collapse_threshold = kDefaultCollapseThreshold);

/// From one model's predictions; `truth` overlays ground truth when given.
BiasReport bias_report(std::span<const Prediction> preds, std::string_view model_id,
                       FieldKind field, const RecordSet* truth = nullptr,
                       double collapse_threshold = kDefaultCollapseThreshold);

std::string histogram_csv(const std::map<int, std::size_t>& histogram);
std::string bias_json(std::span<const BiasReport> reports);
std::string bias_text(std::span<const BiasReport> reports);

}  // namespace nameprobe
