#pragma once

// End-to-end enrichment, weighted validity cleaning and majority-vote ensembling.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nameprobe/gateway.hpp"
#include "nameprobe/ingest.hpp"
#include "nameprobe/parsing.hpp"
#include "nameprobe/prediction_io.hpp"
#include "nameprobe/prompting.hpp"

namespace nameprobe {

class BadWeights : public Error {
 public:
  using Error::Error;
};

class BadThreshold : public Error {
 public:
  using Error::Error;
};

class NoVoters : public Error {
 public:
  using Error::Error;
};

/// Prompts every model for every record and parses the replies. Output is
/// record-major, models in `specs` order. Failed pairs become all-missing
/// predictions; nothing here is fatal.
PredictionSet enrich(const RecordSet& rs, std::span<const ModelSpec> specs,
                     const FieldProfile& profile, Gateway& gateway,
                     const ParseOptions& options = {});

// ------------------------------------------------------------ validity vote

struct WeightedModel {
  ModelSpec spec;
  double weight = 0.0;
};

struct ValidityOptions {
  /// Records with score >= threshold are kept.
  double threshold = 0.75;
  /// When false an unparseable verdict counts as invalid. When true the
  /// score is renormalized over models that gave a parseable verdict.
  bool renormalize = false;
};

struct CleaningVerdict {
  std::string record_id;
  double validity_score = 0.0;
  bool kept = false;
  std::vector<std::pair<std::string, ValidityVerdict>> per_model;
};

struct CleaningResult {
  RecordSet kept;
  RecordSet discarded;
  std::vector<CleaningVerdict> verdicts;
};

/// Throws BadWeights unless every weight lies in [0, 1] and they sum to
/// 1 within 1e-9.
void check_vote_weights(std::span<const double> weights);

/// Sum of the weights of models answering valid.
double validity_score(std::span<const ValidityVerdict> verdicts, std::span<const double> weights,
                      bool renormalize = false);

/// Partitions `rs` given a verdict per (record, model); verdicts[r][m].
CleaningResult apply_validity_votes(const RecordSet& rs, std::span<const WeightedModel> models,
                                    const std::vector<std::vector<ValidityVerdict>>& verdicts,
                                    const ValidityOptions& options);

/// Asks each model whether each name is a real person's name and keeps the
/// records whose weighted score reaches the threshold.
CleaningResult clean_validity(const RecordSet& rs, std::span<const WeightedModel> models,
                              const ValidityOptions& options, Gateway& gateway);

std::string write_verdicts_jsonl(std::span<const CleaningVerdict> verdicts);

// ------------------------------------------------------------ ensemble

struct EnsemblePrediction {
  std::string record_id;
  FieldKind field = FieldKind::gender;
  std::string label;
  std::size_t support = 0;
  bool tie_broken = false;
};

/// Most frequent label among the ok-parsed ones (nullopt entries do not
/// vote). Ties are broken uniformly at random with a seed derived from
/// (seed, record_id, field), so record order never matters. Throws NoVoters
/// when no label is present.
EnsemblePrediction ensemble_vote(std::string record_id, FieldKind field,
                                 std::span<const std::optional<std::string>> labels,
                                 std::uint64_t seed);

struct EnsembleOptions {
  /// Voting models; empty means every model in the prediction set.
  std::vector<std::string> models;
  /// Fields to vote on; empty means every categorical field present.
  std::vector<FieldKind> fields;
  std::string ensemble_id = "ensemble";
};

struct EnsembleResult {
  PredictionSet predictions;  // one per record, model_id = ensemble_id
  std::vector<EnsemblePrediction> votes;
};

EnsembleResult ensemble_predictions(std::span<const Prediction> preds,
                                    const EnsembleOptions& options, std::uint64_t seed);

std::string write_votes_jsonl(std::span<const EnsemblePrediction> votes);

}  // namespace nameprobe
