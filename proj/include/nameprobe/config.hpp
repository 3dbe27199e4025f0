#pragma once

// Declarative run configuration (JSON). Relative paths resolve against the
// directory holding the config file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "nameprobe/analytics.hpp"
#include "nameprobe/gateway.hpp"
#include "nameprobe/ingest.hpp"
#include "nameprobe/metrics.hpp"
#include "nameprobe/parsing.hpp"
#include "nameprobe/pipeline.hpp"
#include "nameprobe/prompting.hpp"

namespace nameprobe {

/// Message carries the config file and the offending field.
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct DatasetConfig {
  std::filesystem::path path;
  LoadOptions load;
  std::optional<std::size_t> subsample;
};

struct EmbedderConfig {
  std::string kind = "hash";  // hash | remote
  std::size_t dim = 64;
  std::string base_url;
  std::string model;
  std::string api_key_env;
};

struct RunConfig {
  std::filesystem::path source;  // the config file itself
  std::optional<std::uint64_t> seed;

  DatasetConfig dataset;
  std::vector<ModelSpec> models;
  FieldProfile profile = complex_profile();

  std::optional<std::filesystem::path> cache;
  std::optional<std::filesystem::path> replay;
  std::filesystem::path out = "out";
  RetryPolicy retry;

  ParseOptions parsing;
  double flag_below = 0.5;

  /// Empty means the top-level models with a positive vote_weight.
  std::vector<ModelSpec> validity_models;
  ValidityOptions validity;

  EnsembleOptions ensemble;

  std::vector<FieldKind> evaluate_fields;
  StrataKind strata = StrataKind::race;
  double suppress_below = kDefaultSuppressBelow;

  std::vector<FieldKind> agreement_fields;
  std::vector<std::string> agreement_models;
  Linkage linkage = Linkage::average;
  EmbedderConfig embedder;

  std::vector<FieldKind> bias_fields = {FieldKind::birth_date, FieldKind::age};
  double collapse_threshold = kDefaultCollapseThreshold;

  /// Voters for the validity step, weights taken from vote_weight.
  std::vector<WeightedModel> weighted_validity_models() const;
  /// Throws ConfigError when no seed was configured.
  std::uint64_t require_seed() const;
};

/// Parses and validates; throws ConfigError. Referenced input files must exist.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(std::string_view text, const std::filesystem::path& source);

}  // namespace nameprobe
