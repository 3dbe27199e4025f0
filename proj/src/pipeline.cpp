#include "nameprobe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

#include <json.hpp>

#include "nameprobe/random.hpp"

namespace nameprobe {

using nlohmann::json;

PredictionSet enrich(const RecordSet& rs, std::span<const ModelSpec> specs,
                     const FieldProfile& profile, Gateway& gateway, const ParseOptions& options) {
  profile.validate();
  if (specs.empty()) throw Error("enrich needs at least one model");
  if (rs.empty()) return {};

  // Records whose prompt cannot be built are answered with a transport
  // error for every model instead of being sent.
  std::vector<PromptText> prompts;
  std::vector<std::size_t> prompt_of(rs.size(), SIZE_MAX);
  for (std::size_t r = 0; r < rs.size(); ++r) {
    try {
      prompts.push_back(build_prompt(profile, rs.records[r].full_name, rs.records[r].id));
      prompt_of[r] = prompts.size() - 1;
    } catch (const EmptyName&) {
    }
  }

  const auto responses = gateway.complete_batch(specs, prompts);

  PredictionSet out;
  out.reserve(rs.size() * specs.size());
  for (std::size_t r = 0; r < rs.size(); ++r) {
    for (std::size_t s = 0; s < specs.size(); ++s) {
      if (prompt_of[r] == SIZE_MAX) {
        RawResponse failed;
        failed.record_id = rs.records[r].id;
        failed.model_id = specs[s].model_id;
        failed.status = ResponseStatus::transport_error;
        out.push_back(parse_response(failed, profile, options));
        continue;
      }
      out.push_back(parse_response(responses[s * prompts.size() + prompt_of[r]], profile, options));
    }
  }
  return out;
}

// ------------------------------------------------------------ validity vote

void check_vote_weights(std::span<const double> weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0 && w <= 1.0)) throw BadWeights("vote weight outside [0, 1]");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw BadWeights("vote weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

double validity_score(std::span<const ValidityVerdict> verdicts, std::span<const double> weights,
                      bool renormalize) {
  if (verdicts.size() != weights.size()) throw BadWeights("one weight per verdict is required");
  double valid = 0.0;
  double parseable = 0.0;
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    if (verdicts[i] == ValidityVerdict::valid) valid += weights[i];
    if (verdicts[i] != ValidityVerdict::unparseable) parseable += weights[i];
  }
  if (!renormalize) return valid;
  return parseable > 0.0 ? valid / parseable : 0.0;
}

CleaningResult apply_validity_votes(const RecordSet& rs, std::span<const WeightedModel> models,
                                    const std::vector<std::vector<ValidityVerdict>>& verdicts,
                                    const ValidityOptions& options) {
  if (std::isnan(options.threshold)) throw BadThreshold("validity threshold is NaN");
  std::vector<double> weights;
  for (const auto& m : models) weights.push_back(m.weight);
  check_vote_weights(weights);
  if (verdicts.size() != rs.size()) throw Error("one verdict row per record is required");

  CleaningResult result;
  result.kept.schema = rs.schema;
  result.discarded.schema = rs.schema;
  for (std::size_t r = 0; r < rs.size(); ++r) {
    CleaningVerdict v;
    v.record_id = rs.records[r].id;
    v.validity_score = validity_score(verdicts[r], weights, options.renormalize);
    v.kept = v.validity_score >= options.threshold;
    for (std::size_t m = 0; m < models.size(); ++m) {
      v.per_model.emplace_back(models[m].spec.model_id, verdicts[r][m]);
    }
    (v.kept ? result.kept : result.discarded).records.push_back(rs.records[r]);
    result.verdicts.push_back(std::move(v));
  }
  return result;
}

CleaningResult clean_validity(const RecordSet& rs, std::span<const WeightedModel> models,
                              const ValidityOptions& options, Gateway& gateway) {
  std::vector<double> weights;
  for (const auto& m : models) weights.push_back(m.weight);
  check_vote_weights(weights);

  std::vector<PromptText> prompts;
  prompts.reserve(rs.size());
  for (const auto& rec : rs.records) prompts.push_back(build_validity_prompt(rec.full_name, rec.id));
  std::vector<ModelSpec> specs;
  for (const auto& m : models) specs.push_back(m.spec);

  const auto responses = gateway.complete_batch(specs, prompts);
  std::vector<std::vector<ValidityVerdict>> verdicts(rs.size(),
                                                     std::vector<ValidityVerdict>(models.size()));
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t r = 0; r < rs.size(); ++r) {
      verdicts[r][m] = parse_validity_verdict(responses[m * rs.size() + r]);
    }
  }
  return apply_validity_votes(rs, models, verdicts, options);
}

std::string write_verdicts_jsonl(std::span<const CleaningVerdict> verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    json per_model = json::object();
    for (const auto& [model, verdict] : v.per_model) per_model[model] = to_string(verdict);
    const json line = {{"record_id", v.record_id},
                       {"validity_score", v.validity_score},
                       {"kept", v.kept},
                       {"verdicts", std::move(per_model)}};
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

// ------------------------------------------------------------ ensemble

EnsemblePrediction ensemble_vote(std::string record_id, FieldKind field,
                                 std::span<const std::optional<std::string>> labels,
                                 std::uint64_t seed) {
  std::map<std::string, std::size_t> counts;  // sorted, so co-winners are ordered
  for (const auto& l : labels) {
    if (l) ++counts[*l];
  }
  if (counts.empty()) {
    throw NoVoters("no model produced a usable " + std::string(key_of(field)) + " for record '" +
                   record_id + "'");
  }
  std::size_t best = 0;
  for (const auto& [_, c] : counts) best = std::max(best, c);
  std::vector<const std::string*> winners;
  for (const auto& [label, c] : counts) {
    if (c == best) winners.push_back(&label);
  }

  EnsemblePrediction out;
  out.field = field;
  out.support = best;
  out.tie_broken = winners.size() > 1;
  if (out.tie_broken) {
    Rng rng(derive_seed(seed, record_id + '\x1f' + std::string(key_of(field))));
    out.label = *winners[rng.uniform_index(winners.size())];
  } else {
    out.label = *winners.front();
  }
  out.record_id = std::move(record_id);
  return out;
}

EnsembleResult ensemble_predictions(std::span<const Prediction> preds,
                                    const EnsembleOptions& options, std::uint64_t seed) {
  std::vector<std::string> voters = options.models.empty() ? model_ids(preds) : options.models;
  std::vector<FieldKind> fields = options.fields;
  if (fields.empty()) {
    for (FieldKind k : kAllFieldKinds) {
      if (!is_categorical(k)) continue;
      const bool present = std::any_of(preds.begin(), preds.end(),
                                       [&](const Prediction& p) { return p.field_status.count(k); });
      if (present) fields.push_back(k);
    }
  }

  std::vector<std::string> record_order;
  std::unordered_map<std::string, std::vector<const Prediction*>> by_record;
  for (const auto& p : preds) {
    if (std::find(voters.begin(), voters.end(), p.model_id) == voters.end()) continue;
    auto [it, inserted] = by_record.try_emplace(p.record_id);
    if (inserted) record_order.push_back(p.record_id);
    it->second.push_back(&p);
  }

  EnsembleResult result;
  for (const auto& record_id : record_order) {
    const auto& members = by_record.at(record_id);
    Prediction merged;
    merged.record_id = record_id;
    merged.model_id = options.ensemble_id;
    merged.response_status = ResponseStatus::ok;
    for (FieldKind field : fields) {
      std::vector<std::optional<std::string>> labels;
      for (const Prediction* p : members) labels.push_back(p->value(field));
      const bool any = std::any_of(labels.begin(), labels.end(),
                                   [](const auto& l) { return l.has_value(); });
      if (!any) {
        merged.field_status[field] = FieldStatus::missing;
        continue;
      }
      auto vote = ensemble_vote(record_id, field, labels, seed);
      merged.values[field] = vote.label;
      merged.field_status[field] = FieldStatus::ok;
      result.votes.push_back(std::move(vote));
    }
    result.predictions.push_back(std::move(merged));
  }
  return result;
}

std::string write_votes_jsonl(std::span<const EnsemblePrediction> votes) {
  std::string out;
  for (const auto& v : votes) {
    const json line = {{"record_id", v.record_id},
                       {"field", key_of(v.field)},
                       {"label", v.label},
                       {"support", v.support},
                       {"tie_broken", v.tie_broken}};
    out += line.dump();
    out.push_back('\n');
  }
  return out;
}

}  // namespace nameprobe
