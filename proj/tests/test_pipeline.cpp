#include <atomic>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <random>

#include <gtest/gtest.h>

#include "nameprobe/pipeline.hpp"
#include "nameprobe/random.hpp"

using namespace nameprobe;

namespace {

class ScriptedBackend : public ChatBackend {
 public:
  using Script = std::function<ChatReply(const ModelSpec&, const std::string&)>;
  explicit ScriptedBackend(Script script) : script_(std::move(script)) {}
  ChatReply send(const ModelSpec& spec, const std::string&, const std::string& prompt) override {
    ++calls;
    return script_(spec, prompt);
  }
  bool needs_api_key() const override { return false; }
  std::atomic<int> calls{0};

 private:
  Script script_;
};

RecordSet three_records() {
  RecordSet rs;
  rs.schema.gender = true;
  for (const auto& [id, name] : std::vector<std::pair<std::string, std::string>>{
           {"1", "Maria Lopez"}, {"2", "John Smith"}, {"3", "Wei Chen"}}) {
    NameRecord r;
    r.id = id;
    r.full_name = name;
    rs.records.push_back(r);
  }
  return rs;
}

ModelSpec spec(std::string id, double weight = 0.0) {
  ModelSpec s;
  s.model_id = std::move(id);
  s.vote_weight = weight;
  s.max_parallel = 2;
  return s;
}

const std::vector<double> kJudgeWeights = {0.15, 0.35, 0.20, 0.30};

}  // namespace

TEST(Enrich, CardinalityAndOrder) {
  auto backend = std::make_shared<ScriptedBackend>([](const ModelSpec& s, const std::string& prompt) {
    if (s.model_id == "b" && prompt.find("Wei Chen") != std::string::npos) return ChatReply{500, {}, "boom"};
    return ChatReply{200, "Nationality: USA\nGender: " + std::string(s.model_id == "a" ? "F" : "M"), {}};
  });
  Gateway gw(backend, std::make_shared<ResponseCache>(), RetryPolicy{1, std::chrono::milliseconds(0), 1.0, 0.0});
  const std::vector<ModelSpec> specs = {spec("a"), spec("b")};
  const auto preds = enrich(three_records(), specs, simple_profile(), gw);
  ASSERT_EQ(preds.size(), 6u);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].record_id, std::to_string(i / 2 + 1));
    EXPECT_EQ(preds[i].model_id, i % 2 ? "b" : "a");
  }
  EXPECT_EQ(preds[0].value(FieldKind::gender), "F");
  EXPECT_EQ(preds[1].value(FieldKind::gender), "M");
  EXPECT_EQ(preds[5].response_status, ResponseStatus::transport_error);
  EXPECT_EQ(preds[5].status(FieldKind::gender), FieldStatus::missing);
}

TEST(Enrich, WarmCacheIsIdempotent) {
  auto backend = std::make_shared<ScriptedBackend>(
      [](const ModelSpec&, const std::string&) { return ChatReply{200, "Nationality: GBR\nGender: M", {}}; });
  auto cache = std::make_shared<ResponseCache>();
  Gateway gw(backend, cache);
  const std::vector<ModelSpec> specs = {spec("a"), spec("b")};
  const auto first = enrich(three_records(), specs, simple_profile(), gw);
  const int calls = backend->calls.load();
  EXPECT_EQ(calls, 6);
  const auto second = enrich(three_records(), specs, simple_profile(), gw);
  EXPECT_EQ(backend->calls.load(), calls);
  EXPECT_EQ(first, second);
}

TEST(Enrich, BlankNameBecomesFailedPrediction) {
  auto rs = three_records();
  rs.records[1].full_name = "   ";
  auto backend = std::make_shared<ScriptedBackend>(
      [](const ModelSpec&, const std::string&) { return ChatReply{200, "Gender: M", {}}; });
  Gateway gw(backend, nullptr);
  const std::vector<ModelSpec> specs = {spec("a")};
  const auto preds = enrich(rs, specs, simple_profile(), gw);
  ASSERT_EQ(preds.size(), 3u);
  EXPECT_EQ(preds[1].response_status, ResponseStatus::transport_error);
  EXPECT_EQ(backend->calls.load(), 2);
}

TEST(Validity, AllSixteenVerdictCombinations) {
  std::vector<WeightedModel> models;
  for (int m = 0; m < 4; ++m) models.push_back({spec("judge-" + std::to_string(m)), kJudgeWeights[m]});
  RecordSet rs;
  std::vector<std::vector<ValidityVerdict>> verdicts;
  std::vector<bool> expected_kept;
  for (int mask = 0; mask < 16; ++mask) {
    NameRecord r;
    r.id = std::to_string(mask);
    r.full_name = "name " + r.id;
    rs.records.push_back(r);
    std::vector<ValidityVerdict> row;
    // Brute force in integer hundredths so the oracle has no rounding.
    int score = 0;
    const int cents[] = {15, 35, 20, 30};
    for (int m = 0; m < 4; ++m) {
      const bool valid = mask & (1 << m);
      row.push_back(valid ? ValidityVerdict::valid : ValidityVerdict::invalid);
      if (valid) score += cents[m];
    }
    verdicts.push_back(row);
    expected_kept.push_back(score >= 75);
  }
  const auto result = apply_validity_votes(rs, models, verdicts, ValidityOptions{0.75, false});
  std::size_t kept = 0;
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(result.verdicts[i].kept, expected_kept[i]) << "mask " << i;
    kept += result.verdicts[i].kept;
  }
  // {b,c,d}=0.85, {a,b,d}=0.80 and all four are the only ones reaching 0.75.
  EXPECT_EQ(kept, 3u);
  EXPECT_EQ(result.kept.size(), 3u);
  EXPECT_EQ(result.kept.size() + result.discarded.size(), 16u);
}

TEST(Validity, ThresholdExtremesAndErrors) {
  std::vector<WeightedModel> models;
  for (int m = 0; m < 4; ++m) models.push_back({spec("j" + std::to_string(m)), kJudgeWeights[m]});
  RecordSet rs = three_records();
  const std::vector<std::vector<ValidityVerdict>> all_invalid(3, std::vector<ValidityVerdict>(4, ValidityVerdict::invalid));
  const std::vector<std::vector<ValidityVerdict>> all_valid(3, std::vector<ValidityVerdict>(4, ValidityVerdict::valid));
  EXPECT_EQ(apply_validity_votes(rs, models, all_invalid, {0.0, false}).kept.size(), 3u);
  EXPECT_EQ(apply_validity_votes(rs, models, all_valid, {1.01, false}).kept.size(), 0u);
  EXPECT_THROW(apply_validity_votes(rs, models, all_valid, {std::nan(""), false}), BadThreshold);

  auto bad = models;
  bad[0].weight = 0.2;
  EXPECT_THROW(apply_validity_votes(rs, bad, all_valid, {}), BadWeights);
  const std::vector<double> negative = {-0.1, 1.1};
  EXPECT_THROW(check_vote_weights(negative), BadWeights);
  EXPECT_NO_THROW(check_vote_weights(kJudgeWeights));
}

TEST(Validity, UnparseableHandling) {
  const std::vector<ValidityVerdict> v = {ValidityVerdict::unparseable, ValidityVerdict::valid,
                                          ValidityVerdict::valid, ValidityVerdict::invalid};
  EXPECT_NEAR(validity_score(v, kJudgeWeights, false), 0.55, 1e-12);
  EXPECT_NEAR(validity_score(v, kJudgeWeights, true), 0.55 / 0.85, 1e-12);
  const std::vector<ValidityVerdict> none(4, ValidityVerdict::unparseable);
  EXPECT_EQ(validity_score(none, kJudgeWeights, true), 0.0);
}

TEST(Validity, CleanThroughGateway) {
  auto backend = std::make_shared<ScriptedBackend>([](const ModelSpec& s, const std::string& prompt) {
    const bool junk = prompt.find("Wei Chen") != std::string::npos;
    if (s.model_id == "j0") return ChatReply{200, "VALID", {}};
    return ChatReply{200, junk ? "INVALID" : "Valid.", {}};
  });
  Gateway gw(backend, nullptr);
  std::vector<WeightedModel> models;
  for (int m = 0; m < 4; ++m) models.push_back({spec("j" + std::to_string(m)), kJudgeWeights[m]});
  const auto result = clean_validity(three_records(), models, {}, gw);
  ASSERT_EQ(result.discarded.size(), 1u);
  EXPECT_EQ(result.discarded.records[0].full_name, "Wei Chen");
  EXPECT_NEAR(result.verdicts[2].validity_score, 0.15, 1e-12);
  EXPECT_NE(write_verdicts_jsonl(result.verdicts).find("\"kept\":false"), std::string::npos);
}

TEST(Ensemble, MatchesIndependentRecount) {
  std::mt19937_64 gen(99);
  const std::vector<std::string> alphabet = {"A", "B", "C", "D"};
  for (int t = 0; t < 1000; ++t) {
    const std::size_t voters = 1 + gen() % 7;
    std::vector<std::optional<std::string>> labels;
    std::map<std::string, int> counts;
    for (std::size_t v = 0; v < voters; ++v) {
      if (gen() % 5 == 0) {
        labels.push_back(std::nullopt);
      } else {
        labels.push_back(alphabet[gen() % alphabet.size()]);
        ++counts[*labels.back()];
      }
    }
    const std::string id = "r" + std::to_string(t);
    if (counts.empty()) {
      EXPECT_THROW(ensemble_vote(id, FieldKind::gender, labels, 5), NoVoters);
      continue;
    }
    int best = 0;
    for (const auto& [_, c] : counts) best = std::max(best, c);
    int winners = 0;
    for (const auto& [_, c] : counts) winners += c == best;
    const auto vote = ensemble_vote(id, FieldKind::gender, labels, 5);
    ASSERT_EQ(counts.at(vote.label), best);
    ASSERT_EQ(static_cast<int>(vote.support), best);
    ASSERT_EQ(vote.tie_broken, winners > 1);
    // Same inputs, same answer.
    ASSERT_EQ(ensemble_vote(id, FieldKind::gender, labels, 5).label, vote.label);
  }
}

TEST(Ensemble, TieBreakIsRoughlyUniform) {
  const std::vector<std::optional<std::string>> labels = {"F", "M"};
  int f = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) f += ensemble_vote("r" + std::to_string(i), FieldKind::gender, labels, 11).label == "F";
  // 4 sigma band around n/2.
  EXPECT_NEAR(f, n / 2, 4 * std::sqrt(n * 0.25));
}

TEST(Ensemble, PredictionsAreOrderIndependent) {
  PredictionSet preds;
  for (int r = 0; r < 50; ++r) {
    for (const std::string m : {"a", "b", "c", "d"}) {
      Prediction p;
      p.record_id = std::to_string(r);
      p.model_id = m;
      const bool female = (r + m[0]) % 2;
      p.values[FieldKind::gender] = female ? "F" : "M";
      p.field_status[FieldKind::gender] = FieldStatus::ok;
      p.field_status[FieldKind::birth_date] = FieldStatus::missing;
      preds.push_back(p);
    }
  }
  const auto forward = ensemble_predictions(preds, {}, 3);
  std::reverse(preds.begin(), preds.end());
  const auto backward = ensemble_predictions(preds, {}, 3);
  ASSERT_EQ(forward.predictions.size(), 50u);
  std::map<std::string, std::string> a, b;
  for (const auto& p : forward.predictions) a[p.record_id] = *p.value(FieldKind::gender);
  for (const auto& p : backward.predictions) b[p.record_id] = *p.value(FieldKind::gender);
  EXPECT_EQ(a, b);
  // Birth date is not categorical and never voted on.
  EXPECT_FALSE(forward.predictions[0].field_status.count(FieldKind::birth_date));
  EXPECT_EQ(forward.predictions[0].model_id, "ensemble");

  EnsembleOptions only_a;
  only_a.models = {"a"};
  const auto single = ensemble_predictions(preds, only_a, 3);
  for (const auto& v : single.votes) EXPECT_EQ(v.support, 1u);
}
