#include "nameprobe/analytics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "nameprobe/csv.hpp"
#include "nameprobe/metrics.hpp"
#include "nameprobe/tables.hpp"

namespace nameprobe {

using nlohmann::json;

std::string_view to_string(AgreementMetric m) {
  switch (m) {
    case AgreementMetric::pairwise_agreement: return "pairwise_agreement";
    case AgreementMetric::pearson: return "pearson";
    case AgreementMetric::embedding_cosine: return "embedding_cosine";
  }
  return "pairwise_agreement";
}

AgreementMetric metric_for(FieldKind field) {
  switch (field) {
    case FieldKind::age:
    case FieldKind::birth_date: return AgreementMetric::pearson;
    case FieldKind::ethnicity: return AgreementMetric::embedding_cosine;
    default: return AgreementMetric::pairwise_agreement;
  }
}

LabelMap labels_for(std::span<const Prediction> preds, std::string_view model_id, FieldKind field) {
  LabelMap out;
  for (const auto& p : preds) {
    if (p.model_id != model_id || p.status(field) != FieldStatus::ok) continue;
    if (auto v = p.value(field)) out.try_emplace(p.record_id, std::move(*v));
  }
  return out;
}

namespace {

LabelMap all_labels(std::span<const Prediction> preds, FieldKind field) {
  LabelMap out;
  for (const auto& p : preds) {
    if (p.status(field) != FieldStatus::ok) continue;
    if (auto v = p.value(field)) out.try_emplace(p.record_id, std::move(*v));
  }
  return out;
}

template <typename F>
void for_shared(const LabelMap& a, const LabelMap& b, F&& f) {
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      f(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
}

// Age as an integer, or the year of a mm/dd/yyyy date.
std::optional<int> numeric_value(std::string_view s) {
  if (s.size() == 10) return year_of(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<int> truth_number(const NameRecord& rec, FieldKind field) {
  if (field == FieldKind::age) return rec.truth.age;
  if (field == FieldKind::birth_date && rec.truth.birth_date) return rec.truth.birth_date->year;
  return std::nullopt;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

double pairwise_agreement(const LabelMap& a, const LabelMap& b) {
  std::size_t shared = 0;
  std::size_t same = 0;
  for_shared(a, b, [&](const std::string& x, const std::string& y) {
    ++shared;
    same += x == y;
  });
  if (shared == 0) throw EmptyIntersection("the two models share no labelled record");
  return static_cast<double>(same) / static_cast<double>(shared);
}

double pairwise_agreement(std::span<const Prediction> preds_a, std::span<const Prediction> preds_b,
                          FieldKind field) {
  return pairwise_agreement(all_labels(preds_a, field), all_labels(preds_b, field));
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  if (x.size() < 2) throw DegenerateVariance("correlation needs at least two shared points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(y.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) throw DegenerateVariance("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double age_correlation(const LabelMap& a, const LabelMap& b) {
  std::vector<double> x, y;
  for_shared(a, b, [&](const std::string& va, const std::string& vb) {
    const auto na = numeric_value(va);
    const auto nb = numeric_value(vb);
    if (na && nb) {
      x.push_back(*na);
      y.push_back(*nb);
    }
  });
  return pearson(x, y);
}

double age_correlation(std::span<const Prediction> preds_a, std::span<const Prediction> preds_b,
                       FieldKind field) {
  return age_correlation(all_labels(preds_a, field), all_labels(preds_b, field));
}

double ethnicity_similarity(const LabelMap& a, const LabelMap& b, Embedder& embedder) {
  std::unordered_map<std::string, std::vector<double>> vectors;
  const auto vec = [&](const std::string& s) -> const std::vector<double>& {
    auto it = vectors.find(s);
    if (it == vectors.end()) it = vectors.emplace(s, embedder.embed(s)).first;
    return it->second;
  };
  double sum = 0.0;
  std::size_t shared = 0;
  for_shared(a, b, [&](const std::string& x, const std::string& y) {
    sum += x == y ? 1.0 : cosine_similarity(vec(x), vec(y));
    ++shared;
  });
  if (shared == 0) throw EmptyIntersection("the two models share no labelled record");
  return sum / static_cast<double>(shared);
}

double ethnicity_similarity(std::span<const Prediction> preds_a, std::span<const Prediction> preds_b,
                            Embedder& embedder) {
  return ethnicity_similarity(all_labels(preds_a, FieldKind::ethnicity),
                              all_labels(preds_b, FieldKind::ethnicity), embedder);
}

AgreementMatrix agreement_matrix(std::span<const Prediction> preds,
                                 std::span<const std::string> model_ids, FieldKind field,
                                 AgreementMetric metric, Embedder* embedder) {
  if (metric == AgreementMetric::embedding_cosine && embedder == nullptr) {
    throw EmbedderUnavailable("embedding agreement needs an embedder");
  }
  AgreementMatrix m;
  m.metric = metric;
  m.model_ids.assign(model_ids.begin(), model_ids.end());
  const std::size_t n = model_ids.size();
  std::vector<LabelMap> labels;
  for (const auto& id : model_ids) labels.push_back(labels_for(preds, id, field));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  m.values.assign(n, std::vector<double>(n, nan));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double v = nan;
      try {
        switch (metric) {
          case AgreementMetric::pairwise_agreement: v = pairwise_agreement(labels[i], labels[j]); break;
          case AgreementMetric::pearson: v = age_correlation(labels[i], labels[j]); break;
          case AgreementMetric::embedding_cosine:
            v = ethnicity_similarity(labels[i], labels[j], *embedder);
            break;
        }
      } catch (const EmptyIntersection&) {
      } catch (const DegenerateVariance&) {
      }
      m.values[i][j] = v;
      m.values[j][i] = v;
    }
  }
  return m;
}

std::string agreement_csv(const AgreementMatrix& m) {
  std::vector<std::string> header = {"model"};
  header.insert(header.end(), m.model_ids.begin(), m.model_ids.end());
  std::string out = csv::format_row(header);
  for (std::size_t i = 0; i < m.model_ids.size(); ++i) {
    std::vector<std::string> row = {m.model_ids[i]};
    for (double v : m.values[i]) row.push_back(std::isnan(v) ? "" : fmt::format("{:.6f}", v));
    out += csv::format_row(row);
  }
  return out;
}

// ------------------------------------------------------------ bias

BiasReport bias_report(std::string model_id, FieldKind field, std::span<const int> values,
                       const std::vector<int>* truth, double collapse_threshold) {
  if (field != FieldKind::age && field != FieldKind::birth_date) {
    throw Error("bias reports cover birth_date and age only");
  }
  BiasReport r;
  r.model_id = std::move(model_id);
  r.field = field;
  r.collapse_threshold = collapse_threshold;
  const int round_step = field == FieldKind::age ? 5 : 10;
  std::size_t round = 0;
  for (int v : values) {
    ++r.histogram[v];
    round += v % round_step == 0;
  }
  r.total = values.size();
  r.distinct_count = r.histogram.size();
  if (r.total > 0) {
    std::size_t best = 0;
    for (const auto& [v, c] : r.histogram) {
      if (c > best) {
        best = c;
        r.top1_value = v;
      }
    }
    r.top1_share = static_cast<double>(best) / static_cast<double>(r.total);
    r.round_share = static_cast<double>(round) / static_cast<double>(r.total);
  }
  r.collapsed = r.total > 0 && r.top1_share >= collapse_threshold;
  if (truth != nullptr) {
    std::map<int, std::size_t> th;
    for (int v : *truth) ++th[v];
    r.truth_histogram = std::move(th);
    if (!values.empty() && !truth->empty()) {
      const std::vector<double> p(values.begin(), values.end());
      const std::vector<double> t(truth->begin(), truth->end());
      r.mean_shift = mean_of(p) - mean_of(t);
    }
  }
  return r;
}

BiasReport bias_report(std::span<const Prediction> preds, std::string_view model_id,
                       FieldKind field, const RecordSet* truth, double collapse_threshold) {
  std::vector<int> values;
  std::vector<double> paired_pred, paired_truth;
  for (const auto& p : preds) {
    if (p.model_id != model_id || p.status(field) != FieldStatus::ok) continue;
    const auto v = p.value(field);
    const auto n = v ? numeric_value(*v) : std::nullopt;
    if (!n) continue;
    values.push_back(*n);
    if (truth != nullptr) {
      if (const NameRecord* rec = truth->find(p.record_id)) {
        if (const auto t = truth_number(*rec, field)) {
          paired_pred.push_back(*n);
          paired_truth.push_back(*t);
        }
      }
    }
  }
  if (truth == nullptr) return bias_report(std::string(model_id), field, values, nullptr, collapse_threshold);

  std::vector<int> truth_values;
  for (const auto& rec : truth->records) {
    if (const auto t = truth_number(rec, field)) truth_values.push_back(*t);
  }
  auto r = bias_report(std::string(model_id), field, values, &truth_values, collapse_threshold);
  r.mean_shift.reset();
  if (!paired_pred.empty()) r.mean_shift = mean_of(paired_pred) - mean_of(paired_truth);
  if (truth_values.empty()) r.truth_histogram.reset();
  return r;
}

std::string histogram_csv(const std::map<int, std::size_t>& histogram) {
  std::string out = "value,count\n";
  for (const auto& [v, c] : histogram) out += fmt::format("{},{}\n", v, c);
  return out;
}

namespace {

json histogram_json(const std::map<int, std::size_t>& h) {
  json out = json::array();
  for (const auto& [v, c] : h) out.push_back({{"value", v}, {"count", c}});
  return out;
}

}  // namespace

std::string bias_json(std::span<const BiasReport> reports) {
  json out = json::array();
  for (const auto& r : reports) {
    json j = {{"model_id", r.model_id},
              {"field", key_of(r.field)},
              {"total", r.total},
              {"top1_value", r.top1_value ? json(*r.top1_value) : json(nullptr)},
              {"top1_share", r.top1_share},
              {"round_share", r.round_share},
              {"distinct_count", r.distinct_count},
              {"collapse_threshold", r.collapse_threshold},
              {"collapsed", r.collapsed},
              {"histogram", histogram_json(r.histogram)}};
    j["truth_histogram"] = r.truth_histogram ? histogram_json(*r.truth_histogram) : json(nullptr);
    j["mean_shift"] = r.mean_shift ? json(*r.mean_shift) : json(nullptr);
    out.push_back(std::move(j));
  }
  return out.dump(2) + "\n";
}

std::string bias_text(std::span<const BiasReport> reports) {
  TextTable table({"Model", "Field", "N", "Top value", "Top share", "Round share", "Distinct",
                   "Shift", "Collapsed"});
  double threshold = kDefaultCollapseThreshold;
  for (const auto& r : reports) {
    threshold = r.collapse_threshold;
    table.add_row({r.model_id, std::string(key_of(r.field)), std::to_string(r.total),
                   r.top1_value ? std::to_string(*r.top1_value) : "-",
                   format_fixed(r.total ? std::optional(r.top1_share) : std::nullopt, 2),
                   format_fixed(r.total ? std::optional(r.round_share) : std::nullopt, 2),
                   std::to_string(r.distinct_count), format_fixed(r.mean_shift, 1),
                   r.collapsed ? "yes" : "no"});
  }
  return "Prediction distribution (collapsed = top share >= " + format_fixed(threshold, 2) + ")\n" +
         table.render();
}

}  // namespace nameprobe
