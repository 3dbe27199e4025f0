#include "nameprobe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "nameprobe/prediction_io.hpp"
#include "nameprobe/random.hpp"
#include "nameprobe/tables.hpp"

namespace nameprobe {

using nlohmann::json;

namespace {

// Accumulates per-item scores (1/0 for accuracy, |error| for MAE) overall
// and per stratum.
struct Accumulator {
  double sum = 0.0;
  std::size_t evaluated = 0;
  std::size_t discarded = 0;
  double truth_sum = 0.0;
  double pred_sum = 0.0;

  std::optional<double> mean() const {
    if (evaluated == 0) return std::nullopt;
    return sum / static_cast<double>(evaluated);
  }
};

template <typename Item, typename ScoreFn>
EvalReport score_items(std::string task, std::string model_id, std::span<const Item> items,
                       double suppress_below, ScoreFn&& score) {
  Accumulator all;
  std::map<std::string, Accumulator> strata;
  bool any_truth = false;
  for (const auto& it : items) {
    if (!it.truth) continue;
    any_truth = true;
    Accumulator* stratum = it.stratum.empty() ? nullptr : &strata[it.stratum];
    if (!it.predicted) {
      ++all.discarded;
      if (stratum) ++stratum->discarded;
      continue;
    }
    const double s = score(*it.truth, *it.predicted);
    for (Accumulator* a : {&all, stratum}) {
      if (!a) continue;
      a->sum += s;
      ++a->evaluated;
    }
    if constexpr (std::is_same_v<Item, NumericItem>) {
      all.truth_sum += *it.truth;
      all.pred_sum += *it.predicted;
    }
  }
  if (!any_truth) {
    throw NoGroundTruth("no ground truth available for task '" + task + "'");
  }

  EvalReport r;
  r.task = std::move(task);
  r.model_id = std::move(model_id);
  r.overall = all.mean();
  r.evaluated_count = all.evaluated;
  r.discarded_count = all.discarded;
  for (const auto& [name, acc] : strata) {
    r.strata[name] = StratumMetric{acc.mean(), acc.evaluated, acc.discarded};
  }
  const auto candidates = all.evaluated + all.discarded;
  r.parse_success = static_cast<double>(all.evaluated) / static_cast<double>(candidates);
  r.suppressed = *r.parse_success < suppress_below;
  if constexpr (std::is_same_v<Item, NumericItem>) {
    if (all.evaluated > 0) {
      const auto n = static_cast<double>(all.evaluated);
      r.mean_shift = all.pred_sum / n - all.truth_sum / n;
    }
  }
  return r;
}

}  // namespace

EvalReport accuracy(std::string task, std::string model_id, std::span<const LabelItem> items,
                    double suppress_below) {
  return score_items(std::move(task), std::move(model_id), items, suppress_below,
                     [](const std::string& t, const std::string& p) { return t == p ? 1.0 : 0.0; });
}

EvalReport mean_absolute_error(std::string task, std::string model_id,
                               std::span<const NumericItem> items, double suppress_below) {
  return score_items(std::move(task), std::move(model_id), items, suppress_below,
                     [](double t, double p) { return std::abs(t - p); });
}

std::string_view to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::random_shuffle: return "random_shuffle";
    case BaselineKind::most_frequent: return "most_frequent";
    case BaselineKind::average_year: return "average_year";
    case BaselineKind::average_year_per_stratum: return "average_year_per_stratum";
  }
  return "";
}

namespace {

template <typename Item>
std::vector<Item> truth_only(std::span<const Item> items) {
  std::vector<Item> out;
  for (const auto& it : items) {
    if (it.truth) out.push_back(it);
  }
  return out;
}

template <typename Item>
void shuffle_truth_into_predictions(std::vector<Item>& items, std::uint64_t seed) {
  std::vector<decltype(items.front().truth)> shuffled;
  for (const auto& it : items) shuffled.push_back(it.truth);
  Rng rng(seed);
  rng.shuffle(std::span(shuffled));
  for (std::size_t i = 0; i < items.size(); ++i) items[i].predicted = shuffled[i];
}

}  // namespace

EvalReport baseline(BaselineKind kind, std::span<const LabelItem> items, std::uint64_t seed) {
  auto pool = truth_only(items);
  if (pool.empty()) throw NoGroundTruth("baseline needs ground truth");
  std::string name;
  switch (kind) {
    case BaselineKind::random_shuffle:
      shuffle_truth_into_predictions(pool, seed);
      name = "Random";
      break;
    case BaselineKind::most_frequent: {
      std::map<std::string, std::size_t> counts;
      for (const auto& it : pool) ++counts[*it.truth];
      auto best = counts.begin();
      for (auto c = counts.begin(); c != counts.end(); ++c) {
        if (c->second > best->second) best = c;
      }
      for (auto& it : pool) it.predicted = best->first;
      name = "Most Frequent (" + best->first + ")";
      break;
    }
    default:
      throw Error("baseline '" + std::string(to_string(kind)) + "' needs numeric truth");
  }
  auto r = accuracy("", std::move(name), pool, 0.0);
  r.is_baseline = true;
  return r;
}

EvalReport baseline(BaselineKind kind, std::span<const NumericItem> items, std::uint64_t seed) {
  auto pool = truth_only(items);
  if (pool.empty()) throw NoGroundTruth("baseline needs ground truth");
  std::string name;
  switch (kind) {
    case BaselineKind::random_shuffle:
      shuffle_truth_into_predictions(pool, seed);
      name = "Random";
      break;
    case BaselineKind::average_year: {
      double sum = 0.0;
      for (const auto& it : pool) sum += *it.truth;
      const double mean = sum / static_cast<double>(pool.size());
      for (auto& it : pool) it.predicted = mean;
      name = fmt::format("Average ({:.0f})", mean);
      break;
    }
    case BaselineKind::average_year_per_stratum: {
      std::map<std::string, std::pair<double, std::size_t>> sums;
      for (const auto& it : pool) {
        auto& [s, n] = sums[it.stratum];
        s += *it.truth;
        ++n;
      }
      for (auto& it : pool) {
        const auto& [s, n] = sums.at(it.stratum);
        it.predicted = s / static_cast<double>(n);
      }
      name = "Average per stratum";
      break;
    }
    case BaselineKind::most_frequent:
      throw Error("most_frequent baseline needs categorical truth");
  }
  auto r = mean_absolute_error("", std::move(name), pool, 0.0);
  r.is_baseline = true;
  return r;
}

// ------------------------------------------------------------ item builders

std::optional<StrataKind> parse_strata_kind(std::string_view s) {
  if (s == "none") return StrataKind::none;
  if (s == "race") return StrataKind::race;
  if (s == "gender") return StrataKind::gender;
  return std::nullopt;
}

std::string stratum_of(const NameRecord& rec, const Prediction* pred, StrataKind strata) {
  if (strata == StrataKind::none) return {};
  const FieldKind field = strata == StrataKind::race ? FieldKind::race : FieldKind::gender;
  if (auto t = truth_value(rec.truth, field)) return *t;
  if (pred) {
    if (auto p = pred->value(field)) return *p;
  }
  return std::string(kUnknownStratum);
}

namespace {

std::unordered_map<std::string_view, const Prediction*> index_by_record(
    std::span<const Prediction> preds) {
  std::unordered_map<std::string_view, const Prediction*> index;
  for (const auto& p : preds) index.emplace(p.record_id, &p);
  return index;
}

}  // namespace

std::vector<LabelItem> label_items(const RecordSet& rs, std::span<const Prediction> preds,
                                   FieldKind field, StrataKind strata) {
  const auto index = index_by_record(preds);
  std::vector<LabelItem> items;
  items.reserve(rs.size());
  for (const auto& rec : rs.records) {
    const auto it = index.find(rec.id);
    const Prediction* p = it == index.end() ? nullptr : it->second;
    items.push_back({rec.id, truth_value(rec.truth, field),
                     p ? p->value(field) : std::nullopt, stratum_of(rec, p, strata)});
  }
  return items;
}

std::optional<int> year_of(std::string_view mmddyyyy) {
  if (const auto d = parse_mmddyyyy(mmddyyyy)) return d->year;
  return std::nullopt;
}

std::vector<NumericItem> numeric_items(const RecordSet& rs, std::span<const Prediction> preds,
                                       FieldKind field, StrataKind strata) {
  if (field != FieldKind::birth_date && field != FieldKind::age) {
    throw Error("numeric evaluation applies to birth_date and age only");
  }
  const auto index = index_by_record(preds);
  auto to_number = [&](const std::optional<std::string>& v) -> std::optional<double> {
    if (!v) return std::nullopt;
    if (field == FieldKind::birth_date) {
      if (const auto y = year_of(*v)) return static_cast<double>(*y);
      return std::nullopt;
    }
    return std::stod(*v);
  };
  std::vector<NumericItem> items;
  items.reserve(rs.size());
  for (const auto& rec : rs.records) {
    const auto it = index.find(rec.id);
    const Prediction* p = it == index.end() ? nullptr : it->second;
    items.push_back({rec.id, to_number(truth_value(rec.truth, field)),
                     to_number(p ? p->value(field) : std::nullopt), stratum_of(rec, p, strata)});
  }
  return items;
}

// ------------------------------------------------------------ evaluation run

namespace {

std::string task_name(FieldKind field) {
  return field == FieldKind::birth_date ? "birth_year" : std::string(key_of(field));
}

}  // namespace

namespace {

// Whether the model was prompted for the field at all.
bool asked(const std::vector<Prediction>& preds, FieldKind field) {
  return std::any_of(preds.begin(), preds.end(),
                     [&](const Prediction& p) { return p.field_status.count(field) > 0; });
}

}  // namespace

std::vector<TaskEvaluation> evaluate_all(const RecordSet& rs, std::span<const Prediction> preds,
                                         const EvaluationOptions& options) {
  std::vector<FieldKind> fields = options.fields;
  if (fields.empty()) {
    for (FieldKind k : kAllFieldKinds) {
      if (rs.schema.has(k)) fields.push_back(k);
    }
  }

  const auto models = model_ids(preds);
  std::map<std::string, std::vector<Prediction>> per_model;
  for (const auto& p : preds) per_model[p.model_id].push_back(p);

  std::vector<TaskEvaluation> out;
  for (FieldKind field : fields) {
    const bool has_truth = std::any_of(rs.records.begin(), rs.records.end(), [&](const auto& r) {
      return truth_value(r.truth, field).has_value();
    });
    if (!has_truth) continue;

    TaskEvaluation task;
    task.field = field;
    const std::string name = task_name(field);
    const std::uint64_t seed = derive_seed(options.seed, name);

    if (is_categorical(field)) {
      const auto truth_items = label_items(rs, {}, field, options.strata);
      for (auto kind : {BaselineKind::random_shuffle, BaselineKind::most_frequent}) {
        auto r = baseline(kind, std::span<const LabelItem>(truth_items), seed);
        r.task = name;
        task.baselines.push_back(std::move(r));
      }
      for (const auto& model : models) {
        if (!asked(per_model[model], field)) continue;
        const auto items = label_items(rs, per_model[model], field, options.strata);
        task.models.push_back(accuracy(name, model, items, options.suppress_below));
      }
    } else {
      const auto truth_items = numeric_items(rs, {}, field, options.strata);
      std::vector<BaselineKind> kinds = {BaselineKind::random_shuffle, BaselineKind::average_year};
      if (options.strata != StrataKind::none) kinds.push_back(BaselineKind::average_year_per_stratum);
      for (auto kind : kinds) {
        auto r = baseline(kind, std::span<const NumericItem>(truth_items), seed);
        r.task = name;
        task.baselines.push_back(std::move(r));
      }
      for (const auto& model : models) {
        if (!asked(per_model[model], field)) continue;
        const auto items = numeric_items(rs, per_model[model], field, options.strata);
        task.models.push_back(mean_absolute_error(name, model, items, options.suppress_below));
      }
    }
    out.push_back(std::move(task));
  }
  return out;
}

namespace {

json report_json(const EvalReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json strata = json::object();
  for (const auto& [name, s] : r.strata) {
    strata[name] = {{"value", opt(s.value)}, {"evaluated", s.evaluated}, {"discarded", s.discarded}};
  }
  json j = {{"model_id", r.model_id},
            {"overall", opt(r.overall)},
            {"evaluated_count", r.evaluated_count},
            {"discarded_count", r.discarded_count},
            {"parse_success", opt(r.parse_success)},
            {"suppressed", r.suppressed},
            {"baseline", r.is_baseline},
            {"strata", std::move(strata)}};
  if (r.mean_shift) j["mean_shift"] = *r.mean_shift;
  return j;
}

}  // namespace

std::string evaluation_json(std::span<const TaskEvaluation> tasks) {
  json out = json::array();
  for (const auto& t : tasks) {
    json rows = json::array();
    for (const auto& r : t.baselines) rows.push_back(report_json(r));
    for (const auto& r : t.models) rows.push_back(report_json(r));
    out.push_back({{"task", task_name(t.field)},
                   {"metric", is_categorical(t.field) ? "accuracy" : "mae"},
                   {"rows", std::move(rows)}});
  }
  return out.dump(2) + "\n";
}

std::string evaluation_text(std::span<const TaskEvaluation> tasks) {
  std::string out;
  for (const auto& t : tasks) {
    const bool categorical = is_categorical(t.field);
    std::vector<std::string> strata;
    auto collect = [&](const std::vector<EvalReport>& rows) {
      for (const auto& r : rows) {
        for (const auto& [name, _] : r.strata) {
          if (std::find(strata.begin(), strata.end(), name) == strata.end()) strata.push_back(name);
        }
      }
    };
    collect(t.baselines);
    collect(t.models);
    std::sort(strata.begin(), strata.end());

    std::vector<std::string> header = {"Model", "Overall"};
    header.insert(header.end(), strata.begin(), strata.end());
    header.emplace_back("Evaluated");
    header.emplace_back("Discarded");
    TextTable table(std::move(header));

    const int digits = categorical ? 2 : 1;
    auto add = [&](const EvalReport& r) {
      std::vector<std::string> row = {r.model_id};
      if (r.suppressed) {
        row.insert(row.end(), 1 + strata.size(), "-");
      } else {
        std::string overall = format_fixed(r.overall, digits);
        if (r.mean_shift && !r.is_baseline) overall += fmt::format(" ({:+.1f})", *r.mean_shift);
        row.push_back(std::move(overall));
        for (const auto& s : strata) {
          const auto it = r.strata.find(s);
          row.push_back(format_fixed(it == r.strata.end() ? std::nullopt : it->second.value, digits));
        }
      }
      row.push_back(std::to_string(r.evaluated_count));
      row.push_back(std::to_string(r.discarded_count));
      table.add_row(std::move(row));
    };
    for (const auto& r : t.baselines) add(r);
    table.add_separator();
    for (const auto& r : t.models) add(r);

    out += fmt::format("{} ({})\n", task_name(t.field), categorical ? "accuracy" : "MAE");
    out += table.render();
    out += '\n';
  }
  return out;
}

}  // namespace nameprobe
