#include "nameprobe/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nameprobe/analytics.hpp"
#include "nameprobe/config.hpp"
#include "nameprobe/metrics.hpp"
#include "nameprobe/pipeline.hpp"
#include "nameprobe/prediction_io.hpp"
#include "nameprobe/random.hpp"

namespace nameprobe {

namespace fs = std::filesystem;

namespace {

class MissingInput : public Error {
 public:
  using Error::Error;
};

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string cache;
  std::string replay;
  std::string out;
  std::string records;
};

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  fs::path out_path(std::string_view name) const { return cfg.out / std::string(name); }
};

Context make_context(const Overrides& o, std::ostream& out, std::ostream& err) {
  Context ctx{load_config(o.config), out, err};
  if (o.seed) ctx.cfg.seed = o.seed;
  if (!o.cache.empty()) ctx.cfg.cache = fs::path(o.cache);
  if (!o.replay.empty()) {
    if (!fs::exists(o.replay)) throw ConfigError("--replay: file not found: " + o.replay);
    ctx.cfg.replay = fs::path(o.replay);
  }
  if (!o.out.empty()) ctx.cfg.out = fs::path(o.out);
  return ctx;
}

fs::path require_file(const fs::path& p, std::string_view hint) {
  if (!fs::exists(p)) {
    throw MissingInput("missing input " + p.string() + (hint.empty() ? "" : " (" + std::string(hint) + ")"));
  }
  return p;
}

RecordSet dataset_records(const Context& ctx) {
  const auto loaded = load_records(ctx.cfg.dataset.path, ctx.cfg.dataset.load);
  for (const auto& w : loaded.report.warnings) ctx.err << "warning: " << w << "\n";
  if (!ctx.cfg.dataset.subsample) return loaded.records;
  return subsample(loaded.records, *ctx.cfg.dataset.subsample,
                   derive_seed(ctx.cfg.require_seed(), "subsample"));
}

// An explicit --records file, else the dataset named by the config.
RecordSet input_records(const Context& ctx, const Overrides& o) {
  if (!o.records.empty()) return read_records_jsonl(require_file(o.records, "--records"));
  return dataset_records(ctx);
}

// Records for scoring: an explicit --records file, the cleaned set, the
// enrichment input, or the dataset, in that order.
RecordSet truth_records(const Context& ctx, const Overrides& o) {
  if (!o.records.empty()) return read_records_jsonl(require_file(o.records, "--records"));
  for (const char* name : {"kept.jsonl", "records.jsonl"}) {
    if (fs::exists(ctx.out_path(name))) return read_records_jsonl(ctx.out_path(name));
  }
  return dataset_records(ctx);
}

PredictionSet model_predictions(const Context& ctx) {
  return read_predictions_jsonl(require_file(ctx.out_path("predictions.jsonl"), "run enrich first"));
}

std::unique_ptr<Gateway> make_gateway(const Context& ctx, std::span<const ModelSpec> specs) {
  std::shared_ptr<ChatBackend> backend;
  if (ctx.cfg.replay) {
    backend = std::make_shared<ReplayBackend>(
        std::make_shared<const ResponseCache>(ResponseCache::read_only(*ctx.cfg.replay)));
  } else {
    const auto missing = missing_api_keys(specs);
    if (!missing.empty()) {
      std::string names;
      for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
      throw AuthError("API key environment variable not set: " + names);
    }
    backend = std::make_shared<HttpChatBackend>();
  }
  auto cache = ctx.cfg.cache ? std::make_shared<ResponseCache>(*ctx.cfg.cache)
                             : std::make_shared<ResponseCache>();
  return std::make_unique<Gateway>(std::move(backend), std::move(cache), ctx.cfg.retry);
}

std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '.' || c == '_';
    out.push_back(ok ? c : '_');
  }
  return out;
}

// ------------------------------------------------------------ commands

int cmd_enrich(const Context& ctx, const Overrides& o) {
  if (ctx.cfg.models.empty()) throw ConfigError(ctx.cfg.source.string() + ": models: no models configured");
  const RecordSet rs = input_records(ctx, o);
  auto gateway = make_gateway(ctx, ctx.cfg.models);
  const auto preds = enrich(rs, ctx.cfg.models, ctx.cfg.profile, *gateway, ctx.cfg.parsing);
  const auto report = parse_report(preds, ctx.cfg.flag_below);

  write_records_jsonl(rs, ctx.out_path("records.jsonl"));
  write_predictions_jsonl(preds, ctx.out_path("predictions.jsonl"));
  write_text_file(ctx.out_path("parse_report.json"), parse_report_json(report));
  const std::string text = parse_report_text(report);
  write_text_file(ctx.out_path("parse_report.txt"), text);
  ctx.out << fmt::format("enrich: {} records x {} models -> {} predictions\n", rs.size(),
                         ctx.cfg.models.size(), preds.size())
          << text;
  return 0;
}

int cmd_clean(const Context& ctx, const Overrides& o) {
  const auto voters = ctx.cfg.weighted_validity_models();
  if (voters.empty()) {
    throw ConfigError(ctx.cfg.source.string() + ": validity.models: no validity voters configured");
  }
  std::vector<ModelSpec> specs;
  for (const auto& v : voters) specs.push_back(v.spec);
  const RecordSet rs = input_records(ctx, o);
  auto gateway = make_gateway(ctx, specs);
  const auto result = clean_validity(rs, voters, ctx.cfg.validity, *gateway);

  write_records_jsonl(result.kept, ctx.out_path("kept.jsonl"));
  write_records_jsonl(result.discarded, ctx.out_path("discarded.jsonl"));
  write_text_file(ctx.out_path("verdicts.jsonl"), write_verdicts_jsonl(result.verdicts));
  ctx.out << fmt::format("clean: kept {} of {} records (threshold {:.2f})\n", result.kept.size(),
                         rs.size(), ctx.cfg.validity.threshold);
  return 0;
}

int cmd_ensemble(const Context& ctx, const Overrides&) {
  const auto preds = model_predictions(ctx);
  const auto result = ensemble_predictions(preds, ctx.cfg.ensemble, ctx.cfg.require_seed());
  write_predictions_jsonl(result.predictions, ctx.out_path("ensemble.jsonl"));
  write_text_file(ctx.out_path("ensemble_votes.jsonl"), write_votes_jsonl(result.votes));
  const auto ties = std::count_if(result.votes.begin(), result.votes.end(),
                                  [](const EnsemblePrediction& v) { return v.tie_broken; });
  ctx.out << fmt::format("ensemble: {} records, {} votes, {} ties broken\n",
                         result.predictions.size(), result.votes.size(), ties);
  return 0;
}

int cmd_evaluate(const Context& ctx, const Overrides& o) {
  auto preds = model_predictions(ctx);
  if (fs::exists(ctx.out_path("ensemble.jsonl"))) {
    auto ens = read_predictions_jsonl(ctx.out_path("ensemble.jsonl"));
    preds.insert(preds.end(), std::make_move_iterator(ens.begin()), std::make_move_iterator(ens.end()));
  }
  const RecordSet rs = truth_records(ctx, o);
  EvaluationOptions options;
  options.fields = ctx.cfg.evaluate_fields;
  options.strata = ctx.cfg.strata;
  options.suppress_below = ctx.cfg.suppress_below;
  options.seed = ctx.cfg.require_seed();
  const auto tasks = evaluate_all(rs, preds, options);
  if (tasks.empty()) throw MissingInput("no ground truth for any evaluated field");

  write_text_file(ctx.out_path("evaluation.json"), evaluation_json(tasks));
  const std::string text = evaluation_text(tasks);
  write_text_file(ctx.out_path("evaluation.txt"), text);
  ctx.out << text;
  return 0;
}

int cmd_agreement(const Context& ctx, const Overrides&) {
  const auto preds = model_predictions(ctx);
  std::vector<std::string> models = ctx.cfg.agreement_models;
  if (models.empty()) models = model_ids(preds);
  if (models.size() < 2) throw MissingInput("agreement needs predictions from at least two models");

  std::vector<FieldKind> fields = ctx.cfg.agreement_fields;
  if (fields.empty()) {
    for (FieldKind k : kAllFieldKinds) {
      const bool present = std::any_of(preds.begin(), preds.end(),
                                       [&](const Prediction& p) { return p.status(k) == FieldStatus::ok; });
      if (present) fields.push_back(k);
    }
  }

  std::shared_ptr<Embedder> base;
  if (ctx.cfg.embedder.kind == "remote") {
    base = std::make_shared<RemoteEmbedder>(ctx.cfg.embedder.base_url, ctx.cfg.embedder.model,
                                            ctx.cfg.embedder.api_key_env);
  } else {
    base = std::make_shared<HashEmbedder>(ctx.cfg.embedder.dim);
  }
  CachingEmbedder embedder(base);

  std::string summary;
  for (FieldKind field : fields) {
    const auto metric = metric_for(field);
    const auto matrix = agreement_matrix(preds, models, field, metric, &embedder);
    const std::string key(key_of(field));
    write_text_file(ctx.out_path("agreement_" + key + ".csv"), agreement_csv(matrix));
    summary += fmt::format("{} ({})\n", key, to_string(metric));
    try {
      const auto tree = hierarchical_cluster(matrix, ctx.cfg.linkage);
      write_text_file(ctx.out_path("dendrogram_" + key + ".json"), dendrogram_json(tree, models));
      std::string order;
      for (std::size_t i : tree.leaf_order) order += (order.empty() ? "" : ", ") + models[i];
      summary += "  leaf order: " + order + "\n";
    } catch (const InvalidMatrix& e) {
      ctx.err << "warning: " << key << ": no dendrogram: " << e.what() << "\n";
      summary += "  no dendrogram (undefined pairs)\n";
    }
  }
  write_text_file(ctx.out_path("agreement.txt"), "Inter-model agreement (" +
                                                     std::string(to_string(ctx.cfg.linkage)) +
                                                     " linkage)\n" + summary);
  ctx.out << "agreement: " << fields.size() << " fields, " << models.size() << " models\n" << summary;
  return 0;
}

int cmd_bias(const Context& ctx, const Overrides& o) {
  const auto preds = model_predictions(ctx);
  std::optional<RecordSet> truth;
  try {
    truth = truth_records(ctx, o);
  } catch (const Error& e) {
    ctx.err << "warning: no ground truth overlay: " << e.what() << "\n";
  }

  std::vector<BiasReport> reports;
  for (FieldKind field : ctx.cfg.bias_fields) {
    for (const auto& model : model_ids(preds)) {
      const bool requested = std::any_of(preds.begin(), preds.end(), [&](const Prediction& p) {
        return p.model_id == model && p.field_status.count(field);
      });
      if (!requested) continue;
      auto r = bias_report(preds, model, field, truth ? &*truth : nullptr, ctx.cfg.collapse_threshold);
      write_text_file(ctx.out_path("histogram_" + file_safe(model) + "_" + std::string(key_of(field)) + ".csv"),
                      histogram_csv(r.histogram));
      if (r.truth_histogram) {
        write_text_file(ctx.out_path("histogram_truth_" + std::string(key_of(field)) + ".csv"),
                        histogram_csv(*r.truth_histogram));
      }
      reports.push_back(std::move(r));
    }
  }
  write_text_file(ctx.out_path("bias.json"), bias_json(reports));
  const std::string text = bias_text(reports);
  write_text_file(ctx.out_path("bias.txt"), text);
  ctx.out << text;
  return 0;
}

int cmd_report(const Context& ctx, const Overrides&) {
  std::string report;
  std::size_t sections = 0;
  for (const char* name : {"parse_report.txt", "evaluation.txt", "agreement.txt", "bias.txt"}) {
    const auto p = ctx.out_path(name);
    if (!fs::exists(p)) continue;
    if (!report.empty()) report += "\n";
    report += read_text_file(p);
    ++sections;
  }
  if (fs::exists(ctx.out_path("verdicts.jsonl"))) {
    const auto kept = read_records_jsonl(ctx.out_path("kept.jsonl"));
    const auto discarded = read_records_jsonl(ctx.out_path("discarded.jsonl"));
    report = fmt::format("Validity cleaning: kept {} of {} records\n", kept.size(),
                         kept.size() + discarded.size()) +
             (report.empty() ? "" : "\n") + report;
    ++sections;
  }
  if (sections == 0) throw MissingInput("nothing to report in " + ctx.cfg.out.string());
  write_text_file(ctx.out_path("report.txt"), report);
  ctx.out << report;
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Demographic enrichment of person names with chat-completion models"};
  app.require_subcommand(1);
  Overrides o;
  app.add_option("--config", o.config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "Root seed; overrides the config");
  app.add_option("--cache", o.cache, "Response cache journal (JSONL)");
  app.add_option("--replay", o.replay, "Serve model replies from a recorded fixture journal");
  app.add_option("--out", o.out, "Output directory");

  using Command = int (*)(const Context&, const Overrides&);
  const std::vector<std::tuple<std::string, std::string, Command, bool>> commands = {
      {"enrich", "Prompt every model for every record and parse the replies", cmd_enrich, true},
      {"clean", "Weighted validity vote; split records into kept and discarded", cmd_clean, true},
      {"ensemble", "Majority vote across models", cmd_ensemble, false},
      {"evaluate", "Accuracy and MAE against ground truth, with baselines", cmd_evaluate, true},
      {"agreement", "Inter-model agreement matrices and clustering", cmd_agreement, false},
      {"bias", "Birth-year and age distribution diagnostics", cmd_bias, true},
      {"report", "Combine the text reports in the output directory", cmd_report, false},
  };
  std::vector<std::pair<CLI::App*, Command>> subs;
  for (const auto& [name, help, fn, takes_records] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    if (takes_records) sub->add_option("--records", o.records, "Record set JSONL written by an earlier step");
    subs.emplace_back(sub, fn);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    const Context ctx = make_context(o, out, err);
    for (const auto& [sub, fn] : subs) {
      if (sub->parsed()) return fn(ctx, o);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace nameprobe
