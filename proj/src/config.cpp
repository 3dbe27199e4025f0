#include "nameprobe/config.hpp"

#include <cmath>

#include <json.hpp>

#include "nameprobe/prediction_io.hpp"

namespace nameprobe {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<WeightedModel> RunConfig::weighted_validity_models() const {
  std::vector<WeightedModel> out;
  if (!validity_models.empty()) {
    for (const auto& m : validity_models) out.push_back({m, m.vote_weight});
    return out;
  }
  for (const auto& m : models) {
    if (m.vote_weight > 0.0) out.push_back({m, m.vote_weight});
  }
  return out;
}

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError(source.string() + ": seed: no seed configured (set \"seed\" or pass --seed)");
  return *seed;
}

namespace {

// Field-path aware accessor over a JSON object.
class Section {
 public:
  Section(const json& j, std::string path, const fs::path& source)
      : j_(j), path_(std::move(path)), source_(source) {
    if (!j_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what, std::string_view key = {}) const {
    std::string where = path_;
    if (!key.empty()) where += (where.empty() ? "" : ".") + std::string(key);
    throw ConfigError(source_.string() + ": " + (where.empty() ? "<root>" : where) + ": " + what);
  }

  bool has(std::string_view key) const { return j_.contains(key) && !j_.at(std::string(key)).is_null(); }

  Section section(std::string_view key) const {
    return Section(j_.at(std::string(key)), child(key), source_);
  }

  std::string child(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  const json& raw(std::string_view key) const { return j_.at(std::string(key)); }

  std::string str(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_string()) fail("expected a string", key);
    return v.get<std::string>();
  }
  std::string str(std::string_view key, std::string fallback) const {
    return has(key) ? str(key) : std::move(fallback);
  }

  double num(std::string_view key, double fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number()) fail("expected a number", key);
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail("expected a finite number", key);
    return d;
  }

  std::uint64_t uint(std::string_view key) const {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail("expected a non-negative integer", key);
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) fail("expected true or false", key);
    return v.get<bool>();
  }

  std::vector<std::string> strings(std::string_view key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const json& v = raw(key);
    if (!v.is_array()) fail("expected an array of strings", key);
    for (const auto& e : v) {
      if (!e.is_string()) fail("expected an array of strings", key);
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  std::vector<FieldKind> fields(std::string_view key) const {
    std::vector<FieldKind> out;
    for (const auto& s : strings(key)) {
      const auto k = parse_field_key(s);
      if (!k) fail("unknown field '" + s + "'", key);
      out.push_back(*k);
    }
    return out;
  }

  fs::path file(std::string_view key, bool must_exist) const {
    fs::path p = str(key);
    if (p.is_relative()) p = source_.parent_path() / p;
    p = p.lexically_normal();
    if (must_exist && !fs::exists(p)) fail("file not found: " + p.string(), key);
    return p;
  }

  const fs::path& source() const { return source_; }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  const fs::path& source_;
};

ModelSpec parse_model(const Section& s) {
  ModelSpec m;
  if (!s.has("id")) s.fail("missing", "id");
  m.model_id = s.str("id");
  if (m.model_id.empty()) s.fail("must not be empty", "id");
  m.base_url = s.str("base_url", "");
  m.api_key_env = s.str("api_key_env", "");
  m.vote_weight = s.num("vote_weight", s.num("weight", 0.0));
  const double parallel = s.num("max_parallel", 1);
  if (parallel != std::floor(parallel)) s.fail("expected an integer", "max_parallel");
  m.max_parallel = static_cast<int>(parallel);
  const std::string openness = s.str("openness", "closed");
  if (openness == "open") {
    m.openness = Openness::open;
  } else if (openness != "closed") {
    s.fail("expected \"open\" or \"closed\"", "openness");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    s.fail(e.what());
  }
  return m;
}

std::vector<ModelSpec> parse_models(const Section& parent, std::string_view key) {
  std::vector<ModelSpec> out;
  if (!parent.has(key)) return out;
  const json& arr = parent.raw(key);
  if (!arr.is_array()) parent.fail("expected an array of model objects", key);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const Section s(arr[i], parent.child(key) + "[" + std::to_string(i) + "]", parent.source());
    out.push_back(parse_model(s));
    for (std::size_t k = 0; k + 1 < out.size(); ++k) {
      if (out[k].model_id == out.back().model_id) s.fail("duplicate model id '" + out.back().model_id + "'", "id");
    }
  }
  return out;
}

void parse_dataset(const Section& s, DatasetConfig& d) {
  if (!s.has("path")) s.fail("missing", "path");
  d.path = s.file("path", true);

  const std::string format = s.str("format", "auto");
  if (format == "csv") {
    d.load.format = InputFormat::csv;
  } else if (format == "jsonl") {
    d.load.format = InputFormat::jsonl;
  } else if (format != "auto") {
    s.fail("expected csv, jsonl or auto", "format");
  }

  const std::string dates = s.str("date_format", "mmddyyyy");
  if (dates == "iso8601") {
    d.load.dates = DateEncoding::iso8601;
  } else if (dates != "mmddyyyy") {
    s.fail("expected mmddyyyy or iso8601", "date_format");
  }

  if (s.has("columns")) {
    const Section c = s.section("columns");
    auto& m = d.load.mapping;
    m.id = c.str("id", "");
    m.full_name = c.str("full_name", "");
    m.first_name = c.str("first_name", "");
    m.last_name = c.str("last_name", "");
    m.gender = c.str("gender", "");
    m.race = c.str("race", "");
    m.birth_date = c.str("birth_date", "");
    m.nationality = c.str("nationality", "");
    m.age = c.str("age", "");
    m.source = c.str("source", "");
    if (m.full_name.empty() && (m.first_name.empty() || m.last_name.empty())) {
      c.fail("map full_name, or both first_name and last_name");
    }
  } else {
    d.load.mapping = ColumnMapping::canonical();
    d.load.optional_columns = true;
  }

  if (s.has("race_remap")) {
    const fs::path remap = s.file("race_remap", true);
    try {
      d.load.race_remap = RaceRemapTable::load(remap);
    } catch (const Error& e) {
      s.fail(e.what(), "race_remap");
    }
  }
  if (s.has("subsample")) d.subsample = s.uint("subsample");
  d.load.dedupe_on_full_name = s.boolean("dedupe_on_full_name", false);
  d.load.source_tag = s.str("source", "");
}

void parse_profile(const Section& root, RunConfig& cfg) {
  if (!root.has("profile")) return;
  const json& p = root.raw("profile");
  if (p.is_string()) {
    const auto builtin = builtin_profile(p.get<std::string>());
    if (!builtin) root.fail("unknown built-in profile '" + p.get<std::string>() + "'", "profile");
    cfg.profile = *builtin;
    return;
  }
  const Section s = root.section("profile");
  FieldProfile profile;
  if (s.has("builtin")) {
    const auto builtin = builtin_profile(s.str("builtin"));
    if (!builtin) s.fail("unknown built-in profile", "builtin");
    profile = *builtin;
  }
  if (s.has("name")) profile.name = s.str("name");
  if (s.has("fields")) profile.fields = s.fields("fields");
  if (s.has("template")) profile.template_text = read_text_file(s.file("template", true));
  try {
    profile.validate();
  } catch (const Error& e) {
    s.fail(e.what());
  }
  cfg.profile = std::move(profile);
}

}  // namespace

RunConfig parse_config(std::string_view text, const fs::path& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source.string() + ": invalid JSON: " + e.what());
  }
  const Section root(j, "", source);

  RunConfig cfg;
  cfg.source = source;
  if (root.has("seed")) cfg.seed = root.uint("seed");

  if (!root.has("dataset")) root.fail("missing", "dataset");
  parse_dataset(root.section("dataset"), cfg.dataset);

  cfg.models = parse_models(root, "models");
  parse_profile(root, cfg);

  if (root.has("cache")) cfg.cache = root.file("cache", false);
  if (root.has("replay")) cfg.replay = root.file("replay", true);
  if (root.has("out")) cfg.out = root.file("out", false);
  else cfg.out = (source.parent_path() / "out").lexically_normal();

  if (root.has("retry")) {
    const Section r = root.section("retry");
    cfg.retry.max_attempts = static_cast<int>(r.num("max_attempts", cfg.retry.max_attempts));
    cfg.retry.initial_backoff =
        std::chrono::milliseconds(static_cast<long>(r.num("initial_backoff_ms", 1000)));
    cfg.retry.multiplier = r.num("multiplier", cfg.retry.multiplier);
    cfg.retry.jitter = r.num("jitter", cfg.retry.jitter);
    if (cfg.retry.max_attempts < 1) r.fail("must be at least 1", "max_attempts");
    if (cfg.retry.jitter < 0.0 || cfg.retry.jitter >= 1.0) r.fail("must lie in [0, 1)", "jitter");
  }

  if (root.has("parsing")) {
    const Section p = root.section("parsing");
    if (p.boolean("strict_iso3", false)) cfg.parsing.iso3 = Iso3Check::strict;
    cfg.flag_below = p.num("flag_below", cfg.flag_below);
  }

  if (root.has("validity")) {
    const Section v = root.section("validity");
    cfg.validity_models = parse_models(v, "models");
    cfg.validity.threshold = v.num("threshold", cfg.validity.threshold);
    cfg.validity.renormalize = v.boolean("renormalize", false);
  }

  if (root.has("ensemble")) {
    const Section e = root.section("ensemble");
    cfg.ensemble.models = e.strings("models");
    cfg.ensemble.fields = e.fields("fields");
    for (FieldKind k : cfg.ensemble.fields) {
      if (!is_categorical(k)) e.fail("only categorical fields can be ensembled", "fields");
    }
    cfg.ensemble.ensemble_id = e.str("id", cfg.ensemble.ensemble_id);
  }

  if (root.has("evaluate")) {
    const Section e = root.section("evaluate");
    cfg.evaluate_fields = e.fields("fields");
    if (e.has("strata")) {
      const auto s = parse_strata_kind(e.str("strata"));
      if (!s) e.fail("expected none, race or gender", "strata");
      cfg.strata = *s;
    }
    cfg.suppress_below = e.num("suppress_below", cfg.suppress_below);
  }

  if (root.has("agreement")) {
    const Section a = root.section("agreement");
    cfg.agreement_fields = a.fields("fields");
    cfg.agreement_models = a.strings("models");
    if (a.has("linkage")) {
      const auto l = parse_linkage(a.str("linkage"));
      if (!l) a.fail("expected average, complete or single", "linkage");
      cfg.linkage = *l;
    }
    if (a.has("embedder")) {
      const Section e = a.section("embedder");
      cfg.embedder.kind = e.str("kind", "hash");
      if (cfg.embedder.kind != "hash" && cfg.embedder.kind != "remote") {
        e.fail("expected hash or remote", "kind");
      }
      cfg.embedder.dim = static_cast<std::size_t>(e.num("dim", 64));
      cfg.embedder.base_url = e.str("base_url", "");
      cfg.embedder.model = e.str("model", "");
      cfg.embedder.api_key_env = e.str("api_key_env", "");
      if (cfg.embedder.kind == "remote" && (cfg.embedder.base_url.empty() || cfg.embedder.model.empty())) {
        e.fail("a remote embedder needs base_url and model");
      }
    }
  }

  if (root.has("bias")) {
    const Section b = root.section("bias");
    if (b.has("fields")) cfg.bias_fields = b.fields("fields");
    for (FieldKind k : cfg.bias_fields) {
      if (k != FieldKind::birth_date && k != FieldKind::age) {
        b.fail("bias covers birth_date and age only", "fields");
      }
    }
    cfg.collapse_threshold = b.num("collapse_threshold", cfg.collapse_threshold);
  }

  const auto voters = cfg.weighted_validity_models();
  if (root.has("validity") && !voters.empty()) {
    std::vector<double> weights;
    for (const auto& v : voters) weights.push_back(v.weight);
    try {
      check_vote_weights(weights);
    } catch (const BadWeights& e) {
      root.fail(e.what(), "validity");
    }
  }
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError(path.string() + ": config file not found");
  return parse_config(read_text_file(path), path);
}

}  // namespace nameprobe
