#include "nameprobe/parsing.hpp"

#include <json.hpp>

#include "nameprobe/tables.hpp"

namespace nameprobe {

using nlohmann::json;

std::string_view to_string(FieldStatus s) {
  switch (s) {
    case FieldStatus::ok: return "ok";
    case FieldStatus::missing: return "missing";
    case FieldStatus::malformed: return "malformed";
  }
  return "missing";
}

std::optional<FieldStatus> parse_field_status(std::string_view s) {
  for (auto st : {FieldStatus::ok, FieldStatus::missing, FieldStatus::malformed}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

std::string_view to_string(ValidityVerdict v) {
  switch (v) {
    case ValidityVerdict::valid: return "valid";
    case ValidityVerdict::invalid: return "invalid";
    case ValidityVerdict::unparseable: return "unparseable";
  }
  return "unparseable";
}

std::optional<std::string> Prediction::value(FieldKind kind) const {
  const auto it = values.find(kind);
  if (it == values.end()) return std::nullopt;
  return it->second;
}

FieldStatus Prediction::status(FieldKind kind) const {
  const auto it = field_status.find(kind);
  return it == field_status.end() ? FieldStatus::missing : it->second;
}

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view strip_leading(std::string_view s, std::string_view chars) {
  while (!s.empty() && chars.find(s.front()) != std::string_view::npos) s.remove_prefix(1);
  return s;
}

// Trims whitespace and markdown asterisks from both ends.
std::string_view trim_value(std::string_view s) {
  constexpr std::string_view junk = " \t\r\f\v*";
  const auto b = s.find_first_not_of(junk);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(junk);
  return s.substr(b, e - b + 1);
}

// If `line` is labelled with `label`, returns the raw value after the colon.
std::optional<std::string_view> labelled_value(std::string_view line, std::string_view label) {
  // Leading whitespace, list bullets and bold markers.
  line = strip_leading(line, " \t\r\f\v*-+");
  if (line.size() < label.size() || !iequals(line.substr(0, label.size()), label)) {
    return std::nullopt;
  }
  line.remove_prefix(label.size());
  line = strip_leading(line, "*");
  while (!line.empty() && is_space(line.front())) line.remove_prefix(1);
  if (line.empty() || line.front() != ':') return std::nullopt;
  line.remove_prefix(1);
  return line;
}

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xC0) != 0x80;
  return n;
}

}  // namespace

std::optional<std::string> normalize_field_value(FieldKind kind, std::string_view value,
                                                 const ParseOptions& options) {
  value = trim_value(value);
  if (value.empty()) return std::nullopt;
  switch (format_of(kind)) {
    case FieldFormat::iso3:
      if (validate_iso3(value, options.iso3)) return std::string(value);
      return std::nullopt;
    case FieldFormat::m_or_f:
      if (const auto g = parse_gender(value)) return std::string(to_string(*g));
      return std::nullopt;
    case FieldFormat::race5_enum:
      if (const auto r = parse_race5(value)) return std::string(to_string(*r));
      return std::nullopt;
    case FieldFormat::free_text:
      if (utf8_length(value) <= kMaxEthnicityChars) return std::string(value);
      return std::nullopt;
    case FieldFormat::mmddyyyy:
      if (const auto d = parse_mmddyyyy(value)) return format_mmddyyyy(*d);
      return std::nullopt;
    case FieldFormat::integer_years: {
      if (value.size() > 3) return std::nullopt;
      int years = 0;
      for (char c : value) {
        if (c < '0' || c > '9') return std::nullopt;
        years = years * 10 + (c - '0');
      }
      return std::to_string(years);
    }
  }
  return std::nullopt;
}

Prediction parse_response(const RawResponse& raw, const FieldProfile& profile,
                          const ParseOptions& options) {
  Prediction pred;
  pred.record_id = raw.record_id;
  pred.model_id = raw.model_id;
  pred.response_status = raw.status;
  for (FieldKind kind : profile.fields) pred.field_status[kind] = FieldStatus::missing;
  if (raw.status != ResponseStatus::ok) return pred;

  std::vector<std::string_view> lines;
  std::string_view text = raw.text;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }

  for (FieldKind kind : profile.fields) {
    for (std::string_view line : lines) {
      const auto value = labelled_value(line, label_of(kind));
      if (!value) continue;
      if (auto normalized = normalize_field_value(kind, *value, options)) {
        pred.values[kind] = std::move(*normalized);
        pred.field_status[kind] = FieldStatus::ok;
      } else {
        pred.field_status[kind] = FieldStatus::malformed;
      }
      break;
    }
  }
  return pred;
}

ValidityVerdict parse_validity_verdict(const RawResponse& raw) {
  if (raw.status != ResponseStatus::ok) return ValidityVerdict::unparseable;
  // Tokens are maximal runs of ASCII letters and digits; a reply naming both
  // verdicts, or neither, is unparseable.
  bool saw_valid = false;
  bool saw_invalid = false;
  std::string_view s = raw.text;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto alnum = [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    };
    if (!alnum(s[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && alnum(s[j])) ++j;
    const auto token = s.substr(i, j - i);
    saw_valid = saw_valid || iequals(token, "valid");
    saw_invalid = saw_invalid || iequals(token, "invalid");
    i = j;
  }
  if (saw_valid == saw_invalid) return ValidityVerdict::unparseable;
  return saw_valid ? ValidityVerdict::valid : ValidityVerdict::invalid;
}

std::optional<double> FieldCounts::success_rate() const {
  if (total() == 0) return std::nullopt;
  return static_cast<double>(ok) / static_cast<double>(total());
}

std::optional<double> ParseReport::success_rate(const std::string& model, FieldKind field) const {
  const auto m = cells.find(model);
  if (m == cells.end()) return std::nullopt;
  const auto f = m->second.find(field);
  if (f == m->second.end()) return std::nullopt;
  return f->second.success_rate();
}

std::vector<std::pair<std::string, FieldKind>> ParseReport::flagged() const {
  std::vector<std::pair<std::string, FieldKind>> out;
  for (const auto& [model, fields] : cells) {
    for (const auto& [field, counts] : fields) {
      const auto rate = counts.success_rate();
      if (rate && *rate < flag_below) out.emplace_back(model, field);
    }
  }
  return out;
}

ParseReport parse_report(std::span<const Prediction> predictions, double flag_below) {
  ParseReport report;
  report.flag_below = flag_below;
  for (const auto& p : predictions) {
    auto& fields = report.cells[p.model_id];
    for (const auto& [field, status] : p.field_status) {
      auto& c = fields[field];
      switch (status) {
        case FieldStatus::ok: ++c.ok; break;
        case FieldStatus::missing: ++c.missing; break;
        case FieldStatus::malformed: ++c.malformed; break;
      }
    }
    auto& r = report.responses[p.model_id];
    switch (p.response_status) {
      case ResponseStatus::ok: ++r.ok; break;
      case ResponseStatus::transport_error: ++r.transport_error; break;
      case ResponseStatus::refusal_empty: ++r.refusal_empty; break;
    }
  }
  return report;
}

std::string parse_report_json(const ParseReport& report) {
  json models = json::object();
  for (const auto& [model, fields] : report.cells) {
    json jf = json::object();
    for (const auto& [field, c] : fields) {
      json cell = {{"ok", c.ok}, {"missing", c.missing}, {"malformed", c.malformed}};
      const auto rate = c.success_rate();
      cell["success_rate"] = rate ? json(*rate) : json(nullptr);
      cell["flagged"] = rate && *rate < report.flag_below;
      jf[std::string(key_of(field))] = std::move(cell);
    }
    const auto& r = report.responses.at(model);
    models[model] = {
        {"fields", std::move(jf)},
        {"responses",
         {{"ok", r.ok}, {"transport_error", r.transport_error}, {"refusal_empty", r.refusal_empty}}},
    };
  }
  const json out = {{"flag_below", report.flag_below}, {"models", std::move(models)}};
  return out.dump(2) + "\n";
}

std::string parse_report_text(const ParseReport& report) {
  std::vector<FieldKind> columns;
  for (FieldKind k : kAllFieldKinds) {
    for (const auto& [_, fields] : report.cells) {
      if (fields.count(k)) {
        columns.push_back(k);
        break;
      }
    }
  }
  std::vector<std::string> header = {"Model"};
  for (FieldKind k : columns) header.emplace_back(label_of(k));
  header.emplace_back("Transport errors");
  header.emplace_back("Refusals");
  TextTable table(std::move(header));
  for (const auto& [model, fields] : report.cells) {
    std::vector<std::string> row = {model};
    for (FieldKind k : columns) {
      const auto it = fields.find(k);
      const auto rate = it == fields.end() ? std::nullopt : it->second.success_rate();
      std::string cell = format_fixed(rate, 2);
      if (rate && *rate < report.flag_below) cell += "!";
      row.push_back(std::move(cell));
    }
    const auto& r = report.responses.at(model);
    row.push_back(std::to_string(r.transport_error));
    row.push_back(std::to_string(r.refusal_empty));
    table.add_row(std::move(row));
  }
  return "Parse success rate per model and field (! = below " + format_fixed(report.flag_below, 2) +
         ")\n" + table.render();
}

}  // namespace nameprobe
