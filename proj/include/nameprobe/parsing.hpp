#pragma once

// Strict parsing of fixed-format model replies into per-field predictions.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nameprobe/core.hpp"
#include "nameprobe/gateway.hpp"
#include "nameprobe/prompting.hpp"

namespace nameprobe {

enum class FieldStatus { ok, missing, malformed };

std::string_view to_string(FieldStatus s);
std::optional<FieldStatus> parse_field_status(std::string_view s);

inline constexpr std::size_t kMaxEthnicityChars = 120;

struct ParseOptions {
  /// Pattern-only by default: a well-formed code for a wrong or unassigned
  /// country still counts as parsed.
  Iso3Check iso3 = Iso3Check::pattern;
};

/// One model's parsed answer for one record. `values` holds canonical text
/// (e.g. "M", "White, Not Hispanic", "01/15/1985", "35") for exactly the
/// fields whose status is ok.
struct Prediction {
  std::string record_id;
  std::string model_id;
  ResponseStatus response_status = ResponseStatus::ok;
  std::map<FieldKind, std::string> values;
  std::map<FieldKind, FieldStatus> field_status;

  std::optional<std::string> value(FieldKind kind) const;
  /// Fields outside the requested profile read as missing.
  FieldStatus status(FieldKind kind) const;

  bool operator==(const Prediction&) const = default;
};

/// Validates and canonicalizes a single value; nullopt when malformed.
std::optional<std::string> normalize_field_value(FieldKind kind, std::string_view value,
                                                 const ParseOptions& options = {});

/// For each profile field the first line labelled `<Label>:` wins. Labels
/// match case-insensitively after leading whitespace, list bullets and
/// asterisks are stripped; the value is trimmed of whitespace and asterisks.
/// Never throws.
Prediction parse_response(const RawResponse& raw, const FieldProfile& profile,
                          const ParseOptions& options = {});

enum class ValidityVerdict { valid, invalid, unparseable };

std::string_view to_string(ValidityVerdict v);

/// VALID or INVALID as a standalone token, any case. Replies naming both
/// verdicts or neither are unparseable.
ValidityVerdict parse_validity_verdict(const RawResponse& raw);

struct FieldCounts {
  std::size_t ok = 0;
  std::size_t missing = 0;
  std::size_t malformed = 0;

  std::size_t total() const { return ok + missing + malformed; }
  /// Absent when there is nothing to divide by.
  std::optional<double> success_rate() const;
};

struct ResponseCounts {
  std::size_t ok = 0;
  std::size_t transport_error = 0;
  std::size_t refusal_empty = 0;
};

struct ParseReport {
  /// model -> field -> counts. Models without predictions are absent.
  std::map<std::string, std::map<FieldKind, FieldCounts>> cells;
  std::map<std::string, ResponseCounts> responses;
  double flag_below = 0.5;

  std::optional<double> success_rate(const std::string& model, FieldKind field) const;
  /// (model, field) cells whose success rate is below `flag_below`.
  std::vector<std::pair<std::string, FieldKind>> flagged() const;
};

ParseReport parse_report(std::span<const Prediction> predictions, double flag_below = 0.5);

std::string parse_report_json(const ParseReport& report);
std::string parse_report_text(const ParseReport& report);

}  // namespace nameprobe
