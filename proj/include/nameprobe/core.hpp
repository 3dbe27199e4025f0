#pragma once

// Shared domain types for name-based demographic enrichment.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace nameprobe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownLabel : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

enum class Gender { male, female };

std::string_view to_string(Gender g);
// Accepts "M"/"F" and the synonyms "male"/"female", case-insensitively.
std::optional<Gender> parse_gender(std::string_view text);

enum class Race5 {
  hispanic,
  white_not_hispanic,
  black_not_hispanic,
  other,
  asian_pacific_islander,
};

inline constexpr std::array<Race5, 5> kAllRace5 = {
    Race5::hispanic, Race5::white_not_hispanic, Race5::black_not_hispanic,
    Race5::other, Race5::asian_pacific_islander};

// Canonical label, e.g. "White, Not Hispanic".
std::string_view to_string(Race5 r);
// Case-insensitive match against the five canonical labels only.
std::optional<Race5> parse_race5(std::string_view text);

/// Proleptic Gregorian calendar date.
struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  friend auto operator<=>(const Date&, const Date&) = default;
};

bool is_valid_date(int year, int month, int day);
std::optional<Date> make_date(int year, int month, int day);
/// Strict mm/dd/yyyy: month and day take one or two digits, the year exactly four.
std::optional<Date> parse_mmddyyyy(std::string_view text);
/// yyyy-mm-dd.
std::optional<Date> parse_iso_date(std::string_view text);
std::string format_mmddyyyy(const Date& d);
std::string format_iso_date(const Date& d);

enum class FieldKind {
  country_of_origin,
  nationality,
  gender,
  race,
  ethnicity,
  birth_date,
  age,
};

inline constexpr std::array<FieldKind, 7> kAllFieldKinds = {
    FieldKind::country_of_origin, FieldKind::nationality, FieldKind::gender,
    FieldKind::race,              FieldKind::ethnicity,   FieldKind::birth_date,
    FieldKind::age};

enum class FieldFormat { iso3, m_or_f, race5_enum, free_text, mmddyyyy, integer_years };

FieldFormat format_of(FieldKind kind);
/// Line label used in the prompt's format block, e.g. "Country of Origin".
std::string_view label_of(FieldKind kind);
/// Stable snake_case key used in files and config, e.g. "country_of_origin".
std::string_view key_of(FieldKind kind);
std::optional<FieldKind> parse_field_key(std::string_view key);
/// True for fields whose values are class labels (voting and accuracy apply).
bool is_categorical(FieldKind kind);

struct TruthLabels {
  std::optional<Gender> gender;
  std::optional<Race5> race5;
  std::optional<Date> birth_date;
  std::optional<std::string> nationality;  // ISO3
  std::optional<int> age;

  bool operator==(const TruthLabels&) const = default;
};

/// Ground-truth value for a field rendered the way a parsed prediction is,
/// so the two compare as strings. Empty when the field has no truth slot.
std::optional<std::string> truth_value(const TruthLabels& truth, FieldKind kind);

struct NameRecord {
  std::string id;
  std::string full_name;
  TruthLabels truth;
  std::string source;

  bool operator==(const NameRecord&) const = default;
};

/// Maps source-dataset race labels onto the five-class scheme.
class RaceRemapTable {
 public:
  RaceRemapTable() = default;

  /// Keeps Hispanic, White-NH, Black-NH and Asian/PI; every other known
  /// label folds into Other.
  static RaceRemapTable default_table();
  /// Two-column CSV `source_label,race5` with a header row.
  static RaceRemapTable from_csv(std::string_view text);
  static RaceRemapTable load(const std::filesystem::path& path);

  void add(std::string_view source_label, Race5 target);
  std::optional<Race5> find(std::string_view source_label) const;
  std::size_t size() const { return entries_.size(); }
  std::string to_csv() const;

 private:
  std::map<std::string, Race5> entries_;  // lower-cased, trimmed keys
  std::vector<std::string> order_;        // original spelling, insertion order
};

/// Throws UnknownLabel when the label is absent from the table.
Race5 canonicalize_race(std::string_view raw_label, const RaceRemapTable& remap);

enum class Iso3Check { pattern, strict };

/// Three ASCII uppercase letters; under Iso3Check::strict the code must
/// also be an assigned ISO 3166-1 alpha-3 code.
bool validate_iso3(std::string_view code, Iso3Check mode = Iso3Check::strict);

// String helpers shared across modules.
std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

}  // namespace nameprobe
