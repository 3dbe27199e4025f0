#include "nameprobe/core.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "nameprobe/csv.hpp"
#include "nameprobe/iso3166.hpp"

namespace nameprobe {

std::string_view trim(std::string_view s) {
  constexpr std::string_view ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    char x = a[i], y = b[i];
    if (x >= 'A' && x <= 'Z') x = static_cast<char>(x - 'A' + 'a');
    if (y >= 'A' && y <= 'Z') y = static_cast<char>(y - 'A' + 'a');
    if (x != y) return false;
  }
  return true;
}

// ---------------------------------------------------------------- gender

std::string_view to_string(Gender g) { return g == Gender::male ? "M" : "F"; }

std::optional<Gender> parse_gender(std::string_view text) {
  if (iequals(text, "m") || iequals(text, "male")) return Gender::male;
  if (iequals(text, "f") || iequals(text, "female")) return Gender::female;
  return std::nullopt;
}

// ---------------------------------------------------------------- race

std::string_view to_string(Race5 r) {
  switch (r) {
    case Race5::hispanic: return "Hispanic";
    case Race5::white_not_hispanic: return "White, Not Hispanic";
    case Race5::black_not_hispanic: return "Black, Not Hispanic";
    case Race5::other: return "Other";
    case Race5::asian_pacific_islander: return "Asian Or Pacific Islander";
  }
  return "Other";
}

std::optional<Race5> parse_race5(std::string_view text) {
  for (Race5 r : kAllRace5) {
    if (iequals(text, to_string(r))) return r;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- dates

bool is_valid_date(int year, int month, int day) {
  if (year < 1 || year > 9999 || month < 1 || month > 12 || day < 1) return false;
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int limit = kDays[month - 1];
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  if (month == 2 && leap) limit = 29;
  return day <= limit;
}

std::optional<Date> make_date(int year, int month, int day) {
  if (!is_valid_date(year, month, day)) return std::nullopt;
  return Date{year, month, day};
}

namespace {

// Parses an all-digit run of [min_len, max_len] characters.
std::optional<int> parse_digits(std::string_view s, std::size_t min_len, std::size_t max_len) {
  if (s.size() < min_len || s.size() > max_len) return std::nullopt;
  int value = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return std::nullopt;
    value = value * 10 + (c - '0');
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(s.substr(start));
      return parts;
    }
    parts.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::optional<Date> parse_mmddyyyy(std::string_view text) {
  const auto parts = split(text, '/');
  if (parts.size() != 3) return std::nullopt;
  const auto m = parse_digits(parts[0], 1, 2);
  const auto d = parse_digits(parts[1], 1, 2);
  const auto y = parse_digits(parts[2], 4, 4);
  if (!m || !d || !y) return std::nullopt;
  return make_date(*y, *m, *d);
}

std::optional<Date> parse_iso_date(std::string_view text) {
  const auto parts = split(text, '-');
  if (parts.size() != 3) return std::nullopt;
  const auto y = parse_digits(parts[0], 4, 4);
  const auto m = parse_digits(parts[1], 2, 2);
  const auto d = parse_digits(parts[2], 2, 2);
  if (!m || !d || !y) return std::nullopt;
  return make_date(*y, *m, *d);
}

std::string format_mmddyyyy(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", d.month, d.day, d.year);
  return buf;
}

std::string format_iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
  return buf;
}

// ---------------------------------------------------------------- fields

FieldFormat format_of(FieldKind kind) {
  switch (kind) {
    case FieldKind::country_of_origin:
    case FieldKind::nationality: return FieldFormat::iso3;
    case FieldKind::gender: return FieldFormat::m_or_f;
    case FieldKind::race: return FieldFormat::race5_enum;
    case FieldKind::ethnicity: return FieldFormat::free_text;
    case FieldKind::birth_date: return FieldFormat::mmddyyyy;
    case FieldKind::age: return FieldFormat::integer_years;
  }
  return FieldFormat::free_text;
}

std::string_view label_of(FieldKind kind) {
  switch (kind) {
    case FieldKind::country_of_origin: return "Country of Origin";
    case FieldKind::nationality: return "Nationality";
    case FieldKind::gender: return "Gender";
    case FieldKind::race: return "Race";
    case FieldKind::ethnicity: return "Ethnicity";
    case FieldKind::birth_date: return "Birth Date";
    case FieldKind::age: return "Age";
  }
  return "";
}

std::string_view key_of(FieldKind kind) {
  switch (kind) {
    case FieldKind::country_of_origin: return "country_of_origin";
    case FieldKind::nationality: return "nationality";
    case FieldKind::gender: return "gender";
    case FieldKind::race: return "race";
    case FieldKind::ethnicity: return "ethnicity";
    case FieldKind::birth_date: return "birth_date";
    case FieldKind::age: return "age";
  }
  return "";
}

std::optional<FieldKind> parse_field_key(std::string_view key) {
  for (FieldKind k : kAllFieldKinds) {
    if (key == key_of(k)) return k;
  }
  return std::nullopt;
}

bool is_categorical(FieldKind kind) {
  return kind != FieldKind::birth_date && kind != FieldKind::age;
}

std::optional<std::string> truth_value(const TruthLabels& truth, FieldKind kind) {
  switch (kind) {
    case FieldKind::gender:
      if (truth.gender) return std::string(to_string(*truth.gender));
      break;
    case FieldKind::race:
      if (truth.race5) return std::string(to_string(*truth.race5));
      break;
    case FieldKind::nationality:
      if (truth.nationality) return *truth.nationality;
      break;
    case FieldKind::birth_date:
      if (truth.birth_date) return format_mmddyyyy(*truth.birth_date);
      break;
    case FieldKind::age:
      if (truth.age) return std::to_string(*truth.age);
      break;
    case FieldKind::country_of_origin:
    case FieldKind::ethnicity:
      break;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- race remap

RaceRemapTable RaceRemapTable::default_table() {
  RaceRemapTable t;
  for (Race5 r : kAllRace5) t.add(to_string(r), r);
  t.add("White Not Hispanic", Race5::white_not_hispanic);
  t.add("Black Not Hispanic", Race5::black_not_hispanic);
  t.add("Asian or Pacific Islander", Race5::asian_pacific_islander);
  t.add("Asian", Race5::asian_pacific_islander);
  t.add("nh_white", Race5::white_not_hispanic);
  t.add("nh_black", Race5::black_not_hispanic);
  t.add("American Indian or Alaskan Native", Race5::other);
  t.add("Multi-racial", Race5::other);
  t.add("Multiracial", Race5::other);
  t.add("Unknown", Race5::other);
  t.add("Not Used", Race5::other);
  return t;
}

void RaceRemapTable::add(std::string_view source_label, Race5 target) {
  const std::string key = to_lower_ascii(trim(source_label));
  if (entries_.find(key) == entries_.end()) order_.emplace_back(trim(source_label));
  entries_[key] = target;
}

std::optional<Race5> RaceRemapTable::find(std::string_view source_label) const {
  const auto it = entries_.find(to_lower_ascii(trim(source_label)));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

RaceRemapTable RaceRemapTable::from_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty()) throw Error("race remap: missing header row");
  const auto& header = rows.front();
  if (header.size() != 2 || trim(header[0]) != "source_label" || trim(header[1]) != "race5") {
    throw Error("race remap: header must be 'source_label,race5'");
  }
  RaceRemapTable t;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 2) {
      throw Error("race remap: line " + std::to_string(i + 1) + " must have two columns");
    }
    const auto target = parse_race5(trim(row[1]));
    if (!target) {
      throw Error("race remap: line " + std::to_string(i + 1) + " target '" + row[1] +
                  "' is not one of the five race classes");
    }
    t.add(row[0], *target);
  }
  return t;
}

RaceRemapTable RaceRemapTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open race remap table " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

std::string RaceRemapTable::to_csv() const {
  std::string out = "source_label,race5\n";
  for (const auto& label : order_) {
    const std::string row[] = {label, std::string(to_string(*find(label)))};
    out += csv::format_row(row);
  }
  return out;
}

Race5 canonicalize_race(std::string_view raw_label, const RaceRemapTable& remap) {
  if (const auto r = remap.find(raw_label)) return *r;
  throw UnknownLabel("unknown race label '" + std::string(raw_label) + "'");
}

// ---------------------------------------------------------------- iso3

bool validate_iso3(std::string_view code, Iso3Check mode) {
  if (code.size() != 3) return false;
  for (char c : code) {
    if (c < 'A' || c > 'Z') return false;
  }
  return mode == Iso3Check::pattern || iso3166::is_assigned_alpha3(code);
}

}  // namespace nameprobe
