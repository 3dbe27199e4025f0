#pragma once

// Loading, normalizing and subsampling person-name record sets.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nameprobe/core.hpp"

namespace nameprobe {

class SchemaError : public Error {
 public:
  using Error::Error;
};

class SampleTooLarge : public Error {
 public:
  using Error::Error;
};

/// Source column names. Empty means "not present". Either `full_name` or
/// both `first_name` and `last_name` must be set.
struct ColumnMapping {
  std::string id;
  std::string full_name;
  std::string first_name;
  std::string last_name;
  std::string gender;
  std::string race;
  std::string birth_date;
  std::string nationality;
  std::string age;
  std::string source;

  /// Every column of the layout produced by write_records_jsonl.
  static ColumnMapping canonical();
};

enum class DateEncoding { mmddyyyy, iso8601 };
enum class InputFormat { automatic, csv, jsonl };

struct LoadOptions {
  ColumnMapping mapping;
  DateEncoding dates = DateEncoding::mmddyyyy;
  InputFormat format = InputFormat::automatic;
  RaceRemapTable race_remap = RaceRemapTable::default_table();
  /// Dataset tag stored on records when no per-row source column is mapped.
  std::string source_tag;
  /// Keep only the first record for each distinct full name.
  bool dedupe_on_full_name = false;
  /// Mapped columns other than the name columns may be absent from the
  /// input; they are then treated as unmapped.
  bool optional_columns = false;
};

/// Which truth fields the record set carries.
struct Schema {
  bool gender = false;
  bool race5 = false;
  bool birth_date = false;
  bool nationality = false;
  bool age = false;

  bool has(FieldKind kind) const;
  bool operator==(const Schema&) const = default;
};

struct RecordSet {
  std::vector<NameRecord> records;
  Schema schema;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  const NameRecord* find(std::string_view id) const;
};

struct LoadReport {
  std::size_t rows_read = 0;
  std::size_t dropped_empty_name = 0;
  std::size_t dropped_duplicate_id = 0;
  std::size_t dropped_duplicate_name = 0;
  std::vector<std::string> warnings;
};

struct LoadResult {
  RecordSet records;
  LoadReport report;
};

/// Throws IoError when the file cannot be read and SchemaError when a mapped
/// column is absent. Bad cell values are reported as warnings and leave the
/// truth field unset.
LoadResult load_records(const std::filesystem::path& path, const LoadOptions& options);
LoadResult parse_records(std::string_view text, InputFormat format, const LoadOptions& options);

/// Uniform sample without replacement that keeps the original relative order.
RecordSet subsample(const RecordSet& rs, std::size_t n, std::uint64_t seed);

/// JSONL with the canonical column layout; dates as mm/dd/yyyy.
std::string write_records_jsonl(const RecordSet& rs);
void write_records_jsonl(const RecordSet& rs, const std::filesystem::path& path);
/// Reads the layout written by write_records_jsonl; the schema comes from
/// the columns present on the first line.
RecordSet parse_records_jsonl(std::string_view text);
RecordSet read_records_jsonl(const std::filesystem::path& path);

}  // namespace nameprobe
