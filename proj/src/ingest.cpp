#include "nameprobe/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "nameprobe/csv.hpp"
#include "nameprobe/prediction_io.hpp"
#include "nameprobe/random.hpp"

namespace nameprobe {

using nlohmann::json;

ColumnMapping ColumnMapping::canonical() {
  ColumnMapping m;
  m.id = "id";
  m.full_name = "full_name";
  m.gender = "gender";
  m.race = "race";
  m.birth_date = "birth_date";
  m.nationality = "nationality";
  m.age = "age";
  m.source = "source";
  return m;
}

bool Schema::has(FieldKind kind) const {
  switch (kind) {
    case FieldKind::gender: return gender;
    case FieldKind::race: return race5;
    case FieldKind::birth_date: return birth_date;
    case FieldKind::nationality: return nationality;
    case FieldKind::age: return age;
    default: return false;
  }
}

const NameRecord* RecordSet::find(std::string_view id) const {
  for (const auto& r : records) {
    if (r.id == id) return &r;
  }
  return nullptr;
}

namespace {

// One input row as column -> cell text. Missing optional columns read as "".
struct RowView {
  const std::vector<std::string>* header = nullptr;
  std::vector<std::string> cells;

  std::optional<std::string_view> get(const std::string& column) const {
    for (std::size_t i = 0; i < header->size(); ++i) {
      if ((*header)[i] == column) {
        if (i < cells.size()) return std::string_view(cells[i]);
        return std::string_view();
      }
    }
    return std::nullopt;
  }
};

class RecordBuilder {
 public:
  explicit RecordBuilder(const LoadOptions& options) : opts_(options), m_(options.mapping) {
    if (m_.full_name.empty() && (m_.first_name.empty() || m_.last_name.empty())) {
      throw SchemaError("column mapping needs full_name or both first_name and last_name");
    }
    set_schema();
  }

  void check_header(const std::vector<std::string>& header) {
    auto present = [&](const std::string& col) {
      return std::find(header.begin(), header.end(), col) != header.end();
    };
    for (std::string* col : {&m_.full_name, &m_.first_name, &m_.last_name}) {
      if (!col->empty() && !present(*col)) {
        throw SchemaError("mapped column '" + *col + "' is missing from the input");
      }
    }
    for (std::string* col : {&m_.id, &m_.gender, &m_.race, &m_.birth_date, &m_.nationality, &m_.age,
                             &m_.source}) {
      if (col->empty() || present(*col)) continue;
      if (!opts_.optional_columns) {
        throw SchemaError("mapped column '" + *col + "' is missing from the input");
      }
      col->clear();
    }
    set_schema();
  }

  void add_row(const RowView& row) {
    ++result_.report.rows_read;
    const std::size_t line = result_.report.rows_read;
    const auto& m = m_;

    std::string name;
    if (!m.full_name.empty()) {
      name = std::string(trim(*row.get(m.full_name)));
    } else {
      const auto first = trim(*row.get(m.first_name));
      const auto last = trim(*row.get(m.last_name));
      name = std::string(first);
      if (!first.empty() && !last.empty()) name += ' ';
      name += last;
    }
    if (name.empty()) {
      ++result_.report.dropped_empty_name;
      return;
    }

    NameRecord rec;
    rec.full_name = std::move(name);
    rec.id = m.id.empty() ? "row-" + std::to_string(line) : std::string(trim(*row.get(m.id)));
    if (rec.id.empty()) {
      warn(line, "empty id; row dropped");
      ++result_.report.dropped_duplicate_id;
      return;
    }
    if (!ids_.insert(rec.id).second) {
      warn(line, "duplicate id '" + rec.id + "'; row dropped");
      ++result_.report.dropped_duplicate_id;
      return;
    }
    if (opts_.dedupe_on_full_name && !names_.insert(rec.full_name).second) {
      ++result_.report.dropped_duplicate_name;
      return;
    }
    rec.source = m.source.empty() ? opts_.source_tag : std::string(trim(*row.get(m.source)));

    auto cell = [&](const std::string& col) -> std::string_view {
      return col.empty() ? std::string_view() : trim(*row.get(col));
    };

    if (const auto v = cell(m.gender); !v.empty()) {
      rec.truth.gender = parse_gender(v);
      if (!rec.truth.gender) warn(line, "unrecognized gender '" + std::string(v) + "'");
    }
    if (const auto v = cell(m.race); !v.empty()) {
      rec.truth.race5 = opts_.race_remap.find(v);
      if (!rec.truth.race5) warn(line, "race label '" + std::string(v) + "' not in remap table");
    }
    if (const auto v = cell(m.birth_date); !v.empty()) {
      rec.truth.birth_date =
          opts_.dates == DateEncoding::mmddyyyy ? parse_mmddyyyy(v) : parse_iso_date(v);
      if (!rec.truth.birth_date) warn(line, "invalid birth date '" + std::string(v) + "'");
    }
    if (const auto v = cell(m.nationality); !v.empty()) {
      if (validate_iso3(v, Iso3Check::pattern)) {
        rec.truth.nationality = std::string(v);
      } else {
        warn(line, "nationality '" + std::string(v) + "' is not an ISO3 code");
      }
    }
    if (const auto v = cell(m.age); !v.empty()) {
      int age = 0;
      bool ok = v.size() <= 3;
      for (char c : v) {
        ok = ok && c >= '0' && c <= '9';
        if (ok) age = age * 10 + (c - '0');
      }
      if (ok) {
        rec.truth.age = age;
      } else {
        warn(line, "invalid age '" + std::string(v) + "'");
      }
    }
    result_.records.records.push_back(std::move(rec));
  }

  LoadResult finish() { return std::move(result_); }

 private:
  void set_schema() {
    result_.records.schema.gender = !m_.gender.empty();
    result_.records.schema.race5 = !m_.race.empty();
    result_.records.schema.birth_date = !m_.birth_date.empty();
    result_.records.schema.nationality = !m_.nationality.empty();
    result_.records.schema.age = !m_.age.empty();
  }

  void warn(std::size_t line, const std::string& msg) {
    result_.report.warnings.push_back("row " + std::to_string(line) + ": " + msg);
  }

  const LoadOptions& opts_;
  ColumnMapping m_;
  LoadResult result_;
  std::unordered_set<std::string> ids_;
  std::unordered_set<std::string> names_;
};

std::string json_cell(const json& v) {
  if (v.is_null()) return {};
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

LoadResult parse_records(std::string_view text, InputFormat format, const LoadOptions& options) {
  RecordBuilder builder(options);
  if (format == InputFormat::automatic) {
    format = trim(text).starts_with("{") ? InputFormat::jsonl : InputFormat::csv;
  }

  if (format == InputFormat::csv) {
    auto rows = csv::parse(text);
    if (rows.empty()) throw SchemaError("csv input has no header row");
    std::vector<std::string> header = std::move(rows.front());
    for (auto& h : header) h = std::string(trim(h));
    builder.check_header(header);
    for (std::size_t i = 1; i < rows.size(); ++i) {
      builder.add_row(RowView{&header, std::move(rows[i])});
    }
    return builder.finish();
  }

  // JSONL: the header is the union of the mapped columns; absent keys are
  // allowed per row but a mapped column must appear in at least one row.
  std::vector<std::string> header;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  std::vector<json> objects;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError("jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object()) {
      throw SchemaError("jsonl line " + std::to_string(lineno) + ": not an object");
    }
    for (const auto& [k, _] : obj.items()) {
      if (seen.insert(k).second) header.push_back(k);
    }
    objects.push_back(std::move(obj));
  }
  if (!objects.empty()) builder.check_header(header);
  for (const auto& obj : objects) {
    RowView row{&header, {}};
    row.cells.reserve(header.size());
    for (const auto& col : header) {
      const auto it = obj.find(col);
      row.cells.push_back(it == obj.end() ? std::string() : json_cell(*it));
    }
    builder.add_row(row);
  }
  return builder.finish();
}

LoadResult load_records(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());

  InputFormat format = options.format;
  if (format == InputFormat::automatic) {
    const auto ext = to_lower_ascii(path.extension().string());
    if (ext == ".jsonl" || ext == ".ndjson") format = InputFormat::jsonl;
    if (ext == ".csv") format = InputFormat::csv;
  }
  return parse_records(ss.str(), format, options);
}

RecordSet subsample(const RecordSet& rs, std::size_t n, std::uint64_t seed) {
  if (n > rs.size()) {
    throw SampleTooLarge("cannot sample " + std::to_string(n) + " records from " +
                         std::to_string(rs.size()));
  }
  RecordSet out;
  out.schema = rs.schema;
  out.records.reserve(n);
  Rng rng(seed);
  std::size_t needed = n;
  for (std::size_t i = 0; i < rs.size() && needed > 0; ++i) {
    // Selection sampling: keep with probability needed / remaining.
    if (rng.uniform_index(rs.size() - i) < needed) {
      out.records.push_back(rs.records[i]);
      --needed;
    }
  }
  return out;
}

std::string write_records_jsonl(const RecordSet& rs) {
  std::string out;
  for (const auto& r : rs.records) {
    json obj = json::object();
    obj["id"] = r.id;
    obj["full_name"] = r.full_name;
    obj["source"] = r.source;
    // Schema columns are always written (null when unset) so the schema
    // survives a round trip.
    if (rs.schema.gender) {
      obj["gender"] = r.truth.gender ? json(to_string(*r.truth.gender)) : json(nullptr);
    }
    if (rs.schema.race5) {
      obj["race"] = r.truth.race5 ? json(to_string(*r.truth.race5)) : json(nullptr);
    }
    if (rs.schema.birth_date) {
      obj["birth_date"] =
          r.truth.birth_date ? json(format_mmddyyyy(*r.truth.birth_date)) : json(nullptr);
    }
    if (rs.schema.nationality) {
      obj["nationality"] = r.truth.nationality ? json(*r.truth.nationality) : json(nullptr);
    }
    if (rs.schema.age) obj["age"] = r.truth.age ? json(*r.truth.age) : json(nullptr);
    out += obj.dump();
    out.push_back('\n');
  }
  return out;
}

RecordSet parse_records_jsonl(std::string_view text) {
  ColumnMapping m;
  m.id = "id";
  m.full_name = "full_name";
  m.source = "source";
  // The first object carries every schema column.
  const auto first_line = trim(text.substr(0, text.find('\n')));
  if (!first_line.empty()) {
    json first;
    try {
      first = json::parse(first_line);
    } catch (const json::exception& e) {
      throw SchemaError(std::string("records jsonl: ") + e.what());
    }
    if (first.contains("gender")) m.gender = "gender";
    if (first.contains("race")) m.race = "race";
    if (first.contains("birth_date")) m.birth_date = "birth_date";
    if (first.contains("nationality")) m.nationality = "nationality";
    if (first.contains("age")) m.age = "age";
  }
  LoadOptions options;
  options.mapping = m;
  options.format = InputFormat::jsonl;
  auto result = parse_records(text, InputFormat::jsonl, options);
  if (!result.report.warnings.empty()) {
    throw SchemaError("records jsonl: " + result.report.warnings.front());
  }
  return std::move(result.records);
}

RecordSet read_records_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_records_jsonl(ss.str());
}

void write_records_jsonl(const RecordSet& rs, const std::filesystem::path& path) {
  write_text_file(path, write_records_jsonl(rs));
}

}  // namespace nameprobe
