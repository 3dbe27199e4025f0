#include <filesystem>
#include <set>

#include <gtest/gtest.h>

#include "nameprobe/ingest.hpp"
#include "nameprobe/prediction_io.hpp"
#include "nameprobe/random.hpp"

using namespace nameprobe;

namespace {

LoadOptions voter_options() {
  LoadOptions o;
  o.mapping.id = "voter_id";
  o.mapping.first_name = "first";
  o.mapping.last_name = "last";
  o.mapping.gender = "sex";
  o.mapping.race = "race";
  o.mapping.birth_date = "dob";
  return o;
}

const char* kVoters =
    "voter_id,first,last,sex,race,dob\n"
    "1,Maria,Garcia,F,Hispanic,03/14/1962\n"
    "2, John ,Smith,M,White Not Hispanic,11/30/1955\n"
    "3,,,M,Hispanic,01/01/1980\n"
    "2,Dup,Licate,M,Hispanic,01/01/1980\n"
    "4,Wei,Chen,X,Asian or Pacific Islander,02/30/1990\n"
    "5,Ana,Lopez,F,Martian,\n";

}  // namespace

TEST(Ingest, LoadsVoterCsvWithMapping) {
  const auto r = parse_records(kVoters, InputFormat::csv, voter_options());
  EXPECT_EQ(r.report.rows_read, 6u);
  EXPECT_EQ(r.report.dropped_empty_name, 1u);
  EXPECT_EQ(r.report.dropped_duplicate_id, 1u);
  ASSERT_EQ(r.records.size(), 4u);
  EXPECT_EQ(r.records.records[0].full_name, "Maria Garcia");
  EXPECT_EQ(r.records.records[1].full_name, "John Smith");
  EXPECT_EQ(r.records.records[0].truth.race5, Race5::hispanic);
  EXPECT_EQ(r.records.records[0].truth.birth_date, make_date(1962, 3, 14));
  EXPECT_EQ(r.records.records[1].truth.race5, Race5::white_not_hispanic);
  // Bad cells leave the field unset and produce warnings.
  EXPECT_FALSE(r.records.records[2].truth.gender);
  EXPECT_FALSE(r.records.records[2].truth.birth_date);
  EXPECT_FALSE(r.records.records[3].truth.race5);
  EXPECT_GE(r.report.warnings.size(), 4u);
  EXPECT_TRUE(r.records.schema.gender && r.records.schema.race5 && r.records.schema.birth_date);
  EXPECT_FALSE(r.records.schema.age);
}

TEST(Ingest, MissingMappedColumnIsSchemaError) {
  auto o = voter_options();
  o.mapping.age = "age";
  EXPECT_THROW(parse_records(kVoters, InputFormat::csv, o), SchemaError);
  LoadOptions none;
  EXPECT_THROW(parse_records(kVoters, InputFormat::csv, none), SchemaError);
}

TEST(Ingest, OptionalColumnsAreDropped) {
  LoadOptions o;
  o.mapping = ColumnMapping::canonical();
  o.optional_columns = true;
  const auto r = parse_records("id,full_name,gender\n1,Ana Silva,F\n", InputFormat::csv, o);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_TRUE(r.records.schema.gender);
  EXPECT_FALSE(r.records.schema.race5);
  EXPECT_FALSE(r.records.schema.age);
  EXPECT_EQ(r.records.records[0].truth.gender, Gender::female);
  EXPECT_THROW(parse_records("id,name\n1,Ana\n", InputFormat::csv, o), SchemaError);
}

TEST(Ingest, SynthesizesIdsAndDedupesOnName) {
  LoadOptions o;
  o.mapping.full_name = "name";
  o.dedupe_on_full_name = true;
  o.source_tag = "hk";
  const auto r = parse_records("name\nChan Tai Man\nWong Siu Ming\nChan Tai Man\n", InputFormat::csv, o);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records.records[0].id, "row-1");
  EXPECT_EQ(r.records.records[1].id, "row-2");
  EXPECT_EQ(r.records.records[0].source, "hk");
  EXPECT_EQ(r.report.dropped_duplicate_name, 1u);
}

TEST(Ingest, JsonlInputAndIsoDates) {
  LoadOptions o;
  o.mapping.id = "id";
  o.mapping.full_name = "name";
  o.mapping.birth_date = "born";
  o.mapping.age = "age";
  o.mapping.nationality = "nat";
  o.dates = DateEncoding::iso8601;
  const auto r = parse_records(
      "{\"id\":\"a\",\"name\":\"Lee Ka Wai\",\"born\":\"1990-05-06\",\"age\":34,\"nat\":\"CHN\"}\n"
      "{\"id\":\"b\",\"name\":\"Ho Mei\",\"age\":null}\n",
      InputFormat::automatic, o);
  ASSERT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.records.records[0].truth.birth_date, make_date(1990, 5, 6));
  EXPECT_EQ(r.records.records[0].truth.age, 34);
  EXPECT_EQ(r.records.records[0].truth.nationality, "CHN");
  EXPECT_FALSE(r.records.records[1].truth.age);
}

TEST(Ingest, JsonlRoundTripIsExactForRandomRecordSets) {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    RecordSet rs;
    rs.schema.gender = rng.uniform01() < 0.5;
    rs.schema.race5 = rng.uniform01() < 0.5;
    rs.schema.birth_date = rng.uniform01() < 0.5;
    rs.schema.nationality = rng.uniform01() < 0.5;
    rs.schema.age = rng.uniform01() < 0.5;
    const std::size_t n = rng.uniform_index(8);
    for (std::size_t i = 0; i < n; ++i) {
      NameRecord rec;
      rec.id = "id-" + std::to_string(i) + (rng.uniform01() < 0.2 ? ",\"q\"" : "");
      rec.full_name = rng.uniform01() < 0.5 ? "Jos\xC3\xA9 Mart\xC3\xADnez" : "Mary O'Neil";
      rec.source = rng.uniform01() < 0.5 ? "" : "fl";
      auto maybe = [&] { return rng.uniform01() < 0.7; };
      if (rs.schema.gender && maybe()) rec.truth.gender = maybe() ? Gender::male : Gender::female;
      if (rs.schema.race5 && maybe()) rec.truth.race5 = kAllRace5[rng.uniform_index(5)];
      if (rs.schema.birth_date && maybe()) {
        rec.truth.birth_date = make_date(1900 + static_cast<int>(rng.uniform_index(120)),
                                         1 + static_cast<int>(rng.uniform_index(12)),
                                         1 + static_cast<int>(rng.uniform_index(28)));
      }
      if (rs.schema.nationality && maybe()) rec.truth.nationality = "GBR";
      if (rs.schema.age && maybe()) rec.truth.age = static_cast<int>(rng.uniform_index(110));
      rs.records.push_back(rec);
    }
    const std::string text = write_records_jsonl(rs);
    if (rs.empty()) continue;
    const RecordSet back = parse_records_jsonl(text);
    ASSERT_EQ(back.schema, rs.schema) << text;
    ASSERT_EQ(back.size(), rs.size());
    for (std::size_t i = 0; i < rs.size(); ++i) {
      ASSERT_EQ(back.records[i].id, rs.records[i].id);
      ASSERT_EQ(back.records[i].full_name, rs.records[i].full_name);
      ASSERT_EQ(back.records[i].source, rs.records[i].source);
      ASSERT_EQ(back.records[i].truth, rs.records[i].truth);
    }
    ASSERT_EQ(write_records_jsonl(back), text);
  }
}

TEST(Ingest, FileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "nameprobe_ingest_test";
  std::filesystem::remove_all(dir);
  const auto r = parse_records(kVoters, InputFormat::csv, voter_options());
  write_records_jsonl(r.records, dir / "nested" / "records.jsonl");
  const auto back = read_records_jsonl(dir / "nested" / "records.jsonl");
  EXPECT_EQ(back.size(), r.records.size());
  EXPECT_THROW(read_records_jsonl(dir / "absent.jsonl"), IoError);
  EXPECT_THROW(load_records(dir / "absent.csv", voter_options()), IoError);
  std::filesystem::remove_all(dir);
}

TEST(Subsample, KeepsOrderAndIsDeterministic) {
  RecordSet rs;
  for (int i = 0; i < 50; ++i) rs.records.push_back({std::to_string(i), "Name " + std::to_string(i), {}, {}});
  const auto a = subsample(rs, 20, 7);
  const auto b = subsample(rs, 20, 7);
  ASSERT_EQ(a.size(), 20u);
  std::vector<int> ids;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.records[i].id, b.records[i].id);
    ids.push_back(std::stoi(a.records[i].id));
  }
  EXPECT_TRUE(std::is_sorted(ids.begin(), ids.end()));
  EXPECT_EQ(std::set<int>(ids.begin(), ids.end()).size(), 20u);
  EXPECT_EQ(subsample(rs, 50, 1).size(), 50u);
  EXPECT_EQ(subsample(rs, 0, 1).size(), 0u);
  EXPECT_THROW(subsample(rs, 51, 1), SampleTooLarge);
}

TEST(Subsample, InclusionIsUniform) {
  RecordSet rs;
  for (int i = 0; i < 10; ++i) rs.records.push_back({std::to_string(i), "N", {}, {}});
  std::array<int, 10> hits{};
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    for (const auto& r : subsample(rs, 3, derive_seed(5, std::to_string(t))).records) ++hits[std::stoi(r.id)];
  }
  const double p = 0.3;
  for (int h : hits) EXPECT_NEAR(h, trials * p, 5 * std::sqrt(trials * p * (1 - p)));
}
