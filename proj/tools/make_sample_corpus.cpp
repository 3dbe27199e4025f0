// Writes a small synthetic voter-roll style corpus together with a run
// config and recorded model replies, so the whole CLI chain runs offline.
//
//   make_sample_corpus [out_dir] [--records N] [--seed S]

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "nameprobe/cache.hpp"
#include "nameprobe/csv.hpp"
#include "nameprobe/prediction_io.hpp"
#include "nameprobe/prompting.hpp"
#include "nameprobe/random.hpp"

namespace {

using namespace nameprobe;
using nlohmann::json;

struct Group {
  const char* source_label;
  Race5 race;
  std::vector<const char*> surnames;
  std::vector<const char*> origins;  // parallel to surnames
};

const std::vector<Group>& groups() {
  static const std::vector<Group> g = {
      {"White Not Hispanic", Race5::white_not_hispanic,
       {"Smith", "Miller", "Davis", "Wilson", "Anderson", "Taylor", "Murphy", "Schmidt"},
       {"GBR", "GBR", "GBR", "GBR", "SWE", "GBR", "IRL", "DEU"}},
      {"Hispanic", Race5::hispanic,
       {"Garcia", "Rodriguez", "Martinez", "Hernandez", "Lopez", "Gonzalez", "Perez", "Sanchez"},
       {"MEX", "MEX", "ESP", "MEX", "CUB", "MEX", "PRI", "COL"}},
      {"Black Not Hispanic", Race5::black_not_hispanic,
       {"Washington", "Jefferson", "Jackson", "Robinson", "Harris", "Williams", "Banks", "Booker"},
       {"USA", "USA", "USA", "USA", "USA", "USA", "USA", "USA"}},
      {"Asian or Pacific Islander", Race5::asian_pacific_islander,
       {"Nguyen", "Kim", "Chen", "Patel", "Wang", "Tran", "Li", "Park"},
       {"VNM", "KOR", "CHN", "IND", "CHN", "VNM", "CHN", "KOR"}},
      {"Multi-racial", Race5::other,
       {"Kealoha", "Silva", "Okafor", "Rahman", "Haddad", "Moreau", "Ivanov", "Yilmaz"},
       {"USA", "BRA", "NGA", "BGD", "LBN", "FRA", "RUS", "TUR"}},
  };
  return g;
}

const std::vector<const char*> kFemale = {"Mary",  "Linda",  "Maria", "Jennifer", "Aisha",
                                          "Sofia", "Emily",  "Mei",   "Grace",    "Rosa",
                                          "Keisha", "Hannah", "Priya", "Carmen",   "Olivia"};
const std::vector<const char*> kMale = {"James", "Robert", "Jose",  "Michael", "David",
                                        "Wei",   "Carlos", "Tyrone", "John",   "Luis",
                                        "Minh",  "Daniel", "Arjun", "Marcus", "Thomas"};

// Strings that are not personal names; the validity vote should drop them.
struct Junk {
  const char* name;
  bool votes[4];  // true = VALID, per validity judge
};
const std::vector<Junk> kJunk = {
    {"Seabiscuit", {true, false, false, false}},
    {"Test Account", {false, false, false, false}},
    {"Asdf Qwerty", {false, true, false, true}},
};

struct Person {
  std::string id;
  std::string full_name;
  std::optional<Gender> gender;
  std::size_t group = 0;
  std::size_t surname = 0;
  std::optional<Date> birth;
  bool junk = false;
  std::size_t junk_index = 0;
};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[rng.uniform_index(v.size())];
}

std::vector<Person> make_people(std::size_t n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "people"));
  std::vector<Person> out;
  // Junk rows sit at fixed, spread-out positions.
  std::vector<std::size_t> junk_at;
  for (std::size_t j = 0; j < kJunk.size() && j < n; ++j) junk_at.push_back((j * 2 + 1) * n / 7);
  std::size_t next_junk = 0;
  for (std::size_t i = 0; i < n; ++i) {
    Person p;
    p.id = fmt::format("fl-{:04}", i + 1);
    if (next_junk < junk_at.size() && junk_at[next_junk] == i) {
      p.junk = true;
      p.junk_index = next_junk;
      p.full_name = kJunk[next_junk].name;
      ++next_junk;
      out.push_back(std::move(p));
      continue;
    }
    const bool female = rng.uniform01() < 0.54;
    p.gender = female ? Gender::female : Gender::male;
    p.group = rng.uniform_index(groups().size());
    p.surname = rng.uniform_index(groups()[p.group].surnames.size());
    p.full_name = std::string(female ? pick(rng, kFemale) : pick(rng, kMale)) + " " +
                  groups()[p.group].surnames[p.surname];
    // A few voters have no recorded birth date.
    if (rng.uniform01() >= 0.04) {
      const int year = 1935 + static_cast<int>(rng.uniform_index(68));
      const int month = 1 + static_cast<int>(rng.uniform_index(12));
      const int day = 1 + static_cast<int>(rng.uniform_index(28));
      p.birth = make_date(year, month, day);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string records_csv(const std::vector<Person>& people) {
  const std::vector<std::string> header = {"voter_id", "full_name", "sex", "race", "birth_date"};
  std::string out = csv::format_row(header);
  for (const auto& p : people) {
    std::vector<std::string> row = {p.id, p.full_name, "", "", ""};
    if (!p.junk) {
      row[2] = std::string(to_string(*p.gender));
      row[3] = groups()[p.group].source_label;
      if (p.birth) row[4] = format_mmddyyyy(*p.birth);
    }
    out += csv::format_row(row);
  }
  return out;
}

// ------------------------------------------------------------ mock models

struct MockModel {
  std::string id;
  double gender_acc;
  double race_acc;
  double origin_acc;
  // Birth-year habits.
  double collapse_p;
  int collapse_year;
  int year_noise;
  double round_p;
  // Reply styles.
  int style;  // 0 plain, 1 markdown bullets, 2 lower-case chatty
  double refusal_p;
  double missing_p;
  double malformed_p;
};

const std::vector<MockModel> kModels = {
    {"mock-alpha", 0.92, 0.72, 0.70, 0.00, 0, 6, 0.35, 0, 0.00, 0.00, 0.02},
    {"mock-beta", 0.86, 0.60, 0.55, 0.40, 1990, 9, 0.20, 1, 0.02, 0.01, 0.08},
    {"mock-gamma", 0.78, 0.45, 0.40, 0.70, 1900, 15, 0.10, 2, 0.05, 0.03, 0.05},
};

struct Answer {
  std::string origin, nationality, gender, race, birth;
};

Answer mock_answer(const MockModel& m, const Person& p, Rng& rng) {
  Answer a;
  if (p.junk) {
    a.origin = "USA";
    a.nationality = "USA";
    a.gender = rng.uniform01() < 0.5 ? "Male" : "Female";
    a.race = "Other";
    a.birth = "01/01/1950";
    return a;
  }
  const Group& g = groups()[p.group];
  a.origin = rng.uniform01() < m.origin_acc ? g.origins[p.surname] : pick(rng, groups()[rng.uniform_index(groups().size())].origins);
  a.nationality = rng.uniform01() < 0.85 ? "USA" : std::string(g.origins[p.surname]);
  const bool right_gender = rng.uniform01() < m.gender_acc;
  const Gender gender = right_gender ? *p.gender : (*p.gender == Gender::male ? Gender::female : Gender::male);
  a.gender = gender == Gender::male ? "Male" : "Female";
  const Race5 race = rng.uniform01() < m.race_acc ? g.race : kAllRace5[rng.uniform_index(kAllRace5.size())];
  a.race = std::string(to_string(race));

  const int truth_year = p.birth ? p.birth->year : 1970;
  int year = truth_year + static_cast<int>(rng.uniform_index(2 * m.year_noise + 1)) - m.year_noise + 4;
  if (rng.uniform01() < m.round_p) year = year / 10 * 10;
  if (rng.uniform01() < m.collapse_p) year = m.collapse_year;
  year = std::min(year, 2005);
  const int month = 1 + static_cast<int>(rng.uniform_index(12));
  const int day = 1 + static_cast<int>(rng.uniform_index(28));
  if (year == m.collapse_year || year % 10 == 0) {
    a.birth = fmt::format("01/01/{}", year);
  } else {
    a.birth = fmt::format("{:02}/{:02}/{}", month, day, year);
  }
  if (rng.uniform01() < m.malformed_p) a.birth = fmt::format("{}-{:02}-{:02}", year, month, day);
  return a;
}

std::string render_reply(const MockModel& m, const Answer& a, Rng& rng) {
  const std::vector<std::pair<std::string, std::string>> items = {
      {"Country of Origin", a.origin}, {"Nationality", a.nationality}, {"Gender", a.gender},
      {"Race", a.race},                {"Birth Date", a.birth},
  };
  std::string out;
  switch (m.style) {
    case 0:
      for (const auto& [label, value] : items) out += label + ": " + value + "\n";
      break;
    case 1:
      out = "Here are my predictions:\n\n";
      for (const auto& [label, value] : items) out += "- **" + label + ":** " + value + "\n";
      break;
    default:
      if (rng.uniform01() < 0.5) out = "Sure! Based on the name, my best guess is:\n";
      for (const auto& [label, value] : items) {
        std::string l = label;
        for (char& c : l) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        const std::string v = label == "Gender" ? std::string(1, value[0]) : value;
        out += l + " : " + v + "\n";
      }
      out += "\nPlease note these are estimates.";
      break;
  }
  return out;
}

struct Judge {
  std::string id;
  double weight;
  double error_p;
};

const std::vector<Judge> kJudges = {
    {"judge-a", 0.15, 0.04},
    {"judge-b", 0.35, 0.01},
    {"judge-c", 0.20, 0.03},
    {"judge-d", 0.30, 0.02},
};

std::string verdict_text(bool valid, std::size_t judge, Rng& rng) {
  const double u = rng.uniform01();
  if (judge == 0 && u < 0.02) return "I cannot determine that.";
  if (u < 0.3) return valid ? "VALID" : "INVALID";
  if (u < 0.6) return valid ? "Valid." : "Invalid.";
  return valid ? "**VALID**" : "**INVALID**";
}

json model_json(std::string_view id, double weight, int parallel) {
  return {{"id", id},
          {"base_url", "http://127.0.0.1:8089/v1"},
          {"api_key_env", "NAMEPROBE_SAMPLE_KEY"},
          {"vote_weight", weight},
          {"max_parallel", parallel},
          {"openness", "open"}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generate the offline sample corpus"};
  std::string out_dir = "data/sample";
  std::size_t n = 100;
  std::uint64_t seed = 20240611;
  app.add_option("out_dir", out_dir, "Destination directory");
  app.add_option("--records", n, "Number of records");
  app.add_option("--seed", seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);

  const std::filesystem::path dir(out_dir);
  const auto people = make_people(n, seed);
  write_text_file(dir / "records.csv", records_csv(people));

  // Enrichment replies.
  const FieldProfile profile = complex_profile();
  std::string fixtures;
  for (const auto& m : kModels) {
    for (const auto& p : people) {
      Rng rng(derive_seed(seed, m.id + '\x1f' + p.id));
      if (rng.uniform01() < m.missing_p) continue;  // never recorded: replays as a transport error
      const std::string prompt = build_prompt(profile, p.full_name, p.id).text;
      CacheEntry e;
      e.key = cache_key(m.id, prompt);
      e.model = m.id;
      e.text = rng.uniform01() < m.refusal_p ? "" : render_reply(m, mock_answer(m, p, rng), rng);
      fixtures += serialize_cache_entry(e);
    }
  }
  // Validity verdicts.
  for (std::size_t j = 0; j < kJudges.size(); ++j) {
    for (const auto& p : people) {
      Rng rng(derive_seed(seed, kJudges[j].id + '\x1f' + p.id));
      bool valid = p.junk ? kJunk[p.junk_index].votes[j] : rng.uniform01() >= kJudges[j].error_p;
      CacheEntry e;
      e.key = cache_key(kJudges[j].id, build_validity_prompt(p.full_name, p.id).text);
      e.model = kJudges[j].id;
      e.text = verdict_text(valid, j, rng);
      fixtures += serialize_cache_entry(e);
    }
  }
  write_text_file(dir / "fixtures.jsonl", fixtures);

  json models = json::array();
  for (const auto& m : kModels) models.push_back(model_json(m.id, 0.0, 4));
  json judges = json::array();
  for (const auto& j : kJudges) judges.push_back(model_json(j.id, j.weight, 2));

  const json config = {
      {"seed", 7},
      {"dataset",
       {{"path", "records.csv"},
        {"format", "csv"},
        {"columns",
         {{"id", "voter_id"}, {"full_name", "full_name"}, {"gender", "sex"}, {"race", "race"},
          {"birth_date", "birth_date"}}},
        {"date_format", "mmddyyyy"},
        {"source", "sample-voters"}}},
      {"models", models},
      {"profile", "complex"},
      {"replay", "fixtures.jsonl"},
      {"out", "out"},
      {"parsing", {{"strict_iso3", false}, {"flag_below", 0.5}}},
      {"validity", {{"models", judges}, {"threshold", 0.75}, {"renormalize", false}}},
      {"ensemble", {{"id", "ensemble"}}},
      {"evaluate", {{"strata", "race"}, {"suppress_below", 0.2}}},
      {"agreement", {{"linkage", "average"}, {"embedder", {{"kind", "hash"}, {"dim", 64}}}}},
      {"bias", {{"fields", {"birth_date"}}, {"collapse_threshold", 0.25}}},
  };
  write_text_file(dir / "config.json", config.dump(2) + "\n");

  std::cout << fmt::format("wrote {} records and replies for {} models and {} judges to {}\n",
                           people.size(), kModels.size(), kJudges.size(), dir.string());
  return 0;
}
