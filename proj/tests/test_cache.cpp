#include <filesystem>
#include <set>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

#include "nameprobe/cache.hpp"
#include "nameprobe/hash.hpp"
#include "nameprobe/prediction_io.hpp"
#include "nameprobe/prompting.hpp"

using namespace nameprobe;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("nameprobe_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Hash, KnownSha256Vectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(CacheKey, CanonicalJsonOfModelPromptTemperature) {
  const std::string canonical = R"({"model":"m1","prompt":"hi\nthere","temperature":0.0})";
  EXPECT_EQ(cache_key("m1", "hi\nthere"), sha256_hex(canonical));
  EXPECT_EQ(cache_key("m1", "p").size(), 64u);
  EXPECT_NE(cache_key("m1", "p"), cache_key("m2", "p"));
  EXPECT_NE(cache_key("m1", "p"), cache_key("m1", "p", 0.7));
}

TEST(CacheKey, DistinctPairsGiveDistinctKeys) {
  std::set<std::string> keys;
  std::size_t pairs = 0;
  for (int m = 0; m < 12; ++m) {
    for (int n = 0; n < 500; ++n) {
      keys.insert(cache_key("model-" + std::to_string(m),
                            build_prompt(complex_profile(), "Name " + std::to_string(n)).text));
      ++pairs;
    }
  }
  EXPECT_EQ(keys.size(), pairs);
}

TEST(ResponseCache, InMemoryLookupAndOverwrite) {
  ResponseCache c;
  EXPECT_FALSE(c.lookup("k"));
  c.store({"k", "m", "one", 1});
  c.store({"k", "m", "two", 2});
  EXPECT_EQ(c.lookup("k"), "two");
  EXPECT_EQ(c.size(), 1u);
}

TEST(ResponseCache, JournalPersistsAndLastWriteWins) {
  const auto dir = fresh_dir("cache_journal");
  const auto path = dir / "cache.jsonl";
  {
    ResponseCache c(path);
    c.store({"a", "m", "first", 10});
    c.store({"b", "m", "Gender: F\n\"quoted\"", 11});
    c.store({"a", "m", "second", 12});
  }
  const std::string text = read_text_file(path);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
  const auto first = nlohmann::json::parse(text.substr(0, text.find('\n')));
  EXPECT_EQ(first.at("key"), "a");
  EXPECT_EQ(first.at("model"), "m");
  EXPECT_EQ(first.at("text"), "first");
  EXPECT_EQ(first.at("ts"), 10);

  ResponseCache reopened(path);
  EXPECT_EQ(reopened.lookup("a"), "second");
  EXPECT_EQ(reopened.lookup("b"), "Gender: F\n\"quoted\"");
  EXPECT_EQ(reopened.size(), 2u);

  const auto ro = ResponseCache::read_only(path);
  EXPECT_EQ(ro.lookup("a"), "second");
  EXPECT_THROW(ResponseCache::read_only(dir / "missing.jsonl"), IoError);
}

TEST(ResponseCache, CorruptJournalLineReportsLocation) {
  const auto dir = fresh_dir("cache_corrupt");
  write_text_file(dir / "c.jsonl", "{\"key\":\"a\",\"model\":\"m\",\"text\":\"x\",\"ts\":0}\nnot json\n");
  try {
    ResponseCache c(dir / "c.jsonl");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos);
  }
}

TEST(ResponseCache, ConcurrentAppendsKeepEveryLineIntact) {
  const auto dir = fresh_dir("cache_concurrent");
  const auto path = dir / "cache.jsonl";
  ResponseCache a(path);
  ResponseCache b(path);  // a second writer on the same journal
  std::vector<std::jthread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      ResponseCache& c = t % 2 ? a : b;
      for (int i = 0; i < 100; ++i) {
        const std::string key = std::to_string(t) + "-" + std::to_string(i);
        c.store({key, "m", std::string(200 + i, 'x'), i});
        (void)c.lookup(key);
      }
    });
  }
  threads.clear();
  ResponseCache merged(path);
  EXPECT_EQ(merged.size(), 400u);
}
