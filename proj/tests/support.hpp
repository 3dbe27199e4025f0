#pragma once

// Shared fixtures for the CLI tests and the acceptance runner.

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "nameprobe/cli.hpp"
#include "nameprobe/prediction_io.hpp"

namespace nameprobe::testing {

namespace fs = std::filesystem;

inline const fs::path kSourceDir = NAMEPROBE_SOURCE_DIR;
inline const fs::path kSampleDir = kSourceDir / "data" / "sample";

class TempDir {
 public:
  explicit TempDir(const std::string& tag = "nameprobe") {
    std::random_device rd;
    path_ = fs::temp_directory_path() / (tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};

inline CliResult run(std::vector<std::string> args) {
  args.insert(args.begin(), "nameprobe");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

inline const std::vector<std::string>& chain_commands() {
  static const std::vector<std::string> commands = {"enrich",    "clean", "ensemble", "evaluate",
                                                    "agreement", "bias",  "report"};
  return commands;
}

/// Runs every subcommand in order; returns the first failure, if any.
inline CliResult run_chain(const fs::path& config, const fs::path& out) {
  CliResult last;
  for (const auto& cmd : chain_commands()) {
    last = run({"--config", config.string(), "--out", out.string(), cmd});
    if (last.code != 0) {
      last.err = cmd + ": " + last.err;
      return last;
    }
  }
  return last;
}

/// Copies the sample corpus (without outputs) into `dir`.
inline fs::path copy_sample(const fs::path& dir) {
  for (const char* name : {"records.csv", "fixtures.jsonl", "config.json"}) {
    fs::copy_file(kSampleDir / name, dir / name, fs::copy_options::overwrite_existing);
  }
  return dir / "config.json";
}

/// Relative path -> contents for every file below `root`.
inline std::vector<std::pair<std::string, std::string>> tree_contents(const fs::path& root) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) {
      files.emplace_back(fs::relative(e.path(), root).string(), read_text_file(e.path()));
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline std::size_t count_lines(const std::string& text) {
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace nameprobe::testing
