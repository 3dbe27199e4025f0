#pragma once

// JSONL persistence for predictions, so later stages never re-parse raw text.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nameprobe/parsing.hpp"

namespace nameprobe {

using PredictionSet = std::vector<Prediction>;

/// {"record_id","model_id","response_status","values":{...},"field_status":{...}}
std::string prediction_to_json_line(const Prediction& p);
Prediction prediction_from_json_line(std::string_view line);

std::string write_predictions_jsonl(std::span<const Prediction> preds);
void write_predictions_jsonl(std::span<const Prediction> preds, const std::filesystem::path& path);
PredictionSet parse_predictions_jsonl(std::string_view text);
PredictionSet read_predictions_jsonl(const std::filesystem::path& path);

/// Model ids in order of first appearance.
std::vector<std::string> model_ids(std::span<const Prediction> preds);

/// Writes `content` to `path` atomically (temp file + rename).
void write_text_file(const std::filesystem::path& path, std::string_view content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace nameprobe
