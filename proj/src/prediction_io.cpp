#include "nameprobe/prediction_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace nameprobe {

using nlohmann::json;

std::string prediction_to_json_line(const Prediction& p) {
  json values = json::object();
  for (const auto& [k, v] : p.values) values[std::string(key_of(k))] = v;
  json status = json::object();
  for (const auto& [k, s] : p.field_status) status[std::string(key_of(k))] = to_string(s);
  const json line = {{"record_id", p.record_id},
                     {"model_id", p.model_id},
                     {"response_status", to_string(p.response_status)},
                     {"values", std::move(values)},
                     {"field_status", std::move(status)}};
  return line.dump();
}

Prediction prediction_from_json_line(std::string_view line) {
  const json j = json::parse(line);
  Prediction p;
  p.record_id = j.at("record_id").get<std::string>();
  p.model_id = j.at("model_id").get<std::string>();
  const auto rs = parse_response_status(j.value("response_status", std::string("ok")));
  if (!rs) throw Error("prediction: unknown response_status");
  p.response_status = *rs;
  for (const auto& [key, value] : j.at("field_status").items()) {
    const auto kind = parse_field_key(key);
    const auto status = parse_field_status(value.get<std::string>());
    if (!kind || !status) throw Error("prediction: bad field_status entry '" + key + "'");
    p.field_status[*kind] = *status;
  }
  for (const auto& [key, value] : j.at("values").items()) {
    const auto kind = parse_field_key(key);
    if (!kind) throw Error("prediction: unknown field '" + key + "'");
    if (p.status(*kind) != FieldStatus::ok) {
      throw Error("prediction: value for '" + key + "' without ok status");
    }
    p.values[*kind] = value.get<std::string>();
  }
  for (const auto& [kind, status] : p.field_status) {
    if (status == FieldStatus::ok && !p.values.count(kind)) {
      throw Error("prediction: ok field '" + std::string(key_of(kind)) + "' has no value");
    }
  }
  return p;
}

std::string write_predictions_jsonl(std::span<const Prediction> preds) {
  std::string out;
  for (const auto& p : preds) {
    out += prediction_to_json_line(p);
    out.push_back('\n');
  }
  return out;
}

void write_predictions_jsonl(std::span<const Prediction> preds, const std::filesystem::path& path) {
  write_text_file(path, write_predictions_jsonl(preds));
}

PredictionSet parse_predictions_jsonl(std::string_view text) {
  PredictionSet out;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    ++lineno;
    if (!line.empty()) {
      try {
        out.push_back(prediction_from_json_line(line));
      } catch (const std::exception& e) {
        throw Error("predictions line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return out;
}

PredictionSet read_predictions_jsonl(const std::filesystem::path& path) {
  return parse_predictions_jsonl(read_text_file(path));
}

std::vector<std::string> model_ids(std::span<const Prediction> preds) {
  std::vector<std::string> ids;
  for (const auto& p : preds) {
    if (std::find(ids.begin(), ids.end(), p.model_id) == ids.end()) ids.push_back(p.model_id);
  }
  return ids;
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nameprobe
