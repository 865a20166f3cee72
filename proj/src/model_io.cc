#include "headpop/model_io.h"

#include "headpop/baselines.h"
#include "headpop/error.h"
#include "headpop/io.h"

namespace headpop::model_io {

using nlohmann::json;

json params_to_json(const ParamSet& params) {
  json out = json::object();
  for (const auto& [name, m] : params) {
    std::vector<double> data(m.values().begin(), m.values().end());
    out[name] = {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
  }
  return out;
}

ParamSet params_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model params must be an object");
  ParamSet out;
  for (const auto& [name, entry] : j.items()) {
    if (!entry.is_object() || !entry.contains("rows") || !entry.contains("cols") || !entry.contains("data")) {
      throw DataError("parameter '" + name + "' needs rows, cols and data");
    }
    const auto rows = entry["rows"].get<std::size_t>();
    const auto cols = entry["cols"].get<std::size_t>();
    auto data = entry["data"].get<std::vector<double>>();
    if (data.size() != rows * cols) {
      throw ShapeError("parameter '" + name + "' declares " + std::to_string(rows) + "x" + std::to_string(cols) +
                       " but holds " + std::to_string(data.size()) + " values");
    }
    out.emplace(name, Mat(rows, cols, std::move(data)));
  }
  return out;
}

json to_json(const Classifier& model) {
  return {{"format", kFormatName},
          {"version", kFormatVersion},
          {"model_kind", to_string(model.kind())},
          {"config", model.config_json()},
          {"vocab", model.vocab().to_json()},
          {"params", params_to_json(model.params())}};
}

std::unique_ptr<Classifier> from_json(const json& envelope) {
  if (!envelope.is_object()) throw DataError("model file is not a JSON object");
  if (!envelope.contains("version")) throw FormatVersionError("model file has no version");
  const json& version = envelope["version"];
  if (!version.is_number_integer() || version.get<int>() != kFormatVersion) {
    throw FormatVersionError("unsupported model file version " + version.dump() + " (expected " +
                             std::to_string(kFormatVersion) + ")");
  }
  for (const char* key : {"model_kind", "config", "vocab", "params"}) {
    if (!envelope.contains(key)) throw DataError(std::string("model file is missing '") + key + "'");
  }
  try {
    const ModelKind kind = parse_model_kind(envelope["model_kind"].get<std::string>());
    text::Vocabulary vocab = text::Vocabulary::from_json(envelope["vocab"]);
    ParamSet params = params_from_json(envelope["params"]);
    const json& cfg = envelope["config"];
    switch (kind) {
      case ModelKind::lstm:
      case ModelKind::bilstm: {
        recurrent::RecurrentConfig rc = recurrent::RecurrentModel::config_from_json(cfg);
        if (rc.bidirectional != (kind == ModelKind::bilstm)) throw DataError("model_kind disagrees with config");
        return std::make_unique<recurrent::RecurrentModel>(rc, std::move(vocab), std::move(params));
      }
      case ModelKind::cnn:
        return std::make_unique<baselines::CnnModel>(baselines::CnnModel::config_from_json(cfg), std::move(vocab),
                                                     std::move(params));
      case ModelKind::bow_svm:
        return std::make_unique<baselines::BowSvmModel>(std::move(vocab), cfg.at("max_seq_len").get<std::size_t>(),
                                                        cfg.at("binary").get<bool>(), cfg.at("lambda").get<double>(),
                                                        std::move(params));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("model file has an invalid field: ") + e.what());
  }
  throw DataError("unreachable model kind");
}

std::string serialize(const Classifier& model) { return to_json(model).dump() + "\n"; }

std::unique_ptr<Classifier> deserialize(std::string_view contents) {
  json envelope;
  try {
    envelope = json::parse(contents);
  } catch (const json::parse_error& e) {
    if (e.byte >= contents.size()) {
      throw TruncatedFileError("model file ends unexpectedly after " + std::to_string(contents.size()) + " bytes");
    }
    throw DataError(std::string("model file is not valid JSON: ") + e.what());
  }
  return from_json(envelope);
}

void save_model(const Classifier& model, const std::string& path) { io::write_file_atomic(path, serialize(model)); }

std::unique_ptr<Classifier> load_model(const std::string& path) { return deserialize(io::read_file(path)); }

recurrent::RecurrentModel load_recurrent(const std::string& path) {
  std::unique_ptr<Classifier> m = load_model(path);
  auto* r = dynamic_cast<recurrent::RecurrentModel*>(m.get());
  if (!r) throw ConfigError("'" + path + "' holds a " + to_string(m->kind()) + " model, not lstm/bilstm");
  return *r;
}

}  // namespace headpop::model_io
