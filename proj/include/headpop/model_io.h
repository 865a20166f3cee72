#ifndef HEADPOP_MODEL_IO_H
#define HEADPOP_MODEL_IO_H

#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "headpop/classifier.h"
#include "headpop/recurrent.h"

namespace headpop::model_io {

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kFormatName = "headpop-model";

// {format, version, model_kind, config, vocab, params: {name: {rows, cols, data}}}
nlohmann::json to_json(const Classifier& model);
std::unique_ptr<Classifier> from_json(const nlohmann::json& envelope);

std::string serialize(const Classifier& model);
// FormatVersionError, TruncatedFileError, ShapeError or DataError on bad input.
std::unique_ptr<Classifier> deserialize(std::string_view contents);

// Atomic (temp file + rename).
void save_model(const Classifier& model, const std::string& path);
std::unique_ptr<Classifier> load_model(const std::string& path);
// ConfigError if the file holds a non-recurrent model.
recurrent::RecurrentModel load_recurrent(const std::string& path);

nlohmann::json params_to_json(const ParamSet& params);
ParamSet params_from_json(const nlohmann::json& j);

}  // namespace headpop::model_io

#endif  // HEADPOP_MODEL_IO_H
