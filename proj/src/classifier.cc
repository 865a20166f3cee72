#include "headpop/classifier.h"

#include <algorithm>
#include <cmath>

#include "headpop/error.h"

namespace headpop {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::bow_svm: return "bow_svm";
    case ModelKind::cnn: return "cnn";
    case ModelKind::lstm: return "lstm";
    case ModelKind::bilstm: return "bilstm";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "bow_svm") return ModelKind::bow_svm;
  if (name == "cnn") return ModelKind::cnn;
  if (name == "lstm") return ModelKind::lstm;
  if (name == "bilstm") return ModelKind::bilstm;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

int Classifier::predict(const text::TokenSequence& seq) const { return score(seq) > 0.5 ? 1 : 0; }

text::TokenSequence Classifier::encode(std::string_view title) const {
  return text::encode(title, vocab(), max_seq_len());
}

double clamp_probability(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double bce(double p, int label) {
  const double q = clamp_probability(p);
  return label ? -std::log(q) : -std::log(1.0 - q);
}

}  // namespace headpop
