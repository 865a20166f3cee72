#ifndef HEADPOP_CLASSIFIER_H
#define HEADPOP_CLASSIFIER_H

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "headpop/numerics.h"
#include "headpop/rng.h"
#include "headpop/text.h"

namespace headpop {

enum class ModelKind { bow_svm, cnn, lstm, bilstm };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);

// A trained title scorer: vocabulary, parameters and a probability of the
// popular class for an encoded title.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelKind kind() const = 0;
  virtual const text::Vocabulary& vocab() const = 0;
  virtual std::size_t max_seq_len() const = 0;
  virtual std::size_t hidden_size() const { return 0; }
  virtual std::size_t embedding_dim() const { return 0; }

  virtual const ParamSet& params() const = 0;
  virtual ParamSet& mutable_params() = 0;
  // Model-specific configuration, enough to rebuild the model from params.
  virtual nlohmann::json config_json() const = 0;
  virtual std::unique_ptr<Classifier> clone() const = 0;

  virtual double score(const text::TokenSequence& seq) const = 0;
  // 1 iff score > 0.5.
  virtual int predict(const text::TokenSequence& seq) const;
  // One popularity value in [0, 1] per position of `seq`.
  virtual std::vector<double> contributions(const text::TokenSequence& seq) const = 0;

  text::TokenSequence encode(std::string_view title) const;
};

// A classifier trained by minibatch gradient descent on BCE.
class NeuralClassifier : public Classifier {
 public:
  // Adds `scale` times the gradient of the per-example loss into `grads`
  // (creating entries on demand) and returns the unscaled loss. The loss
  // includes any weight penalty. `dropout` is null at inference.
  virtual double accumulate_gradients(const text::TokenSequence& seq, int label, ParamSet& grads,
                                      double scale, Rng* dropout) const = 0;

  // Parameters updated during training; excludes a static embedding.
  virtual std::vector<std::string> trainable_names() const = 0;
};

// Clamped binary cross-entropy.
inline constexpr double kProbClamp = 1e-7;
double clamp_probability(double p);
double bce(double p, int label);

}  // namespace headpop

#endif  // HEADPOP_CLASSIFIER_H
