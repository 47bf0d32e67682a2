#pragma once

// Softmax classifiers supplying log p(y|x1), log p(y|x2), log p(y|x1,x2),
// and the empirical label prior h(y).

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lsmi/adam.hpp"

namespace lsmi::disc {

struct ClassPrior {
  std::vector<double> log_p;
  std::vector<double> h;  ///< -log p(y)
};

/// Laplace-smoothed label frequencies (one pseudo-count per class).
ClassPrior class_prior(std::span<const int> labels, int num_classes);

struct ClassifierConfig {
  std::size_t hidden = 16;  ///< 0 selects the linear model
  std::size_t steps = 3000;
  std::size_t batch = 256;
  double learning_rate = 1e-2;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

void validate(const ClassifierConfig& cfg);

struct Evaluation {
  double accuracy = 0.0;
  double nll = 0.0;  ///< mean -log p(y|x) in nats, after clamping
  std::size_t n = 0;
};

/// Inputs are standardized with stored per-feature shift/scale, then passed
/// through an optional tanh hidden layer and a linear output map.
class SoftmaxClassifier {
 public:
  SoftmaxClassifier(std::size_t input_dim, int num_classes, std::size_t hidden,
                    std::uint64_t seed);

  std::size_t input_dim() const noexcept { return input_dim_; }
  int num_classes() const noexcept { return num_classes_; }
  std::size_t hidden() const noexcept { return hidden_; }

  /// Unclamped log-softmax outputs.
  std::vector<double> raw_log_probs(std::span<const double> x) const;

  /// Probabilities clamped to [1e-7, 1 - 1e-7], renormalized, then logged.
  std::vector<double> log_posterior(std::span<const double> x) const;

  /// Row-major n x K clamped log posteriors.
  Eigen::MatrixXd log_posteriors(const Rows& rows) const;

  std::span<const double> parameters() const noexcept { return params_; }
  void set_parameters(std::span<const double> p);

  void set_standardization(std::vector<double> shift, std::vector<double> scale);
  std::span<const double> shift() const noexcept { return shift_; }
  std::span<const double> scale() const noexcept { return scale_; }

  /// Mean NLL and gradient over a batch (unclamped log-softmax).
  double loss_and_grad(const Rows& batch, std::span<const int> labels,
                       std::span<double> grad, double weight_decay) const;

  std::optional<Evaluation> train_eval;
  std::optional<Evaluation> holdout_eval;

 private:
  /// Logits for standardized inputs, one column per sample; optionally keeps
  /// the hidden activations.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& xs,
                          Eigen::MatrixXd* hidden_out) const;
  Eigen::MatrixXd standardize(const Rows& rows) const;

  std::size_t input_dim_;
  int num_classes_;
  std::size_t hidden_;
  std::vector<double> params_;
  std::vector<double> shift_;
  std::vector<double> scale_;
};

/// Clamp a log-probability vector at the model boundary and renormalize.
std::vector<double> clamp_log_probs(std::span<const double> log_p);

SoftmaxClassifier train(const Rows& inputs, std::span<const int> labels,
                        int num_classes, const ClassifierConfig& cfg,
                        std::optional<Rows> holdout_inputs = std::nullopt,
                        std::span<const int> holdout_labels = {});

Evaluation evaluate(const SoftmaxClassifier& model, const Rows& inputs,
                    std::span<const int> labels);

/// Same metrics for precomputed (already clamped) log posteriors.
Evaluation evaluate_log_posteriors(const Eigen::MatrixXd& log_post,
                                   std::span<const int> labels);

nlohmann::json to_json(const SoftmaxClassifier& m);
SoftmaxClassifier classifier_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Evaluation& e);

}  // namespace lsmi::disc
