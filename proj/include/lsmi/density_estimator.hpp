#pragma once

// Trainable entropy estimator: a normalized diagonal Gaussian mixture
// p_theta(x) fit by minimizing mean surprisal -log p_theta(x). Because the
// expected surprisal equals H(X) + KL(p || p_theta), the training loss is an
// upper bound on the differential entropy that tightens as the fit improves.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lsmi/adam.hpp"

namespace lsmi::density {

inline constexpr double kSigmaFloor = 1e-3;

enum class Init { kmeans, random_subset };

Init parse_init(std::string_view name);
std::string_view init_name(Init i) noexcept;

struct TrainConfig {
  std::size_t components = 32;
  std::size_t steps = 2000;
  std::size_t batch = 256;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  Init init = Init::kmeans;
};

void validate(const TrainConfig& cfg);

/// Parameters live in one flat vector laid out as
/// [logits (Kc) | means (Kc x d) | log_sigmas (Kc x d)].
class MixtureDensityModel {
 public:
  MixtureDensityModel(std::size_t dim, std::vector<double> logits,
                      std::vector<double> means,
                      std::vector<double> log_sigmas);

  std::size_t components() const noexcept { return components_; }
  std::size_t dim() const noexcept { return dim_; }

  std::vector<double> weights() const;
  std::span<const double> logits() const noexcept {
    return {params_.data(), components_};
  }
  std::span<const double> means() const noexcept {
    return {params_.data() + components_, components_ * dim_};
  }
  std::span<const double> log_sigmas() const noexcept {
    return {params_.data() + components_ * (1 + dim_), components_ * dim_};
  }

  std::span<const double> parameters() const noexcept { return params_; }
  /// Overwrites all parameters; log-sigmas are projected onto the floor.
  void set_parameters(std::span<const double> p);

  /// -log p_theta(x) in nats.
  double surprisal(std::span<const double> x) const;
  std::vector<double> surprisals(const Rows& rows) const;
  double mean_surprisal(const Rows& rows) const;

 private:
  void project();

  std::size_t dim_ = 0;
  std::size_t components_ = 0;
  std::vector<double> params_;
};

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  ///< same layout as parameters()
};

/// Mean surprisal over `batch` and its analytic gradient.
LossGrad loss_and_grad(const MixtureDensityModel& model, const Rows& batch);

/// k-means++ (or random subset) means, uniform logits, per-dimension data
/// std / Kc^(1/d) as scales. If n < Kc the component count is reduced to n
/// and a note is appended to `notes`.
MixtureDensityModel init(const Rows& data, const TrainConfig& cfg,
                         std::vector<std::string>* notes = nullptr);

struct TrainResult {
  MixtureDensityModel model;
  /// Full-data mean surprisal before training and after each epoch (the
  /// last entry is the final model).
  std::vector<double> loss_trace;
  std::vector<std::string> notes;
};

/// Mini-batch training with bias-corrected adaptive steps and cosine decay.
/// Throws TrainingDiverged on a non-finite loss.
TrainResult train(const Rows& data, const TrainConfig& cfg);

nlohmann::json to_json(const MixtureDensityModel& m);
MixtureDensityModel density_from_json(const nlohmann::json& doc);

}  // namespace lsmi::density
