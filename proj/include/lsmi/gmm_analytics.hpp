#pragma once

// Closed-form reference for the two-modality Gaussian-mixture benchmark:
// both modalities share class means and covariances, and the cross-modal
// covariance within class y is rho * Sigma_y.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "lsmi/dataset.hpp"
#include "lsmi/info_core.hpp"

namespace lsmi::gmm {

class MogModel {
 public:
  /// Validates priors, symmetry and conditioning, then caches Cholesky
  /// factors. Condition numbers above 1e12 are rejected.
  MogModel(std::vector<double> priors, std::vector<Eigen::VectorXd> means,
           std::vector<Eigen::MatrixXd> covariances, double rho);

  std::size_t num_classes() const noexcept { return priors_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  double rho() const noexcept { return rho_; }
  const std::vector<double>& priors() const noexcept { return priors_; }
  const Eigen::VectorXd& mean(std::size_t y) const { return means_.at(y); }
  const Eigen::MatrixXd& covariance(std::size_t y) const { return covs_.at(y); }
  /// Lower Cholesky factor of Sigma_y.
  const Eigen::MatrixXd& cholesky(std::size_t y) const { return chol_.at(y); }

  /// log N(x; mu_y, Sigma_y).
  double log_class_density(std::size_t y, std::span<const double> x) const;

  /// log p(x1, x2 | y) for |rho| < 1.
  double log_joint_class_density(std::size_t y, std::span<const double> x1,
                                 std::span<const double> x2) const;

  bool degenerate() const noexcept { return std::abs(rho_) >= 1.0; }

  /// Same class parameters, different coupling.
  MogModel with_rho(double rho) const;

 private:
  double mahalanobis_sq(std::size_t y, const Eigen::VectorXd& diff) const;

  std::size_t dim_ = 0;
  std::vector<double> priors_;
  std::vector<double> log_priors_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> covs_;
  std::vector<Eigen::MatrixXd> chol_;
  std::vector<double> log_dets_;
  double rho_ = 0.0;
};

/// Symmetric two-class model with means +-mu and shared covariance.
MogModel symmetric_two_class(const Eigen::VectorXd& mu,
                             const Eigen::MatrixXd& sigma, double rho);

/// log sum_y pi_y N(x; mu_y, Sigma_y). `modality` is 1 or 2; both share
/// parameters.
double log_marginal_density(const MogModel& m, int modality,
                            std::span<const double> x);

/// Exact log p(y | .) over all classes. At least one modality must be given.
/// For |rho| = 1 the joint posterior falls back to the consistent classes of
/// the affine constraint, evaluated through x1.
std::vector<double> log_posterior(const MogModel& m,
                                  std::optional<std::span<const double>> x1,
                                  std::optional<std::span<const double>> x2);

/// Batched log p(y | .): columns of X1/X2 are samples (d x n); returns an
/// n x K matrix that agrees with log_posterior row by row.
Eigen::MatrixXd log_posteriors(const MogModel& m, const Eigen::MatrixXd* X1,
                               const Eigen::MatrixXd* X2);

/// n-vector of log p(x_m), same layout as log_posteriors.
Eigen::VectorXd log_marginal_densities(const MogModel& m,
                                       const Eigen::MatrixXd& X);

/// d x n copy of one modality of `ds`.
Eigen::MatrixXd modality_columns(const Dataset& ds, std::size_t modality);

std::vector<double> posterior(const MogModel& m,
                              std::optional<std::span<const double>> x1,
                              std::optional<std::span<const double>> x2);

info::PointwiseInfo analytic_pointwise(const MogModel& m, const Sample& s);

struct AnalyticLsmi {
  std::vector<info::PointwiseInfo> pointwise;
  std::vector<info::InteractionProfile> profiles;
  info::InteractionProfile average;
};

AnalyticLsmi analytic_lsmi(const MogModel& m, const Dataset& ds);

struct EntropyEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

/// Monte Carlo -E[log p(x_m)] over seeded draws from the model.
EntropyEstimate mc_differential_entropy(const MogModel& m, int modality,
                                        std::size_t n, std::uint64_t seed);

nlohmann::json to_json(const MogModel& m);
MogModel mog_from_json(const nlohmann::json& doc);

}  // namespace lsmi::gmm
