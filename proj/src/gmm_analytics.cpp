#include "lsmi/gmm_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "lsmi/error.hpp"

namespace lsmi::gmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kMaxCondition = 1e12;

double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double a : v) s += std::exp(a - mx);
  return mx + std::log(s);
}

std::vector<double> log_normalize(std::vector<double> v) {
  const double lse = log_sum_exp(v);
  for (double& a : v) a -= lse;
  return v;
}

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

}  // namespace

MogModel::MogModel(std::vector<double> priors,
                   std::vector<Eigen::VectorXd> means,
                   std::vector<Eigen::MatrixXd> covariances, double rho)
    : priors_(std::move(priors)),
      means_(std::move(means)),
      covs_(std::move(covariances)),
      rho_(rho) {
  const std::size_t k = priors_.size();
  require(k > 0, ErrorKind::invalid_config, "model needs at least one class");
  require(means_.size() == k && covs_.size() == k, ErrorKind::invalid_config,
          "priors, means and covariances must have one entry per class");
  require(std::isfinite(rho_) && std::abs(rho_) <= 1.0,
          ErrorKind::invalid_config, "rho must lie in [-1, 1]");
  dim_ = static_cast<std::size_t>(means_[0].size());
  require(dim_ > 0, ErrorKind::invalid_config, "dimension must be positive");

  double total = 0.0;
  for (double p : priors_) {
    require(std::isfinite(p) && p > 0.0, ErrorKind::invalid_config,
            "class priors must be positive");
    total += p;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::invalid_config,
          "class priors must sum to 1");

  for (std::size_t y = 0; y < k; ++y) {
    const auto& s = covs_[y];
    require(static_cast<std::size_t>(means_[y].size()) == dim_ &&
                static_cast<std::size_t>(s.rows()) == dim_ &&
                static_cast<std::size_t>(s.cols()) == dim_,
            ErrorKind::invalid_config, "class parameters have mismatched dims");
    require((s - s.transpose()).cwiseAbs().maxCoeff() <=
                1e-12 * std::max(1.0, s.cwiseAbs().maxCoeff()),
            ErrorKind::invalid_config, "covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s,
                                                       Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    require(lo > 0.0 && hi / lo <= kMaxCondition, ErrorKind::invalid_config,
            "covariance of class " + std::to_string(y) +
                " is not positive definite or is ill-conditioned");
    Eigen::LLT<Eigen::MatrixXd> llt(s);
    require(llt.info() == Eigen::Success, ErrorKind::invalid_config,
            "Cholesky factorization failed");
    Eigen::MatrixXd l = llt.matrixL();
    log_dets_.push_back(2.0 * l.diagonal().array().log().sum());
    chol_.push_back(std::move(l));
    log_priors_.push_back(std::log(priors_[y]));
  }
}

MogModel MogModel::with_rho(double rho) const {
  return MogModel(priors_, means_, covs_, rho);
}

double MogModel::mahalanobis_sq(std::size_t y,
                                const Eigen::VectorXd& diff) const {
  const Eigen::VectorXd z =
      chol_[y].triangularView<Eigen::Lower>().solve(diff);
  return z.squaredNorm();
}

double MogModel::log_class_density(std::size_t y,
                                   std::span<const double> x) const {
  require(x.size() == dim_, ErrorKind::invalid_input, "dimension mismatch");
  const Eigen::VectorXd diff = as_vector(x) - means_.at(y);
  return -0.5 * (mahalanobis_sq(y, diff) + log_dets_[y] +
                 static_cast<double>(dim_) * kLog2Pi);
}

double MogModel::log_joint_class_density(std::size_t y,
                                         std::span<const double> x1,
                                         std::span<const double> x2) const {
  require(x1.size() == dim_ && x2.size() == dim_, ErrorKind::invalid_input,
          "dimension mismatch");
  require(!degenerate(), ErrorKind::invalid_input,
          "joint density is singular for |rho| = 1");
  // Rotating to u = (x1 + x2)/sqrt2, v = (x1 - x2)/sqrt2 block-diagonalizes
  // the joint covariance into (1 + rho) Sigma and (1 - rho) Sigma.
  const double c = std::numbers::sqrt2 / 2.0;
  const auto a = as_vector(x1);
  const auto b = as_vector(x2);
  const Eigen::VectorXd u = c * (a + b) - std::numbers::sqrt2 * means_[y];
  const Eigen::VectorXd v = c * (a - b);
  const double d = static_cast<double>(dim_);
  const double cu = 1.0 + rho_;
  const double cv = 1.0 - rho_;
  return -0.5 * (mahalanobis_sq(y, u) / cu + d * std::log(cu) +
                 mahalanobis_sq(y, v) / cv + d * std::log(cv) +
                 2.0 * log_dets_[y] + 2.0 * d * kLog2Pi);
}

MogModel symmetric_two_class(const Eigen::VectorXd& mu,
                             const Eigen::MatrixXd& sigma, double rho) {
  return MogModel({0.5, 0.5}, {mu, Eigen::VectorXd(-mu)}, {sigma, sigma}, rho);
}

double log_marginal_density(const MogModel& m, int modality,
                            std::span<const double> x) {
  require(modality == 1 || modality == 2, ErrorKind::invalid_input,
          "modality must be 1 or 2");
  std::vector<double> terms(m.num_classes());
  for (std::size_t y = 0; y < terms.size(); ++y)
    terms[y] = std::log(m.priors()[y]) + m.log_class_density(y, x);
  return log_sum_exp(terms);
}

std::vector<double> log_posterior(const MogModel& m,
                                  std::optional<std::span<const double>> x1,
                                  std::optional<std::span<const double>> x2) {
  require(x1.has_value() || x2.has_value(), ErrorKind::invalid_input,
          "posterior needs at least one modality");
  const std::size_t k = m.num_classes();
  std::vector<double> lp(k);
  if (x1 && x2 && !m.degenerate()) {
    for (std::size_t y = 0; y < k; ++y)
      lp[y] = std::log(m.priors()[y]) + m.log_joint_class_density(y, *x1, *x2);
    return log_normalize(std::move(lp));
  }
  const auto single = x1 ? *x1 : *x2;
  for (std::size_t y = 0; y < k; ++y)
    lp[y] = std::log(m.priors()[y]) + m.log_class_density(y, single);
  if (x1 && x2 && m.rho() < 0.0) {
    // rho = -1 pins x1 + x2 = 2 mu_y; only classes on that support survive.
    require(x2->size() == m.dim(), ErrorKind::invalid_input,
            "dimension mismatch");
    std::vector<double> masked(k, -std::numeric_limits<double>::infinity());
    bool any = false;
    for (std::size_t y = 0; y < k; ++y) {
      double worst = 0.0;
      for (std::size_t j = 0; j < m.dim(); ++j) {
        const double resid = (*x1)[j] + (*x2)[j] - 2.0 * m.mean(y)(j);
        const double scale = 1.0 + std::abs((*x1)[j]) + std::abs((*x2)[j]);
        worst = std::max(worst, std::abs(resid) / scale);
      }
      if (worst <= 1e-9) {
        masked[y] = lp[y];
        any = true;
      }
    }
    if (any) lp = std::move(masked);
  }
  return log_normalize(std::move(lp));
}

namespace {

/// n x K matrix of log pi_y + log N(col; mean_scale * mu_y, cov_scale *
/// Sigma_y). Classes with identical covariances share one whitening solve.
Eigen::MatrixXd class_terms(const MogModel& m, const Eigen::MatrixXd& X,
                            double mean_scale, double cov_scale) {
  const auto n = X.cols();
  const std::size_t k = m.num_classes();
  const double d = static_cast<double>(m.dim());
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(k));
  std::vector<bool> done(k, false);
  for (std::size_t lead = 0; lead < k; ++lead) {
    if (done[lead]) continue;
    std::vector<std::size_t> group;
    for (std::size_t y = lead; y < k; ++y)
      if (!done[y] && m.covariance(y) == m.covariance(lead)) {
        group.push_back(y);
        done[y] = true;
      }
    const auto& l = m.cholesky(lead);
    const double log_det =
        2.0 * l.diagonal().array().log().sum() + d * std::log(cov_scale);
    Eigen::MatrixXd w = X;
    l.triangularView<Eigen::Lower>().solveInPlace(w);
    Eigen::MatrixXd centers(X.rows(), static_cast<Eigen::Index>(group.size()));
    for (std::size_t g = 0; g < group.size(); ++g)
      centers.col(static_cast<Eigen::Index>(g)) = mean_scale * m.mean(group[g]);
    l.triangularView<Eigen::Lower>().solveInPlace(centers);
    const Eigen::VectorXd w_sq = w.colwise().squaredNorm().transpose();
    const Eigen::MatrixXd cross = w.transpose() * centers;
    for (std::size_t g = 0; g < group.size(); ++g) {
      const auto gi = static_cast<Eigen::Index>(g);
      const double c_sq = centers.col(gi).squaredNorm();
      const Eigen::ArrayXd dist =
          (w_sq.array() - 2.0 * cross.col(gi).array() + c_sq).max(0.0);
      out.col(static_cast<Eigen::Index>(group[g])) =
          (-0.5 * (dist / cov_scale + log_det + d * kLog2Pi) +
           std::log(m.priors()[group[g]]))
              .matrix();
    }
  }
  return out;
}

void normalize_rows(Eigen::MatrixXd& lp) {
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    const double mx = lp.row(i).maxCoeff();
    lp.row(i).array() -=
        mx + std::log((lp.row(i).array() - mx).exp().sum());
  }
}

}  // namespace

Eigen::MatrixXd modality_columns(const Dataset& ds, std::size_t modality) {
  require(modality < ds.modalities(), ErrorKind::invalid_input,
          "modality out of range");
  const auto d = static_cast<Eigen::Index>(ds.dims[modality]);
  Eigen::MatrixXd X(d, static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i)
    X.col(static_cast<Eigen::Index>(i)) = as_vector(ds.samples[i].x[modality]);
  return X;
}

Eigen::VectorXd log_marginal_densities(const MogModel& m,
                                       const Eigen::MatrixXd& X) {
  require(static_cast<std::size_t>(X.rows()) == m.dim(),
          ErrorKind::invalid_input, "dimension mismatch");
  const Eigen::MatrixXd t = class_terms(m, X, 1.0, 1.0);
  Eigen::VectorXd out(t.rows());
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    const double mx = t.row(i).maxCoeff();
    out(i) = mx + std::log((t.row(i).array() - mx).exp().sum());
  }
  return out;
}

Eigen::MatrixXd log_posteriors(const MogModel& m, const Eigen::MatrixXd* X1,
                               const Eigen::MatrixXd* X2) {
  require(X1 || X2, ErrorKind::invalid_input,
          "posterior needs at least one modality");
  for (const auto* X : {X1, X2})
    require(!X || static_cast<std::size_t>(X->rows()) == m.dim(),
            ErrorKind::invalid_input, "dimension mismatch");
  Eigen::MatrixXd lp;
  if (X1 && X2) {
    require(X1->cols() == X2->cols(), ErrorKind::invalid_input,
            "modalities have different sample counts");
    if (m.degenerate()) {
      lp.resize(X1->cols(), static_cast<Eigen::Index>(m.num_classes()));
      for (Eigen::Index i = 0; i < X1->cols(); ++i) {
        const Eigen::VectorXd a = X1->col(i), b = X2->col(i);
        const auto row = log_posterior(m, std::span<const double>(a.data(), a.size()),
                                       std::span<const double>(b.data(), b.size()));
        for (Eigen::Index y = 0; y < lp.cols(); ++y)
          lp(i, y) = row[static_cast<std::size_t>(y)];
      }
      return lp;
    }
    const double c = std::numbers::sqrt2 / 2.0;
    const Eigen::MatrixXd u = c * (*X1 + *X2);
    const Eigen::MatrixXd v = c * (*X1 - *X2);
    lp = class_terms(m, u, std::numbers::sqrt2, 1.0 + m.rho()) +
         class_terms(m, v, 0.0, 1.0 - m.rho());
    for (std::size_t y = 0; y < m.num_classes(); ++y)
      lp.col(static_cast<Eigen::Index>(y)).array() -= std::log(m.priors()[y]);
  } else {
    lp = class_terms(m, X1 ? *X1 : *X2, 1.0, 1.0);
  }
  normalize_rows(lp);
  return lp;
}

std::vector<double> posterior(const MogModel& m,
                              std::optional<std::span<const double>> x1,
                              std::optional<std::span<const double>> x2) {
  auto lp = log_posterior(m, x1, x2);
  for (double& v : lp) v = std::exp(v);
  return lp;
}

info::PointwiseInfo analytic_pointwise(const MogModel& m, const Sample& s) {
  require(s.x.size() >= 2, ErrorKind::invalid_input,
          "sample needs two modalities");
  require(s.y >= 0 && static_cast<std::size_t>(s.y) < m.num_classes(),
          ErrorKind::invalid_input, "label outside the model's classes");
  const std::span<const double> x1 = s.x[0];
  const std::span<const double> x2 = s.x[1];
  const auto y = static_cast<std::size_t>(s.y);

  info::PointwiseInfo p;
  p.h_y = -std::log(m.priors()[y]);
  p.h1 = -log_marginal_density(m, 1, x1);
  p.h2 = -log_marginal_density(m, 2, x2);
  const double lp1 = log_posterior(m, x1, std::nullopt)[y];
  const double lp2 = log_posterior(m, std::nullopt, x2)[y];
  const double lp12 = log_posterior(m, x1, x2)[y];
  p.h1_given_y = info::conditional_surprisal(p.h1, p.h_y, lp1);
  p.h2_given_y = info::conditional_surprisal(p.h2, p.h_y, lp2);
  p.i1 = info::pmi_from_posterior(lp1, p.h_y);
  p.i2 = info::pmi_from_posterior(lp2, p.h_y);
  p.i12 = info::pmi_from_posterior(lp12, p.h_y);
  return p;
}

AnalyticLsmi analytic_lsmi(const MogModel& m, const Dataset& ds) {
  require(ds.modalities() >= 2, ErrorKind::invalid_input,
          "dataset needs two modalities");
  const auto X1 = modality_columns(ds, 0);
  const auto X2 = modality_columns(ds, 1);
  const auto h1 = log_marginal_densities(m, X1);
  const auto h2 = log_marginal_densities(m, X2);
  const auto lp1 = log_posteriors(m, &X1, nullptr);
  const auto lp2 = log_posteriors(m, nullptr, &X2);
  const auto lp12 = log_posteriors(m, &X1, &X2);
  AnalyticLsmi out;
  out.pointwise.reserve(ds.size());
  out.profiles.reserve(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    require(s.y >= 0 && static_cast<std::size_t>(s.y) < m.num_classes(),
            ErrorKind::invalid_input, "label outside the model's classes");
    const auto r = static_cast<Eigen::Index>(i);
    const auto y = static_cast<Eigen::Index>(s.y);
    info::PointwiseInfo p;
    p.h_y = -std::log(m.priors()[static_cast<std::size_t>(s.y)]);
    p.h1 = -h1(r);
    p.h2 = -h2(r);
    p.h1_given_y = info::conditional_surprisal(p.h1, p.h_y, lp1(r, y));
    p.h2_given_y = info::conditional_surprisal(p.h2, p.h_y, lp2(r, y));
    p.i1 = info::pmi_from_posterior(lp1(r, y), p.h_y);
    p.i2 = info::pmi_from_posterior(lp2(r, y), p.h_y);
    p.i12 = info::pmi_from_posterior(lp12(r, y), p.h_y);
    out.pointwise.push_back(p);
    out.profiles.push_back(info::decompose(p));
  }
  out.average = info::aggregate(out.profiles);
  return out;
}

EntropyEstimate mc_differential_entropy(const MogModel& m, int modality,
                                        std::size_t n, std::uint64_t seed) {
  require(n >= 1000, ErrorKind::invalid_input,
          "Monte Carlo entropy needs at least 1000 draws");
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(m.priors().begin(),
                                               m.priors().end());
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(m.dim());
  std::vector<double> x(m.dim());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = pick(rng);
    for (auto& v : z) v = normal(rng);
    const Eigen::VectorXd draw = m.mean(y) + m.cholesky(y) * z;
    std::copy(draw.begin(), draw.end(), x.begin());
    const double h = -log_marginal_density(m, modality, x);
    sum += h;
    sum_sq += h * h;
  }
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max(0.0, (sum_sq - nn * mean * mean) / (nn - 1.0));
  return {mean, std::sqrt(var / nn)};
}

nlohmann::json to_json(const MogModel& m) {
  nlohmann::json mu = nlohmann::json::array();
  nlohmann::json sigma = nlohmann::json::array();
  for (std::size_t y = 0; y < m.num_classes(); ++y) {
    mu.push_back(std::vector<double>(m.mean(y).begin(), m.mean(y).end()));
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.covariance(y).rows(); ++r) {
      std::vector<double> row(m.covariance(y).cols());
      for (Eigen::Index c = 0; c < m.covariance(y).cols(); ++c)
        row[c] = m.covariance(y)(r, c);
      rows.push_back(row);
    }
    sigma.push_back(rows);
  }
  return {{"K", m.num_classes()}, {"d", m.dim()}, {"pi", m.priors()},
          {"mu", mu},             {"sigma", sigma}, {"rho", m.rho()}};
}

MogModel mog_from_json(const nlohmann::json& doc) {
  try {
    for (const auto& [key, _] : doc.items())
      require(key == "K" || key == "d" || key == "pi" || key == "mu" ||
                  key == "sigma" || key == "rho",
              ErrorKind::invalid_config, "unknown model key \"" + key + "\"");
    const auto k = doc.at("K").get<std::size_t>();
    const auto d = doc.at("d").get<std::size_t>();
    const auto pi = doc.at("pi").get<std::vector<double>>();
    const auto mu = doc.at("mu").get<std::vector<std::vector<double>>>();
    const auto sigma =
        doc.at("sigma").get<std::vector<std::vector<std::vector<double>>>>();
    require(pi.size() == k && mu.size() == k && sigma.size() == k,
            ErrorKind::invalid_config, "model arrays must have K entries");
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
    for (std::size_t y = 0; y < k; ++y) {
      require(mu[y].size() == d && sigma[y].size() == d,
              ErrorKind::invalid_config, "model entries must have d dims");
      means.push_back(Eigen::Map<const Eigen::VectorXd>(
          mu[y].data(), static_cast<Eigen::Index>(d)));
      Eigen::MatrixXd s(d, d);
      for (std::size_t r = 0; r < d; ++r) {
        require(sigma[y][r].size() == d, ErrorKind::invalid_config,
                "covariance rows must have d entries");
        for (std::size_t c = 0; c < d; ++c) s(r, c) = sigma[y][r][c];
      }
      covs.push_back(std::move(s));
    }
    return MogModel(pi, std::move(means), std::move(covs),
                    doc.at("rho").get<double>());
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::invalid_config, std::string("malformed model: ") + ex.what());
  }
}

}  // namespace lsmi::gmm
