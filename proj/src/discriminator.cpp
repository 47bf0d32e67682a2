#include "lsmi/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lsmi/error.hpp"
#include "lsmi/info_core.hpp"

namespace lsmi::disc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ConstMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;

/// Column-wise log-softmax.
MatrixXd log_softmax_cols(const MatrixXd& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const double mx = logits.col(c).maxCoeff();
    const double lse =
        mx + std::log((logits.col(c).array() - mx).exp().sum());
    out.col(c) = logits.col(c).array() - lse;
  }
  return out;
}

}  // namespace

ClassPrior class_prior(std::span<const int> labels, int num_classes) {
  require(!labels.empty(), ErrorKind::empty_input,
          "class prior needs at least one label");
  require(num_classes > 0, ErrorKind::invalid_input,
          "class count must be positive");
  std::vector<double> counts(static_cast<std::size_t>(num_classes), 1.0);
  for (int y : labels) {
    require(y >= 0 && y < num_classes, ErrorKind::invalid_input,
            "label out of range");
    counts[static_cast<std::size_t>(y)] += 1.0;
  }
  const double total = static_cast<double>(labels.size() + counts.size());
  ClassPrior out;
  for (double c : counts) {
    out.log_p.push_back(std::log(c / total));
    out.h.push_back(-out.log_p.back());
  }
  return out;
}

void validate(const ClassifierConfig& cfg) {
  require(cfg.steps > 0 && cfg.batch > 0, ErrorKind::invalid_config,
          "classifier steps and batch must be positive");
  require(std::isfinite(cfg.learning_rate) && cfg.learning_rate > 0.0,
          ErrorKind::invalid_config, "classifier learning_rate must be positive");
  require(cfg.weight_decay >= 0.0, ErrorKind::invalid_config,
          "weight_decay must be non-negative");
}

std::vector<double> clamp_log_probs(std::span<const double> log_p) {
  std::vector<double> p(log_p.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::clamp(std::exp(log_p[k]), info::kProbClamp,
                      1.0 - info::kProbClamp);
    total += p[k];
  }
  for (double& v : p) v = std::log(v / total);
  return p;
}

SoftmaxClassifier::SoftmaxClassifier(std::size_t input_dim, int num_classes,
                                     std::size_t hidden, std::uint64_t seed)
    : input_dim_(input_dim),
      num_classes_(num_classes),
      hidden_(hidden),
      shift_(input_dim, 0.0),
      scale_(input_dim, 1.0) {
  require(input_dim > 0 && num_classes > 0, ErrorKind::invalid_input,
          "classifier needs positive input dim and class count");
  const std::size_t k = static_cast<std::size_t>(num_classes);
  const std::size_t width = hidden ? hidden : input_dim;
  const std::size_t n_params =
      hidden ? hidden * input_dim + hidden + k * hidden + k
             : k * input_dim + k;
  params_.assign(n_params, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::size_t at = 0;
  if (hidden) {
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    for (std::size_t i = 0; i < hidden * input_dim; ++i)
      params_[at++] = s1 * normal(rng);
    at += hidden;
  }
  const double s2 = 1.0 / std::sqrt(static_cast<double>(width));
  for (std::size_t i = 0; i < k * width; ++i) params_[at++] = s2 * normal(rng);
}

void SoftmaxClassifier::set_parameters(std::span<const double> p) {
  require(p.size() == params_.size(), ErrorKind::invalid_input,
          "parameter vector has wrong size");
  std::copy(p.begin(), p.end(), params_.begin());
}

void SoftmaxClassifier::set_standardization(std::vector<double> shift,
                                            std::vector<double> scale) {
  require(shift.size() == input_dim_ && scale.size() == input_dim_,
          ErrorKind::invalid_input, "standardization has wrong size");
  for (double s : scale)
    require(std::isfinite(s) && s > 0.0, ErrorKind::invalid_input,
            "standardization scale must be positive");
  shift_ = std::move(shift);
  scale_ = std::move(scale);
}

MatrixXd SoftmaxClassifier::standardize(const Rows& rows) const {
  require(rows.dim == input_dim_, ErrorKind::invalid_input,
          "classifier input dimension mismatch");
  MatrixXd xs(static_cast<Eigen::Index>(input_dim_),
              static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows.row(i);
    for (std::size_t j = 0; j < input_dim_; ++j)
      xs(j, i) = (r[j] - shift_[j]) / scale_[j];
  }
  return xs;
}

MatrixXd SoftmaxClassifier::forward(const MatrixXd& xs,
                                    MatrixXd* hidden_out) const {
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const auto k = static_cast<Eigen::Index>(num_classes_);
  const double* p = params_.data();
  if (!hidden_) {
    ConstMap w(p, k, d);
    Eigen::Map<const VectorXd> b(p + k * d, k);
    MatrixXd logits = w * xs;
    logits.colwise() += b;
    return logits;
  }
  const auto h = static_cast<Eigen::Index>(hidden_);
  ConstMap w1(p, h, d);
  Eigen::Map<const VectorXd> b1(p + h * d, h);
  ConstMap w2(p + h * d + h, k, h);
  Eigen::Map<const VectorXd> b2(p + h * d + h + k * h, k);
  MatrixXd a = w1 * xs;
  a.colwise() += b1;
  a = a.array().tanh();
  MatrixXd logits = w2 * a;
  logits.colwise() += b2;
  if (hidden_out) *hidden_out = std::move(a);
  return logits;
}

std::vector<double> SoftmaxClassifier::raw_log_probs(
    std::span<const double> x) const {
  const MatrixXd lp =
      log_softmax_cols(forward(standardize(Rows{x, input_dim_}), nullptr));
  return std::vector<double>(lp.data(), lp.data() + lp.size());
}

std::vector<double> SoftmaxClassifier::log_posterior(
    std::span<const double> x) const {
  return clamp_log_probs(raw_log_probs(x));
}

MatrixXd SoftmaxClassifier::log_posteriors(const Rows& rows) const {
  const MatrixXd lp = log_softmax_cols(forward(standardize(rows), nullptr));
  MatrixXd out(lp.cols(), lp.rows());
  for (Eigen::Index i = 0; i < lp.cols(); ++i) {
    const auto c = clamp_log_probs(
        std::span<const double>(lp.col(i).data(), static_cast<std::size_t>(lp.rows())));
    for (Eigen::Index k = 0; k < lp.rows(); ++k) out(i, k) = c[k];
  }
  return out;
}

double SoftmaxClassifier::loss_and_grad(const Rows& batch,
                                        std::span<const int> labels,
                                        std::span<double> grad,
                                        double weight_decay) const {
  require(batch.size() == labels.size() && batch.size() > 0,
          ErrorKind::invalid_input, "batch and labels disagree");
  require(grad.size() == params_.size(), ErrorKind::invalid_input,
          "gradient buffer has wrong size");
  const auto d = static_cast<Eigen::Index>(input_dim_);
  const auto k = static_cast<Eigen::Index>(num_classes_);
  const auto n = static_cast<Eigen::Index>(batch.size());
  const MatrixXd xs = standardize(batch);
  MatrixXd act;
  const MatrixXd lp = log_softmax_cols(forward(xs, &act));

  double loss = 0.0;
  MatrixXd g = lp.array().exp();
  for (Eigen::Index i = 0; i < n; ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < num_classes_, ErrorKind::invalid_input,
            "label out of range");
    loss -= lp(y, i);
    g(y, i) -= 1.0;
  }
  g /= static_cast<double>(n);
  loss /= static_cast<double>(n);

  std::fill(grad.begin(), grad.end(), 0.0);
  const double* p = params_.data();
  double* q = grad.data();
  if (!hidden_) {
    Map gw(q, k, d);
    gw = g * xs.transpose();
    Eigen::Map<VectorXd>(q + k * d, k) = g.rowwise().sum();
    if (weight_decay > 0.0) {
      ConstMap w(p, k, d);
      gw += weight_decay * w;
      loss += 0.5 * weight_decay * w.squaredNorm();
    }
    return loss;
  }
  const auto h = static_cast<Eigen::Index>(hidden_);
  ConstMap w1(p, h, d);
  ConstMap w2(p + h * d + h, k, h);
  Map gw2(q + h * d + h, k, h);
  gw2 = g * act.transpose();
  Eigen::Map<VectorXd>(q + h * d + h + k * h, k) = g.rowwise().sum();
  const MatrixXd dz =
      (w2.transpose() * g).array() * (1.0 - act.array().square());
  Map gw1(q, h, d);
  gw1 = dz * xs.transpose();
  Eigen::Map<VectorXd>(q + h * d, h) = dz.rowwise().sum();
  if (weight_decay > 0.0) {
    gw1 += weight_decay * w1;
    gw2 += weight_decay * w2;
    loss += 0.5 * weight_decay * (w1.squaredNorm() + w2.squaredNorm());
  }
  return loss;
}

SoftmaxClassifier train(const Rows& inputs, std::span<const int> labels,
                        int num_classes, const ClassifierConfig& cfg,
                        std::optional<Rows> holdout_inputs,
                        std::span<const int> holdout_labels) {
  validate(cfg);
  const std::size_t n = inputs.size();
  const std::size_t d = inputs.dim;
  require(n > 0 && n == labels.size(), ErrorKind::invalid_input,
          "inputs and labels must be non-empty and aligned");
  require(num_classes >= 2, ErrorKind::invalid_input,
          "classifier needs at least two classes");

  SoftmaxClassifier model(d, num_classes, cfg.hidden, cfg.seed);
  std::vector<double> shift(d, 0.0), scale(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) shift[j] += inputs.row(i)[j];
  for (double& v : shift) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double e = inputs.row(i)[j] - shift[j];
      scale[j] += e * e;
    }
  for (double& v : scale) {
    v = std::sqrt(v / static_cast<double>(n));
    if (!(v > 1e-12)) v = 1.0;
  }
  model.set_standardization(shift, scale);

  std::vector<double> params(model.parameters().begin(),
                             model.parameters().end());
  std::vector<double> grad(params.size());
  Adam opt(params.size());
  std::mt19937_64 rng(cfg.seed ^ 0xd1b54a32d192ed03ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch = std::min(cfg.batch, n);
  std::vector<double> xb;
  std::vector<int> yb;
  std::size_t cursor = n;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cursor + batch > n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    xb.clear();
    yb.clear();
    for (std::size_t i = 0; i < batch; ++i) {
      const auto r = inputs.row(order[cursor + i]);
      xb.insert(xb.end(), r.begin(), r.end());
      yb.push_back(labels[order[cursor + i]]);
    }
    cursor += batch;
    const double loss =
        model.loss_and_grad(Rows{xb, d}, yb, grad, cfg.weight_decay);
    if (!std::isfinite(loss))
      throw TrainingDiverged(step, "classifier loss is not finite");
    opt.step(params, grad, cosine_lr(cfg.learning_rate, step, cfg.steps));
    model.set_parameters(params);
  }
  model.train_eval = evaluate(model, inputs, labels);
  if (!std::isfinite(model.train_eval->nll))
    throw TrainingDiverged(cfg.steps, "classifier loss is not finite");
  if (holdout_inputs && holdout_inputs->size() > 0)
    model.holdout_eval = evaluate(model, *holdout_inputs, holdout_labels);
  return model;
}

Evaluation evaluate_log_posteriors(const MatrixXd& log_post,
                                   std::span<const int> labels) {
  require(static_cast<std::size_t>(log_post.rows()) == labels.size(),
          ErrorKind::invalid_input, "predictions and labels differ in length");
  require(!labels.empty(), ErrorKind::empty_input, "nothing to evaluate");
  Evaluation e;
  e.n = labels.size();
  std::size_t correct = 0;
  for (Eigen::Index i = 0; i < log_post.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    require(y >= 0 && y < log_post.cols(), ErrorKind::invalid_input,
            "label out of range");
    std::vector<double> row(static_cast<std::size_t>(log_post.cols()));
    for (Eigen::Index k = 0; k < log_post.cols(); ++k) row[k] = log_post(i, k);
    const auto clamped = clamp_log_probs(row);
    const auto best = std::max_element(clamped.begin(), clamped.end());
    if (best - clamped.begin() == y) ++correct;
    e.nll -= clamped[static_cast<std::size_t>(y)];
  }
  e.accuracy = static_cast<double>(correct) / static_cast<double>(e.n);
  e.nll /= static_cast<double>(e.n);
  return e;
}

Evaluation evaluate(const SoftmaxClassifier& model, const Rows& inputs,
                    std::span<const int> labels) {
  require(inputs.size() == labels.size(), ErrorKind::invalid_input,
          "inputs and labels differ in length");
  return evaluate_log_posteriors(model.log_posteriors(inputs), labels);
}

nlohmann::json to_json(const Evaluation& e) {
  return {{"accuracy", e.accuracy}, {"nll", e.nll}, {"n", e.n}};
}

nlohmann::json to_json(const SoftmaxClassifier& m) {
  auto vec = [](std::span<const double> s) {
    return std::vector<double>(s.begin(), s.end());
  };
  return {{"arch", m.hidden() ? "mlp" : "linear"},
          {"dims",
           {{"input", m.input_dim()},
            {"hidden", m.hidden()},
            {"classes", m.num_classes()}}},
          {"parameters",
           {{"flat", vec(m.parameters())},
            {"shift", vec(m.shift())},
            {"scale", vec(m.scale())}}}};
}

SoftmaxClassifier classifier_from_json(const nlohmann::json& doc) {
  try {
    const auto& dims = doc.at("dims");
    SoftmaxClassifier m(dims.at("input").get<std::size_t>(),
                        dims.at("classes").get<int>(),
                        dims.at("hidden").get<std::size_t>(), 0);
    const auto& p = doc.at("parameters");
    m.set_parameters(p.at("flat").get<std::vector<double>>());
    m.set_standardization(p.at("shift").get<std::vector<double>>(),
                          p.at("scale").get<std::vector<double>>());
    return m;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::invalid_input,
         std::string("malformed classifier checkpoint: ") + ex.what());
  }
}

}  // namespace lsmi::disc
