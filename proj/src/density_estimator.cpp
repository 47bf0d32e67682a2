#include "lsmi/density_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lsmi/error.hpp"

namespace lsmi::density {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<double> log_softmax(std::span<const double> a) {
  const double mx = *std::max_element(a.begin(), a.end());
  double s = 0.0;
  for (double v : a) s += std::exp(v - mx);
  const double lse = mx + std::log(s);
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - lse;
  return out;
}

/// Per-component log w_k + log N_k(x) for one row; returns log p(x).
double component_terms(const MixtureDensityModel& m,
                       std::span<const double> log_w,
                       std::span<const double> inv_sigma,
                       std::span<const double> x, std::span<double> terms) {
  const std::size_t d = m.dim();
  const auto mu = m.means();
  const auto ls = m.log_sigmas();
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.components(); ++k) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (x[j] - mu[k * d + j]) * inv_sigma[k * d + j];
      acc += 0.5 * z * z + ls[k * d + j];
    }
    terms[k] = log_w[k] - acc - 0.5 * static_cast<double>(d) * kLog2Pi;
    mx = std::max(mx, terms[k]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

std::vector<double> inverse_sigmas(const MixtureDensityModel& m) {
  std::vector<double> out(m.log_sigmas().size());
  std::transform(m.log_sigmas().begin(), m.log_sigmas().end(), out.begin(),
                 [](double l) { return std::exp(-l); });
  return out;
}

}  // namespace

Init parse_init(std::string_view name) {
  if (name == "kmeans") return Init::kmeans;
  if (name == "random-subset" || name == "random_subset")
    return Init::random_subset;
  fail(ErrorKind::invalid_config,
       "init must be \"kmeans\" or \"random-subset\"");
}

std::string_view init_name(Init i) noexcept {
  return i == Init::kmeans ? "kmeans" : "random-subset";
}

void validate(const TrainConfig& cfg) {
  require(cfg.components > 0, ErrorKind::invalid_config,
          "components must be positive");
  require(cfg.steps > 0, ErrorKind::invalid_config, "steps must be positive");
  require(cfg.batch > 0, ErrorKind::invalid_config, "batch must be positive");
  require(std::isfinite(cfg.learning_rate) && cfg.learning_rate > 0.0,
          ErrorKind::invalid_config, "learning_rate must be positive");
}

MixtureDensityModel::MixtureDensityModel(std::size_t dim,
                                         std::vector<double> logits,
                                         std::vector<double> means,
                                         std::vector<double> log_sigmas)
    : dim_(dim), components_(logits.size()) {
  require(dim_ > 0 && components_ > 0, ErrorKind::invalid_input,
          "mixture needs positive dimension and component count");
  require(means.size() == components_ * dim_ &&
              log_sigmas.size() == components_ * dim_,
          ErrorKind::invalid_input, "mixture parameter shapes disagree");
  params_.reserve(components_ * (1 + 2 * dim_));
  params_.insert(params_.end(), logits.begin(), logits.end());
  params_.insert(params_.end(), means.begin(), means.end());
  params_.insert(params_.end(), log_sigmas.begin(), log_sigmas.end());
  for (double v : params_)
    require(std::isfinite(v), ErrorKind::invalid_input,
            "mixture parameters must be finite");
  project();
}

void MixtureDensityModel::project() {
  const double floor = std::log(kSigmaFloor);
  for (std::size_t i = components_ * (1 + dim_); i < params_.size(); ++i)
    params_[i] = std::max(params_[i], floor);
}

void MixtureDensityModel::set_parameters(std::span<const double> p) {
  require(p.size() == params_.size(), ErrorKind::invalid_input,
          "parameter vector has wrong size");
  std::copy(p.begin(), p.end(), params_.begin());
  project();
}

std::vector<double> MixtureDensityModel::weights() const {
  auto lw = log_softmax(logits());
  for (double& v : lw) v = std::exp(v);
  return lw;
}

double MixtureDensityModel::surprisal(std::span<const double> x) const {
  require(x.size() == dim_, ErrorKind::invalid_input, "dimension mismatch");
  const auto log_w = log_softmax(logits());
  const auto inv = inverse_sigmas(*this);
  std::vector<double> terms(components_);
  return -component_terms(*this, log_w, inv, x, terms);
}

std::vector<double> MixtureDensityModel::surprisals(const Rows& rows) const {
  require(rows.dim == dim_, ErrorKind::invalid_input, "dimension mismatch");
  const auto log_w = log_softmax(logits());
  const auto inv = inverse_sigmas(*this);
  std::vector<double> terms(components_);
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    out[i] = -component_terms(*this, log_w, inv, rows.row(i), terms);
  return out;
}

double MixtureDensityModel::mean_surprisal(const Rows& rows) const {
  const auto h = surprisals(rows);
  require(!h.empty(), ErrorKind::empty_input, "no rows to evaluate");
  return std::accumulate(h.begin(), h.end(), 0.0) /
         static_cast<double>(h.size());
}

LossGrad loss_and_grad(const MixtureDensityModel& model, const Rows& batch) {
  require(batch.size() > 0, ErrorKind::empty_input, "empty batch");
  require(batch.dim == model.dim(), ErrorKind::invalid_input,
          "dimension mismatch");
  const std::size_t kc = model.components();
  const std::size_t d = model.dim();
  const auto log_w = log_softmax(model.logits());
  const auto inv = inverse_sigmas(model);
  const auto mu = model.means();

  LossGrad out;
  out.grad.assign(model.parameters().size(), 0.0);
  double* g_logit = out.grad.data();
  double* g_mu = g_logit + kc;
  double* g_ls = g_mu + kc * d;
  std::vector<double> terms(kc);
  std::vector<double> resp_sum(kc, 0.0);
  const double scale = 1.0 / static_cast<double>(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto x = batch.row(i);
    const double log_p = component_terms(model, log_w, inv, x, terms);
    out.loss -= log_p;
    for (std::size_t k = 0; k < kc; ++k) {
      // Responsibility gamma_k = w_k N_k(x) / p(x).
      const double gamma = std::exp(terms[k] - log_p);
      resp_sum[k] += gamma;
      for (std::size_t j = 0; j < d; ++j) {
        const double z = (x[j] - mu[k * d + j]) * inv[k * d + j];
        g_mu[k * d + j] -= gamma * z * inv[k * d + j];
        g_ls[k * d + j] -= gamma * (z * z - 1.0);
      }
    }
  }
  // d/da_j of -log sum_k softmax(a)_k N_k = w_j - gamma_j.
  for (std::size_t k = 0; k < kc; ++k)
    g_logit[k] = static_cast<double>(batch.size()) * std::exp(log_w[k]) -
                 resp_sum[k];
  out.loss *= scale;
  for (double& g : out.grad) g *= scale;
  return out;
}

MixtureDensityModel init(const Rows& data, const TrainConfig& cfg,
                         std::vector<std::string>* notes) {
  validate(cfg);
  const std::size_t n = data.size();
  const std::size_t d = data.dim;
  require(n > 0 && d > 0, ErrorKind::empty_input,
          "density estimator needs data");
  std::size_t kc = cfg.components;
  if (n < kc) {
    if (notes)
      notes->push_back("components reduced from " + std::to_string(kc) +
                       " to " + std::to_string(n) + " (n < Kc)");
    kc = n;
  }

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> centers;
  if (cfg.init == Init::random_subset) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t k = 0; k < kc; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, n - 1);
      std::swap(idx[k], idx[pick(rng)]);
      centers.push_back(idx[k]);
    }
  } else {
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centers.push_back(first(rng));
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    while (centers.size() < kc) {
      const auto c = data.row(centers.back());
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const auto x = data.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j < d; ++j) s += (x[j] - c[j]) * (x[j] - c[j]);
        dist[i] = std::min(dist[i], s);
        total += dist[i];
      }
      if (total <= 0.0) {
        // Fewer distinct points than components: reuse uniformly.
        centers.push_back(first(rng));
        continue;
      }
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      std::size_t chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        target -= dist[i];
        if (target <= 0.0 && dist[i] > 0.0) {
          chosen = i;
          break;
        }
      }
      centers.push_back(chosen);
    }
  }

  std::vector<double> mean(d, 0.0), var(d, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) mean[j] += data.row(i)[j];
  for (double& v : mean) v /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double e = data.row(i)[j] - mean[j];
      var[j] += e * e;
    }
  const double shrink =
      std::pow(static_cast<double>(kc), 1.0 / static_cast<double>(d));
  std::vector<double> means, log_sigmas;
  for (std::size_t k = 0; k < kc; ++k) {
    const auto c = data.row(centers[k]);
    means.insert(means.end(), c.begin(), c.end());
    for (std::size_t j = 0; j < d; ++j) {
      const double sd = std::sqrt(var[j] / static_cast<double>(n)) / shrink;
      log_sigmas.push_back(std::log(std::max(sd, kSigmaFloor)));
    }
  }
  return MixtureDensityModel(d, std::vector<double>(kc, 0.0), std::move(means),
                             std::move(log_sigmas));
}

TrainResult train(const Rows& data, const TrainConfig& cfg) {
  validate(cfg);
  std::vector<std::string> notes;
  TrainResult out{init(data, cfg, &notes), {}, std::move(notes)};
  auto& model = out.model;
  const std::size_t n = data.size();
  const std::size_t d = data.dim;
  const std::size_t batch = std::min(cfg.batch, n);
  const std::size_t steps_per_epoch = (n + batch - 1) / batch;

  out.loss_trace.push_back(model.mean_surprisal(data));
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> buffer;
  std::vector<double> params(model.parameters().begin(),
                             model.parameters().end());
  Adam opt(params.size());

  std::size_t cursor = n;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    if (cursor + batch > n) {
      std::shuffle(order.begin(), order.end(), rng);
      cursor = 0;
    }
    buffer.clear();
    for (std::size_t i = 0; i < batch; ++i) {
      const auto r = data.row(order[cursor + i]);
      buffer.insert(buffer.end(), r.begin(), r.end());
    }
    cursor += batch;

    const auto lg = loss_and_grad(model, Rows{buffer, d});
    if (!std::isfinite(lg.loss))
      throw TrainingDiverged(step, "density estimator loss is not finite");
    opt.step(params, lg.grad, cosine_lr(cfg.learning_rate, step, cfg.steps));
    model.set_parameters(params);
    std::copy(model.parameters().begin(), model.parameters().end(),
              params.begin());

    if ((step + 1) % steps_per_epoch == 0 || step + 1 == cfg.steps) {
      const double full = model.mean_surprisal(data);
      if (!std::isfinite(full))
        throw TrainingDiverged(step, "density estimator loss is not finite");
      out.loss_trace.push_back(full);
    }
  }
  return out;
}

nlohmann::json to_json(const MixtureDensityModel& m) {
  auto vec = [](std::span<const double> s) {
    return std::vector<double>(s.begin(), s.end());
  };
  return {{"Kc", m.components()},
          {"d", m.dim()},
          {"logits", vec(m.logits())},
          {"means", vec(m.means())},
          {"log_sigmas", vec(m.log_sigmas())}};
}

MixtureDensityModel density_from_json(const nlohmann::json& doc) {
  try {
    const auto kc = doc.at("Kc").get<std::size_t>();
    auto logits = doc.at("logits").get<std::vector<double>>();
    require(logits.size() == kc, ErrorKind::invalid_input,
            "logits must have Kc entries");
    return MixtureDensityModel(doc.at("d").get<std::size_t>(), std::move(logits),
                               doc.at("means").get<std::vector<double>>(),
                               doc.at("log_sigmas").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::invalid_input,
         std::string("malformed density checkpoint: ") + ex.what());
  }
}

}  // namespace lsmi::density
