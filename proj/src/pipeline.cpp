#include "lsmi/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "lsmi/error.hpp"
#include "lsmi/synthgen.hpp"

namespace lsmi::pipeline {

namespace {

using Clock = std::chrono::steady_clock;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<double> gather(const Dataset& ds, std::size_t m,
                           std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * ds.dims[m]);
  for (std::size_t r : rows)
    out.insert(out.end(), ds.samples[r].x[m].begin(), ds.samples[r].x[m].end());
  return out;
}

std::vector<double> gather_pair(const Dataset& ds, std::size_t a, std::size_t b,
                                std::span<const std::size_t> rows) {
  std::vector<double> out;
  out.reserve(rows.size() * (ds.dims[a] + ds.dims[b]));
  for (std::size_t r : rows) {
    const auto& s = ds.samples[r];
    out.insert(out.end(), s.x[a].begin(), s.x[a].end());
    out.insert(out.end(), s.x[b].begin(), s.x[b].end());
  }
  return out;
}

std::vector<int> gather_labels(const Dataset& ds,
                               std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(ds.samples[r].y);
  return out;
}

nlohmann::json density_json(const density::TrainConfig& c) {
  return {{"components", c.components}, {"steps", c.steps},
          {"batch", c.batch},           {"learning_rate", c.learning_rate},
          {"seed", c.seed},             {"init", density::init_name(c.init)}};
}

nlohmann::json classifier_json(const disc::ClassifierConfig& c) {
  return {{"hidden", c.hidden},
          {"steps", c.steps},
          {"batch", c.batch},
          {"learning_rate", c.learning_rate},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed}};
}

/// Shared state for one dataset: split, prior, and lazily fit per-modality
/// models that are reused across pairs.
class Runner {
 public:
  Runner(const Dataset& ds, const PipelineConfig& cfg) : ds_(ds), cfg_(cfg) {
    validate(cfg);
    ds.validate();
    require(ds.modalities() >= 2, ErrorKind::invalid_input,
            "interaction estimation needs at least two modalities");
    if (cfg.posterior == PosteriorSource::analytic) {
      if (cfg.model) {
        model_ = cfg.model;
      } else {
        const auto& prov = ds.provenance;
        require(prov.contains("config") && prov["config"].contains("model"),
                ErrorKind::invalid_config,
                "analytic posteriors need a Gaussian-mixture model");
        model_ = gmm::mog_from_json(prov["config"]["model"]);
      }
      require(ds.modalities() == 2 && ds.dims[0] == model_->dim() &&
                  ds.dims[1] == model_->dim(),
              ErrorKind::invalid_input,
              "analytic posteriors need two modalities matching the model");
      require(static_cast<std::size_t>(ds.num_classes) ==
                  model_->num_classes(),
              ErrorKind::invalid_input,
              "dataset class count differs from the model");
    } else {
      require(ds.num_classes >= 2, ErrorKind::invalid_input,
              "learned posteriors need at least two classes");
    }

    std::vector<std::size_t> order(ds.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(cfg.seed, 1));
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::floor(cfg.train_fraction *
                                            static_cast<double>(ds.size()))),
        1, ds.size());
    train_.assign(order.begin(), order.begin() + n_train);
    holdout_.assign(order.begin() + n_train, order.end());
    std::sort(train_.begin(), train_.end());
    std::sort(holdout_.begin(), holdout_.end());

    const auto train_labels = gather_labels(ds, train_);
    prior_ = disc::class_prior(train_labels, ds.num_classes);
    if (model_) {
      // Posterior and prior must come from the same model for i = log
      // p(y|x) - log p(y) to be consistent.
      prior_.log_p.clear();
      prior_.h.clear();
      for (double p : model_->priors()) {
        prior_.log_p.push_back(std::log(p));
        prior_.h.push_back(-std::log(p));
      }
    }
    entropy_.resize(ds.modalities());
    surprisal_.resize(ds.modalities());
    unimodal_.resize(ds.modalities());
  }

  void fit_entropy(std::size_t m) {
    if (entropy_[m]) return;
    const auto t0 = Clock::now();
    auto tc = cfg_.density_per_modality.contains(m)
                  ? cfg_.density_per_modality.at(m)
                  : cfg_.density;
    tc.seed = mix_seed(cfg_.seed ^ tc.seed, 10 + m);
    const auto data = gather(ds_, m, train_);
    entropy_[m] = density::train(Rows{data, ds_.dims[m]}, tc);
    const auto all = ds_.modality_matrix(m);
    surprisal_[m] = entropy_[m]->model.surprisals(Rows{all, ds_.dims[m]});
    entropy_seconds_ += seconds_since(t0);
  }

  /// n x K clamped log posteriors for one modality (learned) or empty.
  const Eigen::MatrixXd& unimodal(std::size_t m) {
    if (unimodal_[m]) return *unimodal_[m];
    const auto t0 = Clock::now();
    if (model_) {
      unimodal_[m] = Eigen::MatrixXd();
    } else {
      auto cc = cfg_.discriminator;
      cc.seed = mix_seed(cfg_.seed ^ cc.seed, 100 + m);
      const auto xtr = gather(ds_, m, train_);
      const auto xho = gather(ds_, m, holdout_);
      const auto ytr = gather_labels(ds_, train_);
      const auto yho = gather_labels(ds_, holdout_);
      auto clf = disc::train(Rows{xtr, ds_.dims[m]}, ytr, ds_.num_classes, cc,
                             Rows{xho, ds_.dims[m]}, yho);
      record_classifier("x" + std::to_string(m + 1), clf);
      const auto all = ds_.modality_matrix(m);
      unimodal_[m] = clf.log_posteriors(Rows{all, ds_.dims[m]});
    }
    posterior_seconds_ += seconds_since(t0);
    return *unimodal_[m];
  }

  RunReport run_pair(std::size_t a, std::size_t b) {
    const double entropy_before = entropy_seconds_;
    const double posterior_before = posterior_seconds_;
    fit_entropy(a);
    fit_entropy(b);
    const auto& post_a = unimodal(a);
    const auto& post_b = unimodal(b);

    auto t0 = Clock::now();
    Eigen::MatrixXd post_ab;
    if (!model_) {
      auto cc = cfg_.discriminator;
      cc.seed = mix_seed(cfg_.seed ^ cc.seed, 200 + a * 64 + b);
      const std::size_t d = ds_.dims[a] + ds_.dims[b];
      const auto xtr = gather_pair(ds_, a, b, train_);
      const auto xho = gather_pair(ds_, a, b, holdout_);
      const auto ytr = gather_labels(ds_, train_);
      const auto yho = gather_labels(ds_, holdout_);
      auto clf = disc::train(Rows{xtr, d}, ytr, ds_.num_classes, cc,
                             Rows{xho, d}, yho);
      record_classifier(
          "x" + std::to_string(a + 1) + "x" + std::to_string(b + 1), clf);
      const auto all = ds_.concat_matrix(a, b);
      post_ab = clf.log_posteriors(Rows{all, d});
    }
    const double joint_seconds = seconds_since(t0);

    t0 = Clock::now();
    Eigen::MatrixXd exact_a, exact_b, exact_ab;
    if (model_) {
      const auto X1 = gmm::modality_columns(ds_, a);
      const auto X2 = gmm::modality_columns(ds_, b);
      exact_a = gmm::log_posteriors(*model_, &X1, nullptr);
      exact_b = gmm::log_posteriors(*model_, nullptr, &X2);
      exact_ab = gmm::log_posteriors(*model_, &X1, &X2);
    }
    const auto& lpa = model_ ? exact_a : post_a;
    const auto& lpb = model_ ? exact_b : post_b;
    const auto& lpab = model_ ? exact_ab : post_ab;
    RunReport report;
    report.records.reserve(ds_.size());
    for (std::size_t i = 0; i < ds_.size(); ++i) {
      const auto& s = ds_.samples[i];
      const auto y = static_cast<std::size_t>(s.y);
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(y);
      const double lp1 = lpa(r, c);
      const double lp2 = lpb(r, c);
      const double lp12 = lpab(r, c);
      SampleRecord rec;
      rec.id = s.id;
      rec.y = s.y;
      auto& p = rec.info;
      p.h_y = prior_.h[y];
      p.h1 = surprisal_[a][i];
      p.h2 = surprisal_[b][i];
      p.h1_given_y = info::conditional_surprisal(p.h1, p.h_y, lp1);
      p.h2_given_y = info::conditional_surprisal(p.h2, p.h_y, lp2);
      p.i1 = info::pmi_from_posterior(lp1, p.h_y);
      p.i2 = info::pmi_from_posterior(lp2, p.h_y);
      p.i12 = info::pmi_from_posterior(lp12, p.h_y);
      rec.profile = info::decompose(p);
      report.records.push_back(rec);
    }
    const double pointwise_seconds = seconds_since(t0);

    t0 = Clock::now();
    std::vector<info::InteractionProfile> profiles;
    std::vector<int> labels;
    profiles.reserve(report.records.size());
    labels.reserve(report.records.size());
    for (const auto& r : report.records) {
      profiles.push_back(r.profile);
      labels.push_back(r.y);
    }
    report.average = info::aggregate(profiles);
    report.per_class = info::aggregate_by_class(profiles, labels);
    const double aggregate_seconds = seconds_since(t0);

    report.timings = {
        {"entropy_training", entropy_seconds_ - entropy_before},
        {"posterior_fit",
         posterior_seconds_ - posterior_before + joint_seconds},
        {"pointwise", pointwise_seconds},
        {"aggregate", aggregate_seconds}};
    report.provenance = provenance(a, b);
    return report;
  }

 private:
  void record_classifier(const std::string& name,
                         const disc::SoftmaxClassifier& clf) {
    nlohmann::json j;
    if (clf.train_eval) j["train"] = disc::to_json(*clf.train_eval);
    if (clf.holdout_eval) j["holdout"] = disc::to_json(*clf.holdout_eval);
    classifiers_[name] = j;
  }

  nlohmann::json provenance(std::size_t a, std::size_t b) const {
    nlohmann::json entropy = nlohmann::json::object();
    for (std::size_t m : {a, b}) {
      const auto& tr = *entropy_[m];
      entropy["x" + std::to_string(m + 1)] = {
          {"initial_loss", tr.loss_trace.front()},
          {"final_loss", tr.loss_trace.back()},
          {"components", tr.model.components()},
          {"notes", tr.notes}};
    }
    nlohmann::json density_cfg = density_json(cfg_.density);
    nlohmann::json overrides = nlohmann::json::object();
    for (const auto& [m, c] : cfg_.density_per_modality)
      overrides["x" + std::to_string(m + 1)] = density_json(c);
    return {{"posterior_source", posterior_source_name(cfg_.posterior)},
            {"seed", cfg_.seed},
            {"train_fraction", cfg_.train_fraction},
            {"n_total", ds_.size()},
            {"n_train", train_.size()},
            {"modalities", {a + 1, b + 1}},
            {"density", density_cfg},
            {"density_overrides", overrides},
            {"discriminator", classifier_json(cfg_.discriminator)},
            {"entropy_estimators", entropy},
            {"classifiers", classifiers_},
            {"label_prior_h", prior_.h},
            {"dataset", ds_.provenance}};
  }

  const Dataset& ds_;
  const PipelineConfig& cfg_;
  std::optional<gmm::MogModel> model_;
  std::vector<std::size_t> train_, holdout_;
  disc::ClassPrior prior_;
  std::vector<std::optional<density::TrainResult>> entropy_;
  std::vector<std::vector<double>> surprisal_;
  std::vector<std::optional<Eigen::MatrixXd>> unimodal_;
  nlohmann::json classifiers_ = nlohmann::json::object();
  double entropy_seconds_ = 0.0;
  double posterior_seconds_ = 0.0;
};

void accumulate(ComponentError& e, double a, double b) {
  const double diff = b - a;
  e.mad += std::abs(diff);
  e.bias += diff;
  e.max_abs = std::max(e.max_abs, std::abs(diff));
}

}  // namespace

PosteriorSource parse_posterior_source(std::string_view name) {
  if (name == "learned") return PosteriorSource::learned;
  if (name == "analytic") return PosteriorSource::analytic;
  fail(ErrorKind::invalid_config,
       "posterior must be \"learned\" or \"analytic\"");
}

std::string_view posterior_source_name(PosteriorSource p) noexcept {
  return p == PosteriorSource::analytic ? "analytic" : "learned";
}

void validate(const PipelineConfig& cfg) {
  require(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0,
          ErrorKind::invalid_config, "train_fraction must lie in (0, 1)");
  density::validate(cfg.density);
  for (const auto& [m, c] : cfg.density_per_modality) density::validate(c);
  disc::validate(cfg.discriminator);
}

double RunReport::total_seconds() const {
  double t = 0.0;
  for (const auto& s : timings) t += s.seconds;
  return t;
}

RunReport run_lsmi(const Dataset& ds, const PipelineConfig& cfg) {
  Runner runner(ds, cfg);
  require(ds.modalities() == 2, ErrorKind::invalid_input,
          "run_lsmi expects a bimodal dataset; use run_pairwise for more");
  return runner.run_pair(0, 1);
}

std::map<std::pair<std::size_t, std::size_t>, RunReport> run_pairwise(
    const Dataset& ds, const PipelineConfig& cfg) {
  Runner runner(ds, cfg);
  std::map<std::pair<std::size_t, std::size_t>, RunReport> out;
  for (std::size_t a = 0; a < ds.modalities(); ++a)
    for (std::size_t b = a + 1; b < ds.modalities(); ++b)
      out.emplace(std::make_pair(a, b), runner.run_pair(a, b));
  return out;
}

ErrorSummary compare_records(const std::vector<SampleRecord>& first,
                             const std::vector<SampleRecord>& second) {
  require(first.size() == second.size(), ErrorKind::invalid_input,
          "record sets differ in size");
  require(!first.empty(), ErrorKind::empty_input, "no records to compare");
  std::unordered_map<std::int64_t, const SampleRecord*> by_id;
  for (const auto& r : second) by_id.emplace(r.id, &r);
  require(by_id.size() == second.size(), ErrorKind::invalid_input,
          "duplicate ids");
  ErrorSummary out;
  out.n = first.size();
  for (const auto& a : first) {
    const auto it = by_id.find(a.id);
    require(it != by_id.end(), ErrorKind::invalid_input,
            "id " + std::to_string(a.id) + " missing from second record set");
    const auto& b = it->second->profile;
    accumulate(out.r, a.profile.r, b.r);
    accumulate(out.u1, a.profile.u1, b.u1);
    accumulate(out.u2, a.profile.u2, b.u2);
    accumulate(out.s, a.profile.s, b.s);
  }
  const double n = static_cast<double>(out.n);
  for (auto* e : {&out.r, &out.u1, &out.u2, &out.s}) {
    e->mad /= n;
    e->bias /= n;
  }
  return out;
}

ErrorSummary compare_to_oracle(const RunReport& report,
                               const std::vector<SampleRecord>& oracle) {
  return compare_records(report.records, oracle);
}

nlohmann::json to_json(const ErrorSummary& e) {
  auto c = [](const ComponentError& x) {
    return nlohmann::json{{"mad", x.mad}, {"bias", x.bias},
                          {"max_abs", x.max_abs}};
  };
  return {{"schema", 1},
          {"n", e.n},
          {"components",
           {{"r", c(e.r)}, {"u1", c(e.u1)}, {"u2", c(e.u2)}, {"s", c(e.s)}}}};
}

gmm::MogModel bench_model(int classes, std::size_t d, double rho,
                          std::uint64_t seed) {
  require(classes >= 2, ErrorKind::invalid_config,
          "benchmark class counts must be at least 2");
  require(d > 0, ErrorKind::invalid_config, "benchmark d must be positive");
  std::mt19937_64 rng(mix_seed(seed, 7));
  std::normal_distribution<double> normal;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
  for (int k = 0; k < classes; ++k) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(d));
    for (auto& a : v) a = normal(rng);
    means.push_back(2.0 * v / v.norm());
    covs.push_back(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                             static_cast<Eigen::Index>(d)));
  }
  std::vector<double> priors(static_cast<std::size_t>(classes),
                             1.0 / static_cast<double>(classes));
  return gmm::MogModel(std::move(priors), std::move(means), std::move(covs),
                       rho);
}

std::vector<BenchRow> benchmark(const BenchConfig& cfg) {
  require(!cfg.class_counts.empty(), ErrorKind::invalid_config,
          "benchmark needs at least one class count");
  std::vector<BenchRow> rows;
  for (int k : cfg.class_counts) {
    auto model = bench_model(k, cfg.d, cfg.rho, cfg.seed);
    synth::MogConfig mc{model, cfg.n, cfg.seed};
    const auto ds = synth::gen_mog(mc);
    auto pc = cfg.pipeline;
    pc.posterior = PosteriorSource::analytic;
    pc.model = model;
    const auto report = run_lsmi(ds, pc);
    for (const auto& t : report.timings) rows.push_back({k, t.stage, t.seconds});
    rows.push_back({k, "total", report.total_seconds()});
  }
  return rows;
}

}  // namespace lsmi::pipeline
