#include "lsmi/synthgen.hpp"

#include <cmath>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "lsmi/error.hpp"

namespace lsmi::synth {

namespace {

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  return std::mt19937_64(seq);
}

constexpr std::array<const char*, 4> kTypeTags{"R", "U1", "U2", "S"};

/// Orthogonal d x d matrix from the QR factorization of a Gaussian draw,
/// with column signs fixed by diag(R) > 0.
Eigen::MatrixXd random_orthogonal(std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd g(d, d);
  for (std::size_t c = 0; c < d; ++c)
    for (std::size_t r = 0; r < d; ++r) g(r, c) = normal(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
  for (std::size_t c = 0; c < d; ++c)
    if (rmat(c, c) < 0.0) q.col(c) *= -1.0;
  return q;
}

}  // namespace

void validate(const LogicConfig& cfg) {
  require(cfg.n > 0, ErrorKind::invalid_config, "n must be positive");
  require(std::isfinite(cfg.noise_sigma) && cfg.noise_sigma > 0.0,
          ErrorKind::invalid_config, "noise_sigma must be positive");
}

void validate(const PresetConfig& cfg) {
  require(cfg.n > 0, ErrorKind::invalid_config, "n must be positive");
  require(cfg.noise_sigma > 0.0, ErrorKind::invalid_config,
          "noise_sigma must be positive");
  require(cfg.distractor_sigma > 0.0, ErrorKind::invalid_config,
          "distractor_sigma must be positive");
  require(cfg.d >= 8, ErrorKind::invalid_config,
          "d must be at least 8 (four types x two embedding columns)");
  double total = 0.0;
  for (double f : cfg.fractions) {
    require(std::isfinite(f) && f >= 0.0, ErrorKind::invalid_config,
            "fractions must be non-negative");
    total += f;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::invalid_config,
          "fractions must sum to 1");
}

Dataset gen_logic(const LogicConfig& cfg) {
  validate(cfg);
  auto rng = stream(cfg.seed, 0x10);
  std::bernoulli_distribution bit(0.5);
  std::normal_distribution<double> noise(0.0, cfg.noise_sigma);

  Dataset ds;
  ds.dims = {1, 1};
  ds.num_classes = 2;
  ds.samples.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int b1 = bit(rng);
    const int b2 = bit(rng);
    const int coin = cfg.gate == oracle::Gate::XOR_PLUS_NOT ? bit(rng) : 0;
    Sample s;
    s.id = static_cast<std::int64_t>(i);
    s.y = oracle::apply_gate(cfg.gate, b1, b2, coin);
    s.x = {{b1 + noise(rng)}, {b2 + noise(rng)}};
    if (cfg.gate == oracle::Gate::XOR_PLUS_NOT) s.tag = coin ? "NOT" : "XOR";
    ds.samples.push_back(std::move(s));
  }
  ds.provenance = {{"generator", "logic"},
                   {"seed", cfg.seed},
                   {"config",
                    {{"gate", oracle::gate_name(cfg.gate)},
                     {"n", cfg.n},
                     {"noise_sigma", cfg.noise_sigma}}}};
  return ds;
}

Dataset gen_mog(const MogConfig& cfg) {
  require(cfg.n > 0, ErrorKind::invalid_config, "n must be positive");
  const auto& m = cfg.model;
  const double rho = m.rho();
  const double ortho = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  auto rng = stream(cfg.seed, 0x20);
  std::discrete_distribution<int> pick(m.priors().begin(), m.priors().end());
  std::normal_distribution<double> normal;
  const auto d = static_cast<Eigen::Index>(m.dim());
  Eigen::VectorXd z1(d), z2(d);

  Dataset ds;
  ds.dims = {m.dim(), m.dim()};
  ds.num_classes = static_cast<int>(m.num_classes());
  ds.samples.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int y = pick(rng);
    for (auto& v : z1) v = normal(rng);
    for (auto& v : z2) v = normal(rng);
    const auto& l = m.cholesky(static_cast<std::size_t>(y));
    const auto& mu = m.mean(static_cast<std::size_t>(y));
    const Eigen::VectorXd x1 = mu + l * z1;
    // |rho| = 1 reduces to x2 = mu +- (x1 - mu) exactly.
    const Eigen::VectorXd x2 = mu + l * (rho * z1 + ortho * z2);
    Sample s;
    s.id = static_cast<std::int64_t>(i);
    s.y = y;
    s.x = {std::vector<double>(x1.begin(), x1.end()),
           std::vector<double>(x2.begin(), x2.end())};
    ds.samples.push_back(std::move(s));
  }
  ds.provenance = {{"generator", "mog"},
                   {"seed", cfg.seed},
                   {"config", {{"model", gmm::to_json(m)}, {"n", cfg.n}}}};
  return ds;
}

Dataset gen_preset(const PresetConfig& cfg) {
  validate(cfg);
  auto embed_rng = stream(cfg.seed, 0x31);
  const Eigen::MatrixXd q1 = random_orthogonal(cfg.d, embed_rng);
  const Eigen::MatrixXd q2 = random_orthogonal(cfg.d, embed_rng);

  auto rng = stream(cfg.seed, 0x30);
  std::discrete_distribution<int> pick_type(cfg.fractions.begin(),
                                            cfg.fractions.end());
  std::bernoulli_distribution bit(0.5);
  std::normal_distribution<double> normal;

  const auto d = static_cast<Eigen::Index>(cfg.d);
  auto informative = [&](const Eigen::MatrixXd& q, int type, int code) {
    Eigen::VectorXd v = q.col(2 * type + code);
    for (Eigen::Index j = 0; j < d; ++j) v(j) += cfg.noise_sigma * normal(rng);
    return std::vector<double>(v.begin(), v.end());
  };
  auto distractor = [&]() {
    std::vector<double> v(cfg.d);
    for (auto& a : v) a = cfg.distractor_sigma * normal(rng);
    return v;
  };

  Dataset ds;
  ds.dims = {cfg.d, cfg.d};
  ds.num_classes = 2;
  ds.samples.reserve(cfg.n);
  for (std::size_t i = 0; i < cfg.n; ++i) {
    const int type = pick_type(rng);
    const int y = bit(rng);
    Sample s;
    s.id = static_cast<std::int64_t>(i);
    s.y = y;
    s.tag = kTypeTags[type];
    switch (static_cast<PresetType>(type)) {
      case PresetType::R:
        s.x = {informative(q1, type, y), informative(q2, type, y)};
        break;
      case PresetType::U1:
        s.x = {informative(q1, type, y), distractor()};
        break;
      case PresetType::U2:
        s.x = {distractor(), informative(q2, type, y)};
        break;
      case PresetType::S: {
        const int b1 = bit(rng);
        const int b2 = b1 ^ y;
        s.x = {informative(q1, type, b1), informative(q2, type, b2)};
        break;
      }
    }
    ds.samples.push_back(std::move(s));
  }
  ds.provenance = {{"generator", "preset"},
                   {"seed", cfg.seed},
                   {"config",
                    {{"fractions", cfg.fractions},
                     {"d", cfg.d},
                     {"noise_sigma", cfg.noise_sigma},
                     {"distractor_sigma", cfg.distractor_sigma},
                     {"n", cfg.n}}}};
  return ds;
}

Dataset corrupt_labels(const Dataset& ds, double p_flip, std::uint64_t seed) {
  require(p_flip >= 0.0 && p_flip <= 1.0, ErrorKind::invalid_config,
          "p_flip must lie in [0, 1]");
  require(ds.num_classes >= 2, ErrorKind::invalid_config,
          "label corruption needs at least two classes");
  auto rng = stream(seed, 0x40);
  std::bernoulli_distribution flip(p_flip);
  std::uniform_int_distribution<int> other(0, ds.num_classes - 2);
  Dataset out = ds;
  std::size_t flipped = 0;
  for (auto& s : out.samples) {
    if (!flip(rng)) continue;
    int k = other(rng);
    if (k >= s.y) ++k;
    s.y = k;
    ++flipped;
  }
  auto& steps = out.provenance["corruption"];
  if (!steps.is_array()) steps = nlohmann::json::array();
  steps.push_back({{"p_flip", p_flip}, {"seed", seed}, {"flipped", flipped}});
  return out;
}

Dataset append_copy_modality(const Dataset& ds, std::size_t source) {
  require(source < ds.modalities(), ErrorKind::invalid_input,
          "copy source modality out of range");
  Dataset out = ds;
  out.dims.push_back(ds.dims[source]);
  for (auto& s : out.samples) s.x.push_back(s.x[source]);
  auto& extra = out.provenance["extra_modalities"];
  if (!extra.is_array()) extra = nlohmann::json::array();
  extra.push_back({{"copy", source}});
  return out;
}

Dataset append_noise_modality(const Dataset& ds, std::size_t d, double sigma,
                              std::uint64_t seed) {
  require(d > 0 && sigma > 0.0, ErrorKind::invalid_config,
          "noise modality needs positive d and sigma");
  auto rng = stream(seed, 0x50);
  std::normal_distribution<double> normal(0.0, sigma);
  Dataset out = ds;
  out.dims.push_back(d);
  for (auto& s : out.samples) {
    std::vector<double> v(d);
    for (auto& a : v) a = normal(rng);
    s.x.push_back(std::move(v));
  }
  auto& extra = out.provenance["extra_modalities"];
  if (!extra.is_array()) extra = nlohmann::json::array();
  extra.push_back({{"noise", {{"d", d}, {"sigma", sigma}, {"seed", seed}}}});
  return out;
}

oracle::Event round_to_event(const Sample& s) {
  require(s.x.size() >= 2 && s.x[0].size() == 1 && s.x[1].size() == 1,
          ErrorKind::invalid_input, "rounding needs two 1-D modalities");
  auto to_bit = [](double v) -> std::size_t { return v >= 0.5 ? 1 : 0; };
  return {to_bit(s.x[0][0]), to_bit(s.x[1][0]), static_cast<std::size_t>(s.y)};
}

}  // namespace lsmi::synth
