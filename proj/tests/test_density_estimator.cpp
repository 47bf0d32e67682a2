#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "lsmi/density_estimator.hpp"
#include "lsmi/error.hpp"

using namespace lsmi;
using namespace lsmi::density;

namespace {

const double half_log_2pie = 0.5 * std::log(2.0 * M_PI * M_E);

std::vector<double> gaussian(std::size_t n, std::size_t d, std::uint64_t seed,
                             double shift = 0.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> out(n * d);
  for (auto& v : out) v = z(rng) + shift;
  return out;
}

MixtureDensityModel random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> kc(1, 5), dd(1, 4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const std::size_t k = kc(rng), d = dd(rng);
  std::vector<double> logits(k), means(k * d), ls(k * d);
  for (auto& v : logits) v = u(rng);
  for (auto& v : means) v = 2.0 * u(rng);
  for (auto& v : ls) v = 0.7 * u(rng);
  return MixtureDensityModel(d, logits, means, ls);
}

double std_error(const std::vector<double>& v) {
  double m = 0, s = 0;
  for (double a : v) m += a;
  m /= static_cast<double>(v.size());
  for (double a : v) s += (a - m) * (a - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) /
                   static_cast<double>(v.size()));
}

}  // namespace

TEST_CASE("surprisal reference values") {
  const MixtureDensityModel unit(1, {0.0}, {0.0}, {0.0});
  const std::vector<double> zero{0.0};
  CHECK(unit.surprisal(zero) == doctest::Approx(0.9189385332).epsilon(1e-10));

  const std::vector<double> far{20.0};
  const double tail = unit.surprisal(far);
  CHECK(std::isfinite(tail));
  CHECK(tail > 100.0);
  const std::vector<double> very_far{1e8};
  CHECK(std::isfinite(unit.surprisal(very_far)));

  // A component with vanishing weight does not change the density.
  const MixtureDensityModel two(1, {0.0, -800.0}, {0.0, 5.0}, {0.0, 0.0});
  const std::vector<double> x{0.3};
  CHECK(two.surprisal(x) == doctest::Approx(unit.surprisal(x)).epsilon(1e-12));
  CHECK(two.weights()[1] < 1e-300);
}

TEST_CASE("log-sigma floor") {
  MixtureDensityModel m(1, {0.0}, {0.0}, {-50.0});
  CHECK(m.log_sigmas()[0] == doctest::Approx(std::log(kSigmaFloor)));
  std::vector<double> p(m.parameters().begin(), m.parameters().end());
  p[2] = -20.0;
  m.set_parameters(p);
  CHECK(m.log_sigmas()[0] == doctest::Approx(std::log(kSigmaFloor)));
  CHECK_THROWS_AS(m.set_parameters(std::vector<double>(2, 0.0)), Error);
}

TEST_CASE("loss_and_grad basics") {
  const MixtureDensityModel m(2, {0.0}, {0.5, -1.0}, {0.2, -0.3});
  const std::vector<double> at_mean{0.5, -1.0, 0.5, -1.0};
  const auto g = loss_and_grad(m, Rows{at_mean, 2});
  CHECK(g.grad[1] == doctest::Approx(0.0));
  CHECK(g.grad[2] == doctest::Approx(0.0));

  const auto data = gaussian(7, 2, 3);
  std::vector<double> doubled = data;
  doubled.insert(doubled.end(), data.begin(), data.end());
  const auto a = loss_and_grad(m, Rows{data, 2});
  const auto b = loss_and_grad(m, Rows{doubled, 2});
  CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < a.grad.size(); ++i)
    CHECK(a.grad[i] == doctest::Approx(b.grad[i]).epsilon(1e-12));
}

TEST_CASE("property: gradient matches central differences") {
  std::mt19937_64 rng(101);
  const double h = 1e-5;
  for (int trial = 0; trial < 100; ++trial) {
    auto m = random_model(rng);
    std::uniform_int_distribution<std::size_t> nb(1, 20);
    const auto batch = gaussian(nb(rng), m.dim(), rng(), 0.5);
    const Rows rows{batch, m.dim()};
    const auto g = loss_and_grad(m, rows);
    std::vector<double> p(m.parameters().begin(), m.parameters().end());
    for (std::size_t i = 0; i < p.size(); ++i) {
      auto q = p;
      q[i] = p[i] + h;
      m.set_parameters(q);
      const double up = loss_and_grad(m, rows).loss;
      q[i] = p[i] - h;
      m.set_parameters(q);
      const double down = loss_and_grad(m, rows).loss;
      m.set_parameters(p);
      const double fd = (up - down) / (2 * h);
      const double scale = std::max({std::abs(fd), std::abs(g.grad[i]), 1e-5});
      CHECK(std::abs(fd - g.grad[i]) <= 1e-4 * scale);
    }
  }
}

TEST_CASE("init") {
  const std::vector<double> one{2.5, -1.0};
  TrainConfig cfg;
  cfg.components = 1;
  const auto m = init(Rows{one, 2}, cfg);
  CHECK(m.means()[0] == 2.5);
  CHECK(m.means()[1] == -1.0);
  CHECK(m.weights()[0] == 1.0);

  cfg.components = 4;
  std::vector<std::string> notes;
  const auto reduced = init(Rows{one, 2}, cfg, &notes);
  CHECK(reduced.components() == 1);
  CHECK(notes.size() == 1);

  auto data = gaussian(200, 2, 5);
  for (std::size_t i = 0; i < 100; ++i) {
    data[2 * i] = data[2 * i] * 0.1 + 10.0;
    data[2 * i + 1] = data[2 * i + 1] * 0.1 + 10.0;
  }
  for (std::size_t i = 100; i < 200; ++i) {
    data[2 * i] = data[2 * i] * 0.1 - 10.0;
    data[2 * i + 1] = data[2 * i + 1] * 0.1 - 10.0;
  }
  cfg.components = 2;
  cfg.seed = 9;
  const auto two = init(Rows{data, 2}, cfg);
  const auto again = init(Rows{data, 2}, cfg);
  CHECK(std::vector<double>(two.parameters().begin(), two.parameters().end()) ==
        std::vector<double>(again.parameters().begin(), again.parameters().end()));
  const bool first_high = two.means()[0] > 0;
  CHECK((two.means()[0] > 9 && two.means()[0] < 11) == first_high);
  CHECK((two.means()[2] < -9 && two.means()[2] > -11) == first_high);
  CHECK(std::signbit(two.means()[0]) != std::signbit(two.means()[2]));

  CHECK_THROWS_AS(init(Rows{std::vector<double>{}, 2}, cfg), Error);
}

TEST_CASE("training on a 1-D standard normal") {
  const auto data = gaussian(10000, 1, 42);
  TrainConfig cfg;
  cfg.components = 8;
  cfg.seed = 1;
  const auto res = train(Rows{data, 1}, cfg);
  const double h = res.model.mean_surprisal(Rows{data, 1});
  CHECK(h >= half_log_2pie - 0.01);
  CHECK(h <= 1.47);
  CHECK(res.loss_trace.back() <= res.loss_trace.front());
  CHECK(res.loss_trace.back() == doctest::Approx(h));

  const auto again = train(Rows{data, 1}, cfg);
  CHECK(again.loss_trace == res.loss_trace);

  // The fitted density integrates to one.
  double mass = 0.0;
  const double step = 1e-3;
  for (double x = -15.0; x <= 15.0; x += step) {
    const std::vector<double> v{x};
    mass += std::exp(-res.model.surprisal(v)) * step;
  }
  CHECK(std::abs(mass - 1.0) <= 1e-3);
}

TEST_CASE("property: held-out surprisal upper-bounds the entropy") {
  struct Target {
    double shift;
    double truth;
  };
  for (std::uint64_t seed : {3u, 4u}) {
    for (const auto& t : {Target{0.0, half_log_2pie},
                          Target{10.0, half_log_2pie + std::log(2.0)}}) {
      auto train_data = gaussian(4000, 1, seed);
      auto test_data = gaussian(4000, 1, seed + 100);
      if (t.shift > 0) {
        for (std::size_t i = 0; i < train_data.size(); ++i)
          train_data[i] += i % 2 ? t.shift : -t.shift;
        for (std::size_t i = 0; i < test_data.size(); ++i)
          test_data[i] += i % 2 ? t.shift : -t.shift;
      }
      TrainConfig cfg;
      cfg.components = 4;
      cfg.steps = 600;
      cfg.seed = seed;
      const auto res = train(Rows{train_data, 1}, cfg);
      const auto s = res.model.surprisals(Rows{test_data, 1});
      double mean = 0;
      for (double v : s) mean += v;
      mean /= static_cast<double>(s.size());
      CHECK(mean >= t.truth - 3.0 * std_error(s));
      CHECK(res.loss_trace.back() <= res.loss_trace.front());
    }
  }
}

TEST_CASE("configuration and serialization") {
  TrainConfig cfg;
  cfg.components = 0;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = TrainConfig{};
  cfg.learning_rate = -1;
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK(parse_init("kmeans") == Init::kmeans);
  CHECK_THROWS_AS(parse_init("spectral"), Error);

  std::mt19937_64 rng(8);
  const auto m = random_model(rng);
  const auto back = density_from_json(to_json(m));
  CHECK(std::vector<double>(back.parameters().begin(), back.parameters().end()) ==
        std::vector<double>(m.parameters().begin(), m.parameters().end()));
}

TEST_CASE("divergence is reported") {
  const auto data = gaussian(100, 1, 2);
  TrainConfig cfg;
  cfg.components = 2;
  cfg.steps = 50;
  cfg.learning_rate = 1e300;
  CHECK_THROWS_AS(train(Rows{data, 1}, cfg), TrainingDiverged);
}
