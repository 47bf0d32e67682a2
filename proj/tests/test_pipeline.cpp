#include <cmath>
#include <vector>

#include "doctest.h"
#include "lsmi/discrete_oracle.hpp"
#include "lsmi/error.hpp"
#include "lsmi/gmm_analytics.hpp"
#include "lsmi/pipeline.hpp"
#include "lsmi/synthgen.hpp"

using namespace lsmi;
using namespace lsmi::pipeline;

namespace {

const double ln2 = std::log(2.0);

void check_sum_identity(const RunReport& rep) {
  for (const auto& r : rep.records)
    REQUIRE(std::abs(r.profile.total() - r.info.i12) <= 1e-9);
}

std::vector<SampleRecord> rounded_oracle(const Dataset& ds, oracle::Gate g) {
  const auto joint = oracle::logic_gate_joint(g);
  std::vector<SampleRecord> out;
  for (const auto& s : ds.samples) {
    const auto info = oracle::pointwise_info(joint, synth::round_to_event(s));
    out.push_back({s.id, s.y, info::decompose(info), info});
  }
  return out;
}

double mean_of(const RunReport& rep, double info::PointwiseInfo::*field) {
  double m = 0;
  for (const auto& r : rep.records) m += r.info.*field;
  return m / static_cast<double>(rep.records.size());
}

}  // namespace

TEST_CASE("noisy XOR with learned posteriors") {
  const auto ds = synth::gen_logic({oracle::Gate::XOR, 20000, 0.1, 7});
  PipelineConfig cfg;
  cfg.seed = 1;
  const auto rep = run_lsmi(ds, cfg);
  check_sum_identity(rep);
  CHECK(std::abs(rep.average.r) <= 0.05);
  CHECK(std::abs(rep.average.u1) <= 0.05);
  CHECK(std::abs(rep.average.u2) <= 0.05);
  CHECK(std::abs(rep.average.s - ln2) <= 0.05);
  CHECK(rep.per_class.size() == 2);
  CHECK(rep.provenance["posterior_source"] == "learned");
  CHECK(rep.timings.size() == 4);

  const auto err = compare_to_oracle(rep, rounded_oracle(ds, oracle::Gate::XOR));
  CHECK(err.r.mad <= 0.05);
  CHECK(err.u1.mad <= 0.05);
  CHECK(err.u2.mad <= 0.05);
  CHECK(err.s.mad <= 0.05);

  const auto again = run_lsmi(ds, cfg);
  REQUIRE(again.records.size() == rep.records.size());
  for (std::size_t i = 0; i < rep.records.size(); ++i)
    CHECK(again.records[i].profile == rep.records[i].profile);
  CHECK(again.provenance == rep.provenance);
}

TEST_CASE("analytic posteriors isolate the entropy estimator") {
  const auto model = gmm::symmetric_two_class(
      Eigen::VectorXd::Ones(2), Eigen::MatrixXd::Identity(2, 2), 0.4);
  const auto ds = synth::gen_mog({model, 20000, 3});
  PipelineConfig cfg;
  cfg.posterior = PosteriorSource::analytic;
  cfg.seed = 2;
  const auto rep = run_lsmi(ds, cfg);
  check_sum_identity(rep);
  const auto exact = gmm::analytic_lsmi(model, ds);
  double mad = 0.0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    mad += std::abs(rep.records[i].profile.r - exact.profiles[i].r);
  CHECK(mad / static_cast<double>(ds.size()) <= 0.05);
  // Posterior-only terms are exact.
  for (std::size_t i = 0; i < ds.size(); i += 97)
    CHECK(rep.records[i].info.i12 ==
          doctest::Approx(exact.pointwise[i].i12).epsilon(1e-9));
  CHECK(rep.provenance["posterior_source"] == "analytic");
}

TEST_CASE("analytic posteriors need a model") {
  const auto ds = synth::gen_logic({oracle::Gate::XOR, 100, 0.1, 7});
  PipelineConfig cfg;
  cfg.posterior = PosteriorSource::analytic;
  try {
    run_lsmi(ds, cfg);
    FAIL("expected a configuration error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::invalid_config);
  }
}

TEST_CASE("duplicated modality") {
  auto ds = synth::gen_logic({oracle::Gate::OR, 20000, 0.1, 9});
  for (auto& s : ds.samples) s.x[1] = s.x[0];
  PipelineConfig cfg;
  cfg.seed = 4;
  const auto rep = run_lsmi(ds, cfg);
  check_sum_identity(rep);
  CHECK(std::abs(rep.average.u1) <= 0.03);
  CHECK(std::abs(rep.average.u2) <= 0.03);
  CHECK(std::abs(rep.average.s) <= 0.03);
}

TEST_CASE("pairwise runs") {
  const auto base = synth::gen_logic({oracle::Gate::XOR, 8000, 0.1, 11});
  PipelineConfig cfg;
  cfg.seed = 5;
  cfg.density.steps = 800;
  cfg.discriminator.steps = 1500;

  SUBCASE("two modalities reproduce run_lsmi") {
    const auto all = run_pairwise(base, cfg);
    REQUIRE(all.size() == 1);
    const auto single = run_lsmi(base, cfg);
    const auto& pair = all.at({0, 1});
    for (std::size_t i = 0; i < single.records.size(); ++i)
      CHECK(pair.records[i].profile == single.records[i].profile);
  }
  SUBCASE("copied third modality") {
    const auto ds = synth::append_copy_modality(base, 0);
    const auto all = run_pairwise(ds, cfg);
    REQUIRE(all.size() == 3);
    const auto& p13 = all.at({0, 2});
    check_sum_identity(p13);
    CHECK(std::abs(p13.average.u1) <= 0.03);
    CHECK(std::abs(p13.average.u2) <= 0.03);
    CHECK(std::abs(p13.average.s) <= 0.03);
  }
  SUBCASE("noise third modality") {
    const auto ds = synth::append_noise_modality(base, 1, 1.0, 3);
    const auto all = run_pairwise(ds, cfg);
    const auto& p13 = all.at({0, 2});
    CHECK(std::abs(mean_of(p13, &info::PointwiseInfo::i2)) <= 0.03);
    // Modality 1 statistics are shared across pairs.
    const auto& p12 = all.at({0, 1});
    for (std::size_t i = 0; i < ds.size(); i += 53) {
      CHECK(p12.records[i].info.h1 == p13.records[i].info.h1);
      CHECK(p12.records[i].info.i1 == p13.records[i].info.i1);
    }
  }
}

TEST_CASE("compare_records") {
  std::vector<SampleRecord> a;
  for (int i = 0; i < 10; ++i)
    a.push_back({i, i % 2, {0.1 * i, -0.2, 0.3, 0.05 * i}, {}});
  const auto zero = compare_records(a, a);
  CHECK(zero.n == 10);
  CHECK(zero.r.mad == 0.0);
  CHECK(zero.s.max_abs == 0.0);

  auto b = a;
  std::reverse(b.begin(), b.end());
  for (auto& r : b) r.profile.r += 0.25;
  const auto shifted = compare_records(a, b);
  CHECK(shifted.r.mad == doctest::Approx(0.25));
  CHECK(shifted.r.bias == doctest::Approx(0.25));
  CHECK(shifted.r.max_abs == doctest::Approx(0.25));
  CHECK(shifted.u1.mad == 0.0);
  CHECK(to_json(shifted)["components"]["r"]["bias"] == doctest::Approx(0.25));

  b[0].id = 99;
  CHECK_THROWS_AS(compare_records(a, b), Error);
  b.pop_back();
  CHECK_THROWS_AS(compare_records(a, b), Error);
}

TEST_CASE("benchmark rows") {
  BenchConfig cfg;
  cfg.n = 2000;
  cfg.d = 4;
  cfg.pipeline.density.steps = 100;
  const auto rows = benchmark(cfg);
  CHECK(rows.size() == 10);
  int twos = 0;
  for (const auto& r : rows) {
    twos += r.classes == 2;
    CHECK(r.seconds >= 0.0);
  }
  CHECK(twos == 5);
  const auto m = bench_model(101, 16, 0.5, 0);
  CHECK(m.num_classes() == 101);
  CHECK(m.mean(7).norm() == doctest::Approx(2.0));
  CHECK_THROWS_AS(bench_model(1, 16, 0.5, 0), Error);
}

TEST_CASE("configuration validation") {
  PipelineConfig cfg;
  cfg.train_fraction = 1.0;
  CHECK_THROWS_AS(validate(cfg), Error);
  CHECK(parse_posterior_source("analytic") == PosteriorSource::analytic);
  CHECK_THROWS_AS(parse_posterior_source("oracle"), Error);

  const auto ds = synth::gen_logic({oracle::Gate::XOR, 100, 0.1, 7});
  auto one = ds;
  one.dims.pop_back();
  for (auto& s : one.samples) s.x.pop_back();
  CHECK_THROWS_AS(run_lsmi(one, PipelineConfig{}), Error);
}
