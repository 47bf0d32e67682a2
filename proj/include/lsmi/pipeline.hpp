#pragma once

// End-to-end sample-wise interaction estimation: fit per-modality entropy
// estimators, obtain posteriors (learned or analytic), compute pointwise
// quantities for every sample, decompose and aggregate.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lsmi/dataset.hpp"
#include "lsmi/density_estimator.hpp"
#include "lsmi/discriminator.hpp"
#include "lsmi/gmm_analytics.hpp"
#include "lsmi/info_core.hpp"

namespace lsmi::pipeline {

enum class PosteriorSource { learned, analytic };

PosteriorSource parse_posterior_source(std::string_view name);
std::string_view posterior_source_name(PosteriorSource p) noexcept;

struct PipelineConfig {
  PosteriorSource posterior = PosteriorSource::learned;
  /// Applied to every modality unless overridden in `density_per_modality`.
  density::TrainConfig density;
  std::map<std::size_t, density::TrainConfig> density_per_modality;
  disc::ClassifierConfig discriminator;
  info::Units units = info::Units::nats;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  /// Required for analytic posteriors; falls back to the model recorded in
  /// the dataset provenance.
  std::optional<gmm::MogModel> model;
};

void validate(const PipelineConfig& cfg);

struct SampleRecord {
  std::int64_t id = 0;
  int y = 0;
  info::InteractionProfile profile;
  info::PointwiseInfo info;
};

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct RunReport {
  std::vector<SampleRecord> records;
  info::InteractionProfile average;
  std::map<int, info::InteractionProfile> per_class;
  nlohmann::json provenance = nlohmann::json::object();
  std::vector<StageTiming> timings;

  double total_seconds() const;
};

RunReport run_lsmi(const Dataset& ds, const PipelineConfig& cfg);

/// Runs every unordered modality pair (a < b, zero-based). Entropy
/// estimators and unimodal posteriors are fit once per modality.
std::map<std::pair<std::size_t, std::size_t>, RunReport> run_pairwise(
    const Dataset& ds, const PipelineConfig& cfg);

struct ComponentError {
  double mad = 0.0;
  double bias = 0.0;  ///< mean of (second - first)
  double max_abs = 0.0;
};

struct ErrorSummary {
  std::size_t n = 0;
  ComponentError r, u1, u2, s;
};

/// Records are matched by id; the id sets must coincide.
ErrorSummary compare_records(const std::vector<SampleRecord>& first,
                             const std::vector<SampleRecord>& second);

ErrorSummary compare_to_oracle(const RunReport& report,
                               const std::vector<SampleRecord>& oracle);

nlohmann::json to_json(const ErrorSummary& e);

struct BenchConfig {
  std::vector<int> class_counts{2, 101};
  std::size_t n = 20000;
  std::size_t d = 16;
  double rho = 0.5;
  std::uint64_t seed = 0;
  PipelineConfig pipeline;  ///< posterior source is forced to analytic
};

struct BenchRow {
  int classes = 0;
  std::string stage;
  double seconds = 0.0;
};

/// K-class benchmark model: uniform priors, identity covariances, means
/// 2 * (seeded unit vectors).
gmm::MogModel bench_model(int classes, std::size_t d, double rho,
                          std::uint64_t seed);

std::vector<BenchRow> benchmark(const BenchConfig& cfg);

}  // namespace lsmi::pipeline
