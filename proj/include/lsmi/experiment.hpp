#pragma once

// Experiment documents: one JSON object per run, strictly parsed (unknown
// keys are rejected), plus the command runners shared by the C API and CLI.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lsmi/dataset.hpp"
#include "lsmi/discrete_oracle.hpp"
#include "lsmi/gmm_analytics.hpp"
#include "lsmi/info_core.hpp"
#include "lsmi/pipeline.hpp"
#include "lsmi/synthgen.hpp"

namespace lsmi::experiment {

struct Corruption {
  double p_flip = 0.0;
};

struct ExtraModality {
  enum class Kind { copy, noise } kind = Kind::copy;
  std::size_t source = 1;  ///< one-based modality index for copies
  std::size_t d = 1;
  double sigma = 1.0;
};

struct GenSpec {
  std::variant<synth::LogicConfig, synth::MogConfig, synth::PresetConfig> base;
  std::optional<Corruption> corrupt;
  std::vector<ExtraModality> extra_modalities;
};

/// Exactly one of gate, joint or model is set.
struct OracleSpec {
  std::optional<oracle::Gate> gate;
  std::optional<oracle::TabularJoint> joint;
  std::optional<gmm::MogModel> model;
  std::size_t n = 20000;  ///< model samples drawn when no dataset is given
};

struct CompareSpec {
  std::filesystem::path a, b;
};

struct ExperimentConfig {
  std::uint64_t seed = 0;
  info::Units units = info::Units::nats;
  std::filesystem::path out;
  std::optional<std::filesystem::path> dataset;
  std::optional<GenSpec> gen;
  pipeline::PipelineConfig pipeline;
  std::optional<OracleSpec> oracle;
  std::optional<CompareSpec> compare;
  std::optional<pipeline::BenchConfig> bench;
  nlohmann::json source = nlohmann::json::object();
};

/// Command-line values that replace document values when present.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<info::Units> units;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> a, b;
};

/// Relative paths resolve against `base_dir`. Referenced input files must
/// exist (missing files raise an io error).
ExperimentConfig parse_experiment(const nlohmann::json& doc,
                                  const std::filesystem::path& base_dir = {},
                                  const Overrides& overrides = {});

ExperimentConfig load_experiment(const std::filesystem::path& path,
                                 const Overrides& overrides = {});

GenSpec parse_gen(const nlohmann::json& doc);
pipeline::PipelineConfig parse_pipeline(const nlohmann::json& doc);
OracleSpec parse_oracle(const nlohmann::json& doc);
pipeline::BenchConfig parse_bench(const nlohmann::json& doc);

Dataset generate(const GenSpec& spec, std::uint64_t seed);

/// Gate/joint without a dataset: one record per support event (id = event
/// index, probability-weighted average). With a dataset: each sample is
/// rounded to its event. Model: analytic profiles over the dataset or over
/// `n` seeded model draws.
pipeline::RunReport run_oracle(const OracleSpec& spec, const Dataset* ds,
                               std::uint64_t seed);

pipeline::ErrorSummary compare_csv(const std::filesystem::path& a,
                                   const std::filesystem::path& b,
                                   info::Units units);

std::string error_table(const pipeline::ErrorSummary& e, info::Units units);

std::string bench_csv(const std::vector<pipeline::BenchRow>& rows);

/// Ratio of total time between the largest and smallest class count.
double bench_ratio(const std::vector<pipeline::BenchRow>& rows);

}  // namespace lsmi::experiment
