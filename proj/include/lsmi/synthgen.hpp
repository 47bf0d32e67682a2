#pragma once

// Seeded generators for the three synthetic benchmark families and label
// corruption. Identical config + seed gives identical output.

#include <array>
#include <cstdint>

#include "lsmi/dataset.hpp"
#include "lsmi/discrete_oracle.hpp"
#include "lsmi/gmm_analytics.hpp"

namespace lsmi::synth {

struct LogicConfig {
  oracle::Gate gate = oracle::Gate::XOR;
  std::size_t n = 20000;
  double noise_sigma = 0.1;
  std::uint64_t seed = 0;
};

struct MogConfig {
  gmm::MogModel model;
  std::size_t n = 20000;
  std::uint64_t seed = 0;
};

/// Interaction types of the preset family, in fraction order.
enum class PresetType { R = 0, U1 = 1, U2 = 2, S = 3 };

struct PresetConfig {
  std::array<double, 4> fractions{1.0, 0.0, 0.0, 0.0};  ///< R, U1, U2, S
  std::size_t d = 8;
  double noise_sigma = 0.1;
  /// Scale of the pure-noise modality in U-type samples.
  double distractor_sigma = 0.02;
  std::size_t n = 20000;
  std::uint64_t seed = 0;
};

void validate(const LogicConfig& cfg);
void validate(const PresetConfig& cfg);

/// 1-D modalities x_m = bit_m + N(0, sigma^2). Samples of XOR_PLUS_NOT are
/// tagged with the latent gate ("XOR" or "NOT").
Dataset gen_logic(const LogicConfig& cfg);

/// Class y ~ pi; (x1, x2) jointly normal with shared mean and covariance
/// and cross-covariance rho * Sigma_y. x1 draws do not depend on rho.
Dataset gen_mog(const MogConfig& cfg);

/// Each sample carries one interaction type (tag "R", "U1", "U2" or "S").
/// Type t embeds through columns (2t, 2t+1) of a seeded orthogonal d x d
/// map per modality, so types occupy orthogonal subspaces.
Dataset gen_preset(const PresetConfig& cfg);

/// Each label is replaced, with probability `p_flip`, by a uniformly drawn
/// different class.
Dataset corrupt_labels(const Dataset& ds, double p_flip, std::uint64_t seed);

/// Appends a copy of modality `source` as a new modality.
Dataset append_copy_modality(const Dataset& ds, std::size_t source);

/// Appends an independent N(0, sigma^2 I_d) modality.
Dataset append_noise_modality(const Dataset& ds, std::size_t d, double sigma,
                              std::uint64_t seed);

/// Round each 1-D modality to the nearest bit (clamped to {0, 1}) and map the
/// sample onto a discrete event.
oracle::Event round_to_event(const Sample& s);

}  // namespace lsmi::synth
