#pragma once

// Exact enumeration over small discrete joints p(x1, x2, y). Serves as the
// brute-force reference for every estimator in the library.

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lsmi/info_core.hpp"

namespace lsmi::oracle {

inline constexpr std::size_t kMaxSupport = 64;

struct Event {
  std::size_t a1 = 0;
  std::size_t a2 = 0;
  std::size_t y = 0;
  friend bool operator==(const Event&, const Event&) = default;
};

/// Dense table over (x1, x2, y), row-major with y fastest. Immutable once
/// built; marginals are recomputed from the table on every query.
class TabularJoint {
 public:
  /// Normalizes nothing: `prob` must already sum to one (within 1e-12).
  TabularJoint(std::size_t n1, std::size_t n2, std::size_t ny,
               std::vector<double> prob);

  std::size_t n1() const noexcept { return n1_; }
  std::size_t n2() const noexcept { return n2_; }
  std::size_t ny() const noexcept { return ny_; }
  std::span<const double> table() const noexcept { return prob_; }

  double p(const Event& e) const;
  double p_x1(std::size_t a1) const;
  double p_x2(std::size_t a2) const;
  double p_y(std::size_t y) const;
  double p_x1_y(std::size_t a1, std::size_t y) const;
  double p_x2_y(std::size_t a2, std::size_t y) const;
  double p_x1x2(std::size_t a1, std::size_t a2) const;

  /// Events with positive probability, in table order.
  std::vector<Event> support() const;

 private:
  std::size_t index(const Event& e) const noexcept {
    return (e.a1 * n2_ + e.a2) * ny_ + e.y;
  }
  void check(const Event& e) const;

  std::size_t n1_, n2_, ny_;
  std::vector<double> prob_;
};

enum class Gate { XOR, OR, AND, NOT2, XOR_PLUS_NOT };

Gate parse_gate(std::string_view name);
std::string_view gate_name(Gate g) noexcept;

/// Output bit of a deterministic gate. XOR_PLUS_NOT needs the latent gate
/// coin: 0 selects XOR, 1 selects NOT x2.
int apply_gate(Gate g, int b1, int b2, int gate_coin = 0);

/// Uniform inputs over {0,1}^2 pushed through `gate`. XOR_PLUS_NOT is the
/// equal mixture of XOR and y = NOT x2 with the gate identity marginalized.
TabularJoint logic_gate_joint(Gate gate);

/// Normalized count table. Codes must lie in [0, size).
TabularJoint from_samples(std::span<const Event> samples, std::size_t n1,
                          std::size_t n2, std::size_t ny);

info::PointwiseInfo pointwise_info(const TabularJoint& joint, const Event& e);

struct EventProfile {
  Event event;
  double prob = 0.0;
  info::PointwiseInfo info;
  info::InteractionProfile profile;
};

struct ExactLsmi {
  std::vector<EventProfile> events;
  info::InteractionProfile average;  ///< probability weighted
};

ExactLsmi exact_lsmi(const TabularJoint& joint);

enum class MiTarget { X1_Y, X2_Y, X1X2_Y };

double mutual_information(const TabularJoint& joint, MiTarget which);

nlohmann::json to_json(const TabularJoint& joint);
TabularJoint joint_from_json(const nlohmann::json& doc);

}  // namespace lsmi::oracle
