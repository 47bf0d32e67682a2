#pragma once

// Pointwise information quantities and the sample-wise redundancy /
// uniqueness / synergy decomposition. All values are in nats unless a
// function explicitly converts.

#include <map>
#include <span>
#include <string_view>

namespace lsmi::info {

/// Probability clamp applied wherever a model hands a probability to a log.
inline constexpr double kProbClamp = 1e-7;

struct PointwiseInfo {
  double i1 = 0.0;   ///< i(x1; y)
  double i2 = 0.0;   ///< i(x2; y)
  double i12 = 0.0;  ///< i(x1, x2; y)
  double h1 = 0.0;   ///< -log p(x1)
  double h2 = 0.0;   ///< -log p(x2)
  double h1_given_y = 0.0;  ///< -log p(x1 | y)
  double h2_given_y = 0.0;  ///< -log p(x2 | y)
  double h_y = 0.0;  ///< -log p(y)

  bool finite() const noexcept;
};

struct InteractionProfile {
  double r = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double s = 0.0;

  double total() const noexcept { return r + u1 + u2 + s; }
  friend bool operator==(const InteractionProfile&,
                         const InteractionProfile&) = default;
};

enum class Units { nats, bits };

Units parse_units(std::string_view name);
std::string_view units_name(Units u) noexcept;

/// Factor that converts a value in nats into `u`.
double units_factor(Units u) noexcept;

/// i(x; y) = log p(y|x) - log p(y) = log p(y|x) + h(y).
double pmi_from_posterior(double log_posterior, double h_y);

/// h(x|y) = h(x) - h(y) - log p(y|x).
double conditional_surprisal(double h_x, double h_y, double log_posterior);

/// Two-source decomposition. r+ = min(h1, h2), r- = min(h1|y, h2|y),
/// r = r+ - r-; the remaining terms follow from the pointwise identities
/// i1 = r + u1, i2 = r + u2, i12 = r + u1 + u2 + s.
InteractionProfile decompose(const PointwiseInfo& p);

/// Redundancy on the specificity / ambiguity components separately.
struct RedundancyParts {
  double r_plus = 0.0;
  double r_minus = 0.0;
};
RedundancyParts redundancy_parts(const PointwiseInfo& p);

InteractionProfile aggregate(std::span<const InteractionProfile> profiles);

std::map<int, InteractionProfile> aggregate_by_class(
    std::span<const InteractionProfile> profiles, std::span<const int> labels);

/// `profile` is interpreted as being in `from`.
InteractionProfile convert_units(const InteractionProfile& profile, Units from,
                                 Units to) noexcept;

double convert_value(double v, Units from, Units to) noexcept;

}  // namespace lsmi::info
