#include "lsmi/info_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "lsmi/error.hpp"

namespace lsmi::info {

namespace {

void require_finite(double v, const char* name) {
  require(std::isfinite(v), ErrorKind::invalid_input,
          std::string(name) + " must be finite");
}

}  // namespace

bool PointwiseInfo::finite() const noexcept {
  for (double v : {i1, i2, i12, h1, h2, h1_given_y, h2_given_y, h_y})
    if (!std::isfinite(v)) return false;
  return true;
}

Units parse_units(std::string_view name) {
  if (name == "nats") return Units::nats;
  if (name == "bits") return Units::bits;
  fail(ErrorKind::invalid_config,
       "units must be \"nats\" or \"bits\", got \"" + std::string(name) + "\"");
}

std::string_view units_name(Units u) noexcept {
  return u == Units::bits ? "bits" : "nats";
}

double units_factor(Units u) noexcept {
  return u == Units::bits ? 1.0 / std::numbers::ln2 : 1.0;
}

double convert_value(double v, Units from, Units to) noexcept {
  if (from == to) return v;
  return to == Units::bits ? v / std::numbers::ln2 : v * std::numbers::ln2;
}

InteractionProfile convert_units(const InteractionProfile& p, Units from,
                                 Units to) noexcept {
  return {convert_value(p.r, from, to), convert_value(p.u1, from, to),
          convert_value(p.u2, from, to), convert_value(p.s, from, to)};
}

double pmi_from_posterior(double log_posterior, double h_y) {
  require_finite(log_posterior, "log posterior");
  require_finite(h_y, "h(y)");
  return log_posterior + h_y;
}

double conditional_surprisal(double h_x, double h_y, double log_posterior) {
  require_finite(h_x, "h(x)");
  require_finite(h_y, "h(y)");
  require_finite(log_posterior, "log posterior");
  return h_x - h_y - log_posterior;
}

RedundancyParts redundancy_parts(const PointwiseInfo& p) {
  return {std::min(p.h1, p.h2), std::min(p.h1_given_y, p.h2_given_y)};
}

InteractionProfile decompose(const PointwiseInfo& p) {
  require(p.finite(), ErrorKind::invalid_input,
          "pointwise quantities must be finite");
  const auto [r_plus, r_minus] = redundancy_parts(p);
  InteractionProfile out;
  out.r = r_plus - r_minus;
  out.u1 = p.i1 - out.r;
  out.u2 = p.i2 - out.r;
  out.s = p.i12 - out.r - out.u1 - out.u2;
  return out;
}

InteractionProfile aggregate(std::span<const InteractionProfile> profiles) {
  require(!profiles.empty(), ErrorKind::empty_input,
          "cannot aggregate an empty set of profiles");
  InteractionProfile sum;
  for (const auto& p : profiles) {
    sum.r += p.r;
    sum.u1 += p.u1;
    sum.u2 += p.u2;
    sum.s += p.s;
  }
  const double n = static_cast<double>(profiles.size());
  return {sum.r / n, sum.u1 / n, sum.u2 / n, sum.s / n};
}

std::map<int, InteractionProfile> aggregate_by_class(
    std::span<const InteractionProfile> profiles, std::span<const int> labels) {
  require(profiles.size() == labels.size(), ErrorKind::invalid_input,
          "profiles and labels differ in length");
  std::map<int, InteractionProfile> sums;
  std::map<int, std::size_t> counts;
  for (std::size_t i = 0; i < profiles.size(); ++i) {
    auto& acc = sums[labels[i]];
    acc.r += profiles[i].r;
    acc.u1 += profiles[i].u1;
    acc.u2 += profiles[i].u2;
    acc.s += profiles[i].s;
    ++counts[labels[i]];
  }
  for (auto& [label, acc] : sums) {
    const double n = static_cast<double>(counts[label]);
    acc = {acc.r / n, acc.u1 / n, acc.u2 / n, acc.s / n};
  }
  return sums;
}

}  // namespace lsmi::info
