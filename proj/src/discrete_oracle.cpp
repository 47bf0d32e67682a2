#include "lsmi/discrete_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lsmi/error.hpp"

namespace lsmi::oracle {

TabularJoint::TabularJoint(std::size_t n1, std::size_t n2, std::size_t ny,
                           std::vector<double> prob)
    : n1_(n1), n2_(n2), ny_(ny), prob_(std::move(prob)) {
  require(n1 > 0 && n2 > 0 && ny > 0, ErrorKind::invalid_input,
          "support sizes must be positive");
  require(n1 <= kMaxSupport && n2 <= kMaxSupport && ny <= kMaxSupport,
          ErrorKind::invalid_input, "support sizes are limited to 64 states");
  require(prob_.size() == n1 * n2 * ny, ErrorKind::invalid_input,
          "probability table has wrong size");
  double total = 0.0;
  for (double v : prob_) {
    require(std::isfinite(v) && v >= 0.0, ErrorKind::invalid_input,
            "probabilities must be finite and non-negative");
    total += v;
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorKind::invalid_input,
          "probabilities must sum to 1");
}

void TabularJoint::check(const Event& e) const {
  require(e.a1 < n1_ && e.a2 < n2_ && e.y < ny_, ErrorKind::invalid_input,
          "event index out of range");
}

double TabularJoint::p(const Event& e) const {
  check(e);
  return prob_[index(e)];
}

double TabularJoint::p_x1(std::size_t a1) const {
  double s = 0.0;
  for (std::size_t a2 = 0; a2 < n2_; ++a2)
    for (std::size_t y = 0; y < ny_; ++y) s += p({a1, a2, y});
  return s;
}

double TabularJoint::p_x2(std::size_t a2) const {
  double s = 0.0;
  for (std::size_t a1 = 0; a1 < n1_; ++a1)
    for (std::size_t y = 0; y < ny_; ++y) s += p({a1, a2, y});
  return s;
}

double TabularJoint::p_y(std::size_t y) const {
  double s = 0.0;
  for (std::size_t a1 = 0; a1 < n1_; ++a1)
    for (std::size_t a2 = 0; a2 < n2_; ++a2) s += p({a1, a2, y});
  return s;
}

double TabularJoint::p_x1_y(std::size_t a1, std::size_t y) const {
  double s = 0.0;
  for (std::size_t a2 = 0; a2 < n2_; ++a2) s += p({a1, a2, y});
  return s;
}

double TabularJoint::p_x2_y(std::size_t a2, std::size_t y) const {
  double s = 0.0;
  for (std::size_t a1 = 0; a1 < n1_; ++a1) s += p({a1, a2, y});
  return s;
}

double TabularJoint::p_x1x2(std::size_t a1, std::size_t a2) const {
  double s = 0.0;
  for (std::size_t y = 0; y < ny_; ++y) s += p({a1, a2, y});
  return s;
}

std::vector<Event> TabularJoint::support() const {
  std::vector<Event> out;
  for (std::size_t a1 = 0; a1 < n1_; ++a1)
    for (std::size_t a2 = 0; a2 < n2_; ++a2)
      for (std::size_t y = 0; y < ny_; ++y)
        if (prob_[index({a1, a2, y})] > 0.0) out.push_back({a1, a2, y});
  return out;
}

Gate parse_gate(std::string_view name) {
  if (name == "XOR") return Gate::XOR;
  if (name == "OR") return Gate::OR;
  if (name == "AND") return Gate::AND;
  if (name == "NOT2") return Gate::NOT2;
  if (name == "XOR_PLUS_NOT" || name == "XOR+NOT") return Gate::XOR_PLUS_NOT;
  fail(ErrorKind::invalid_config, "unknown gate \"" + std::string(name) + "\"");
}

std::string_view gate_name(Gate g) noexcept {
  switch (g) {
    case Gate::XOR: return "XOR";
    case Gate::OR: return "OR";
    case Gate::AND: return "AND";
    case Gate::NOT2: return "NOT2";
    case Gate::XOR_PLUS_NOT: return "XOR_PLUS_NOT";
  }
  return "?";
}

int apply_gate(Gate g, int b1, int b2, int gate_coin) {
  switch (g) {
    case Gate::XOR: return b1 ^ b2;
    case Gate::OR: return b1 | b2;
    case Gate::AND: return b1 & b2;
    case Gate::NOT2: return 1 - b2;
    case Gate::XOR_PLUS_NOT: return gate_coin == 0 ? (b1 ^ b2) : (1 - b2);
  }
  return 0;
}

TabularJoint logic_gate_joint(Gate gate) {
  std::vector<double> prob(8, 0.0);
  const int coins = gate == Gate::XOR_PLUS_NOT ? 2 : 1;
  const double w = 0.25 / coins;
  for (int b1 = 0; b1 < 2; ++b1)
    for (int b2 = 0; b2 < 2; ++b2)
      for (int c = 0; c < coins; ++c) {
        const int y = apply_gate(gate, b1, b2, c);
        prob[(b1 * 2 + b2) * 2 + y] += w;
      }
  return TabularJoint(2, 2, 2, std::move(prob));
}

TabularJoint from_samples(std::span<const Event> samples, std::size_t n1,
                          std::size_t n2, std::size_t ny) {
  require(!samples.empty(), ErrorKind::empty_input,
          "cannot build a joint from an empty dataset");
  std::vector<double> counts(n1 * n2 * ny, 0.0);
  for (const auto& e : samples) {
    require(e.a1 < n1 && e.a2 < n2 && e.y < ny, ErrorKind::invalid_input,
            "sample code outside declared support");
    counts[(e.a1 * n2 + e.a2) * ny + e.y] += 1.0;
  }
  const double n = static_cast<double>(samples.size());
  for (double& c : counts) c /= n;
  // Pairwise summation residue can exceed 1e-12 for large n; renormalize.
  double total = 0.0;
  for (double c : counts) total += c;
  for (double& c : counts) c /= total;
  return TabularJoint(n1, n2, ny, std::move(counts));
}

info::PointwiseInfo pointwise_info(const TabularJoint& joint, const Event& e) {
  const double pe = joint.p(e);
  require(pe > 0.0, ErrorKind::unsupported_event,
          "event has zero probability");
  const double px1 = joint.p_x1(e.a1);
  const double px2 = joint.p_x2(e.a2);
  const double py = joint.p_y(e.y);
  const double px1y = joint.p_x1_y(e.a1, e.y);
  const double px2y = joint.p_x2_y(e.a2, e.y);
  const double px12 = joint.p_x1x2(e.a1, e.a2);

  // Marginal sums can exceed 1 by an ulp; surprisals stay non-negative.
  auto surprisal = [](double p) { return -std::log(std::min(p, 1.0)); };
  info::PointwiseInfo out;
  out.h1 = surprisal(px1);
  out.h2 = surprisal(px2);
  out.h_y = surprisal(py);
  out.h1_given_y = surprisal(px1y / py);
  out.h2_given_y = surprisal(px2y / py);
  out.i1 = std::log(px1y / (px1 * py));
  out.i2 = std::log(px2y / (px2 * py));
  out.i12 = std::log(pe / (px12 * py));
  return out;
}

ExactLsmi exact_lsmi(const TabularJoint& joint) {
  ExactLsmi out;
  for (const auto& e : joint.support()) {
    EventProfile ep;
    ep.event = e;
    ep.prob = joint.p(e);
    ep.info = pointwise_info(joint, e);
    ep.profile = info::decompose(ep.info);
    out.average.r += ep.prob * ep.profile.r;
    out.average.u1 += ep.prob * ep.profile.u1;
    out.average.u2 += ep.prob * ep.profile.u2;
    out.average.s += ep.prob * ep.profile.s;
    out.events.push_back(ep);
  }
  return out;
}

double mutual_information(const TabularJoint& joint, MiTarget which) {
  double mi = 0.0;
  for (const auto& e : joint.support()) {
    const auto p = pointwise_info(joint, e);
    const double i = which == MiTarget::X1_Y   ? p.i1
                     : which == MiTarget::X2_Y ? p.i2
                                               : p.i12;
    mi += joint.p(e) * i;
  }
  return mi;
}

nlohmann::json to_json(const TabularJoint& joint) {
  return {{"sizes", {joint.n1(), joint.n2(), joint.ny()}},
          {"prob", std::vector<double>(joint.table().begin(),
                                       joint.table().end())}};
}

TabularJoint joint_from_json(const nlohmann::json& doc) {
  try {
    const auto sizes = doc.at("sizes").get<std::vector<std::size_t>>();
    require(sizes.size() == 3, ErrorKind::invalid_input,
            "joint \"sizes\" must have three entries");
    return TabularJoint(sizes[0], sizes[1], sizes[2],
                        doc.at("prob").get<std::vector<double>>());
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::invalid_input, std::string("malformed joint: ") + ex.what());
  }
}

}  // namespace lsmi::oracle
