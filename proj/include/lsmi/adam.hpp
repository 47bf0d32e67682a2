#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace lsmi {

/// Per-coordinate adaptive step with bias-corrected moments:
///   m_t = b1 m_{t-1} + (1 - b1) g
///   v_t = b2 v_{t-1} + (1 - b2) g^2
///   theta -= lr * (m_t / (1 - b1^t)) / (sqrt(v_t / (1 - b2^t)) + eps)
class Adam {
 public:
  explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(std::span<double> params, std::span<const double> grad, double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
  }

  std::size_t steps_taken() const noexcept { return t_; }

 private:
  std::vector<double> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// lr0 * (1 + cos(pi * step / total)) / 2
inline double cosine_lr(double lr0, std::size_t step, std::size_t total) {
  if (total == 0) return lr0;
  const double frac = static_cast<double>(step) / static_cast<double>(total);
  return 0.5 * lr0 * (1.0 + std::cos(std::numbers::pi * frac));
}

/// Read-only row-major matrix view.
struct Rows {
  std::span<const double> data;
  std::size_t dim = 0;

  std::size_t size() const noexcept { return dim ? data.size() / dim : 0; }
  std::span<const double> row(std::size_t i) const {
    return data.subspan(i * dim, dim);
  }
};

}  // namespace lsmi
