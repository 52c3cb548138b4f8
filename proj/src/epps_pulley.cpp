#include "spherelab/epps_pulley.hpp"

#include <cmath>

#include "spherelab/errors.hpp"

namespace spherelab {

double EPConfig::resolved_halfwidth() const {
  return quad_halfwidth > 0.0 ? quad_halfwidth : 7.0 * std::sqrt(weight_variance);
}

void EPConfig::validate() const {
  if (weight_variance <= 0.0) throw degenerate_input("EPConfig: weight_variance must be > 0");
  if (quad_nodes < 17 || quad_nodes % 2 == 0)
    throw degenerate_input("EPConfig: quad_nodes must be odd and >= 17");
  if (quad_halfwidth < 0.0) throw degenerate_input("EPConfig: quad_halfwidth must be > 0");
}

std::complex<double> empirical_cf(const Eigen::VectorXd& samples, double s) {
  if (samples.size() < 1) throw degenerate_input("empirical_cf: empty sample");
  double re = 0.0, im = 0.0;
  for (Eigen::Index j = 0; j < samples.size(); ++j) {
    re += std::cos(s * samples[j]);
    im += std::sin(s * samples[j]);
  }
  double n = static_cast<double>(samples.size());
  return {re / n, im / n};
}

EPGrid::EPGrid(const ProjectionTarget& target, const EPConfig& cfg) {
  cfg.validate();
  m_ = (cfg.quad_nodes - 1) / 2;
  double H = cfg.resolved_halfwidth();
  h_ = H / m_;
  t_.resize(m_);
  loss_w_.resize(m_);
  grad_w_.resize(m_);
  phi_y_.resize(m_);
  double v = cfg.weight_variance;
  double norm = 1.0 / std::sqrt(2.0 * M_PI * v);
  for (int g = 0; g < m_; ++g) {
    double t = (g + 1) * h_;
    t_[g] = t;
    double w = norm * std::exp(-0.5 * t * t / v);
    // Both halves of the symmetric grid folded in; the boundary node keeps
    // the plain trapezoid half-weight.
    double trap = (g + 1 < m_) ? 2.0 * h_ : h_;
    loss_w_[g] = trap * w;
    grad_w_[g] = 2.0 * loss_w_[g] * t;
    phi_y_[g] = characteristic_function(target, t);
  }
}

double EPGrid::statistic(const Eigen::VectorXd& x) const {
  if (x.size() < 1) throw degenerate_input("ep_statistic: empty sample");
  const Eigen::Index n = x.size();
  Eigen::ArrayXd ur = (h_ * x.array()).cos();
  Eigen::ArrayXd ui = (h_ * x.array()).sin();
  Eigen::ArrayXd zr = ur, zi = ui, tmp(n);
  double inv_n = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (int g = 0; g < m_; ++g) {
    double dr = zr.sum() * inv_n - phi_y_[g];
    double di = zi.sum() * inv_n;
    acc += loss_w_[g] * (dr * dr + di * di);
    if (g + 1 < m_) {
      tmp = zr * ur - zi * ui;
      zi = zr * ui + zi * ur;
      zr = tmp;
    }
  }
  return static_cast<double>(n) * acc;
}

double EPGrid::statistic_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
  if (x.size() < 1) throw degenerate_input("ep_gradient: empty sample");
  const Eigen::Index n = x.size();
  Eigen::ArrayXd ur = (h_ * x.array()).cos();
  Eigen::ArrayXd ui = (h_ * x.array()).sin();
  Eigen::ArrayXd zr = ur, zi = ui, tmp(n);
  Eigen::VectorXd dr(m_), di(m_);
  double inv_n = 1.0 / static_cast<double>(n);
  double acc = 0.0;
  for (int g = 0; g < m_; ++g) {
    dr[g] = zr.sum() * inv_n - phi_y_[g];
    di[g] = zi.sum() * inv_n;
    acc += loss_w_[g] * (dr[g] * dr[g] + di[g] * di[g]);
    if (g + 1 < m_) {
      tmp = zr * ur - zi * ui;
      zi = zr * ui + zi * ur;
      zr = tmp;
    }
  }
  grad.resize(n);
  Eigen::ArrayXd gacc = Eigen::ArrayXd::Zero(n);
  zr = ur;
  zi = ui;
  for (int g = 0; g < m_; ++g) {
    gacc += (grad_w_[g] * di[g]) * zr - (grad_w_[g] * dr[g]) * zi;
    if (g + 1 < m_) {
      tmp = zr * ur - zi * ui;
      zi = zr * ui + zi * ur;
      zr = tmp;
    }
  }
  grad = gacc.matrix();
  return static_cast<double>(n) * acc;
}

double ep_statistic(const Eigen::VectorXd& samples, const ProjectionTarget& target,
                    const EPConfig& cfg) {
  return EPGrid(target, cfg).statistic(samples);
}

Eigen::VectorXd ep_gradient(const Eigen::VectorXd& samples, const ProjectionTarget& target,
                            const EPConfig& cfg) {
  Eigen::VectorXd grad;
  EPGrid(target, cfg).statistic_and_gradient(samples, grad);
  return grad;
}

double ep_statistic_gaussian_closed_form(const Eigen::VectorXd& samples, double sigma2_target,
                                         double weight_variance) {
  if (sigma2_target <= 0.0 || weight_variance <= 0.0)
    throw degenerate_input("ep closed form: variances must be > 0");
  if (samples.size() < 1) throw degenerate_input("ep closed form: empty sample");
  const Eigen::Index n = samples.size();
  double v = weight_variance;
  double a = 1.0 + sigma2_target * v;
  double pair_sum = static_cast<double>(n);  // diagonal terms e^0
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index k = j + 1; k < n; ++k) {
      double diff = samples[j] - samples[k];
      pair_sum += 2.0 * std::exp(-0.5 * diff * diff * v);
    }
  double cross = 0.0;
  for (Eigen::Index j = 0; j < n; ++j)
    cross += std::exp(-0.5 * samples[j] * samples[j] * v / a);
  return pair_sum / static_cast<double>(n) - 2.0 / std::sqrt(a) * cross +
         static_cast<double>(n) / std::sqrt(1.0 + 2.0 * sigma2_target * v);
}

Eigen::VectorXd ep_gradient_gaussian_closed_form(const Eigen::VectorXd& samples,
                                                 double sigma2_target, double weight_variance) {
  if (sigma2_target <= 0.0 || weight_variance <= 0.0)
    throw degenerate_input("ep closed form: variances must be > 0");
  if (samples.size() < 1) throw degenerate_input("ep closed form: empty sample");
  const Eigen::Index n = samples.size();
  double v = weight_variance;
  double a = 1.0 + sigma2_target * v;
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      double diff = samples[j] - samples[k];
      acc += diff * std::exp(-0.5 * diff * diff * v);
    }
    grad[j] = -2.0 * v * acc / static_cast<double>(n) +
              2.0 * v * samples[j] / (a * std::sqrt(a)) *
                  std::exp(-0.5 * samples[j] * samples[j] * v / a);
  }
  return grad;
}

}  // namespace spherelab
