#pragma once

#include <Eigen/Core>
#include <complex>

#include "spherelab/target_density.hpp"

namespace spherelab {

struct EPConfig {
  // Variance of the Gaussian weight w(t) in the frequency integral.
  double weight_variance = 1.0;
  // Node count of the symmetric uniform trapezoid grid on [-H, H].
  int quad_nodes = 129;
  // Truncation H. 0 means automatic: 7*sqrt(weight_variance), which keeps
  // the neglected weight tail below 1e-10 for every variance.
  double quad_halfwidth = 0.0;

  double resolved_halfwidth() const;
  void validate() const;  // quad_nodes odd and >= 17, variances positive
};

std::complex<double> empirical_cf(const Eigen::VectorXd& samples, double s);

// EP = n * integral of |empirical_cf - target_cf|^2 w(t) dt.
double ep_statistic(const Eigen::VectorXd& samples, const ProjectionTarget& target,
                    const EPConfig& cfg);

// d EP / d x_j on the same frequency grid as ep_statistic.
Eigen::VectorXd ep_gradient(const Eigen::VectorXd& samples, const ProjectionTarget& target,
                            const EPConfig& cfg);

// Closed form of the statistic for a Gaussian target, from the identity
// int e^{ita} N(0,v)(t) dt = e^{-a^2 v/2}. Quadrature-free cross-check.
double ep_statistic_gaussian_closed_form(const Eigen::VectorXd& samples, double sigma2_target,
                                         double weight_variance);
Eigen::VectorXd ep_gradient_gaussian_closed_form(const Eigen::VectorXd& samples,
                                                 double sigma2_target, double weight_variance);

// Shared frequency grid, folded onto the positive half: the loss integrand
// is even and vanishes at t=0, so m = (quad_nodes-1)/2 nodes t_g = g*h carry
// the whole integral with doubled interior trapezoid weights. The target CF
// is evaluated once here and cached for every later statistic call.
class EPGrid {
 public:
  EPGrid(const ProjectionTarget& target, const EPConfig& cfg);

  int nodes() const { return m_; }
  double step() const { return h_; }

  double statistic(const Eigen::VectorXd& x) const;
  // Statistic plus gradient in one shot; grad is resized to x.size().
  double statistic_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const;

 private:
  int m_;
  double h_;
  Eigen::VectorXd t_;       // node frequencies
  Eigen::VectorXd loss_w_;  // folded trapezoid weight times w(t_g)
  Eigen::VectorXd grad_w_;  // 2 * loss_w_ * t_g
  Eigen::VectorXd phi_y_;   // target CF at the nodes
};

}  // namespace spherelab
