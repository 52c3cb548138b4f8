#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>

namespace spherelab {

// C_d = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)), via log-gamma.
double normalizer(int d);

enum class target_kind { exact_rho, gaussian_approx };

// The law of a fixed-direction projection of a uniform sphere point: exact
// rho_d(t) = C_d (1-t^2)^{(d-3)/2} on (-1,1), or its large-d Gaussian
// approximation N(0, 1/d). Immutable after construction; the characteristic
// function of the exact law carries its quadrature rule precomputed.
struct ProjectionTarget {
  target_kind kind;
  int d;
  double c_d = 0.0;    // exact_rho only
  double sigma2 = 0.0;  // gaussian_approx only, = 1/d

  // Substituted Gauss-Legendre rule for integrals against rho_d:
  // nodes t_i in (-1,1) and weights with the density folded in.
  Eigen::VectorXd cf_nodes;
  Eigen::VectorXd cf_weights;

  double variance() const { return 1.0 / d; }
};

ProjectionTarget make_exact_rho(int d);
ProjectionTarget make_gaussian_approx(int d);

// ExactRho for d <= 256, GaussianApprox above (strict threshold).
ProjectionTarget select_target(int d);

double rho_pdf(const ProjectionTarget& target, double t);

// Real-valued by symmetry of both target kinds.
double characteristic_function(const ProjectionTarget& target, double s);
Eigen::VectorXd cf_grid(const ProjectionTarget& target, const Eigen::VectorXd& s);

Eigen::VectorXd sample_target(const ProjectionTarget& target, int n, std::uint64_t seed,
                              std::uint64_t stream = 0);

// Integral of fn over [-1,1] by the 257-node Gauss-Legendre rule under the
// substitution t = sin(u). The substitution turns every (1-t^2)^{(d-3)/2}
// factor into a power of cos(u), so the rule is spectrally accurate for the
// whole d ladder, endpoint singularity (d=2) included.
double integrate_pm1(const std::function<double(double)>& fn);

// Same integral of fn(t) against the unnormalized density (1-t^2)^{(d-3)/2}.
double integrate_weighted_pm1(int d, const std::function<double(double)>& fn);

}  // namespace spherelab
