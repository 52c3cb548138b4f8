#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "spherelab/sphere_geometry.hpp"

namespace spherelab {

enum class kernel_kind { exponential_dot, linear };

// K(x,y) = e^{kappa x.y} or x.y; both depend on the dot product only.
struct KernelSpec {
  kernel_kind kind = kernel_kind::exponential_dot;
  double kappa = 1.0;

  static KernelSpec exponential_dot(double kappa);
  static KernelSpec linear() { return {kernel_kind::linear, 0.0}; }

  double evaluate_dot(double dot) const;
  const char* name() const { return kind == kernel_kind::linear ? "linear" : "exponential_dot"; }
};

Eigen::MatrixXd gram(const Eigen::MatrixXd& points, const KernelSpec& kernel);

// Eigenvalues of (1/B) Gram, descending, clamped at zero (a warning goes to
// stderr below the -1e-8 roundoff slack), plus the worst-case ISB h_lambda(mu1)
// over the lambda grid.
struct SpectrumReport {
  Eigen::VectorXd eigenvalues;
  int batch_size = 0;
  KernelSpec kernel;
  std::vector<double> lambda_grid;
  std::vector<double> worst_case;  // h_lambda(mu1) per lambda_grid entry
};

SpectrumReport covariance_spectrum(const Eigen::MatrixXd& points, const KernelSpec& kernel);

// h_lambda(mu1) = (mu1 lambda / (mu1 + lambda))^2.
double worst_case_isb(double mu1, double lambda);

// Sup of sum_j h_lambda(mu_j) a_j^2 over unit coefficient vectors: all
// coordinate basis vectors deterministically plus `trials` random unit
// vectors. Equals worst_case_isb(mu1, lambda), attained at the first basis
// vector.
double isb_spectral_bruteforce(const SpectrumReport& spectrum, double lambda, int trials,
                               std::uint64_t seed);

enum class krr_distribution_kind { uniform, vmf_mixture, radial };

// Sampling spec for the eigenvalue comparison: distributions on (or radially
// scaled off) the unit sphere subject to the energy constraint E[|x|^2] = 1.
struct DistributionSpec {
  std::string label;
  krr_distribution_kind kind = krr_distribution_kind::uniform;
  int d = 2;
  std::vector<VmfComponent> components;  // vmf_mixture
  RadialLaw law;                         // radial, on uniform directions

  static DistributionSpec uniform(int d);
  static DistributionSpec vmf_mixture(const std::vector<VmfComponent>& components, int d);
  static DistributionSpec radial(const RadialLaw& law, int d);

  // |E[|x|^2] - 1| must vanish within 1e-12; radial laws can violate it.
  void validate_energy() const;
  Eigen::MatrixXd sample(int n, std::uint64_t seed, std::uint64_t stream = 0) const;
};

struct EigenvalueTable {
  std::vector<std::string> names;
  Eigen::VectorXd mu1_mean;
  Eigen::VectorXd mu1_std_error;
};

// Estimated top eigenvalue of (1/B) Gram per distribution, mean and standard
// error over reps batches. Power iteration, deterministic given the seed.
EigenvalueTable compare_top_eigenvalue(const std::vector<DistributionSpec>& distributions,
                                       const KernelSpec& kernel, int B, int reps,
                                       std::uint64_t seed);

// Top eigenvalue of the empirical second-moment matrix (1/B) sum x x^T.
double linear_probe_top_eig(const Eigen::MatrixXd& points);

struct MeanKernelEstimate {
  double value;
  double std_error;
};

// U-statistic estimate of E[K(X,Y)] over all pairs of one batch.
MeanKernelEstimate mean_kernel_check(const DistributionSpec& distribution,
                                     const KernelSpec& kernel, int B, std::uint64_t seed);

// E[e^{kappa U.V}] for independent uniform unit vectors in R^d, by quadrature
// over the projected-dot density.
double uniform_mean_kernel(int d, double kappa);

}  // namespace spherelab
