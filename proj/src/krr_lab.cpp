#include "spherelab/krr_lab.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "spherelab/errors.hpp"
#include "spherelab/parallel.hpp"
#include "spherelab/rng.hpp"
#include "spherelab/target_density.hpp"

namespace spherelab {

namespace {

constexpr std::uint32_t kTagBruteForce = 0x41;
constexpr std::uint32_t kTagPowerStart = 0x42;

// Rayleigh-quotient power iteration on the raw Gram matrix; returns mu1 of
// Gram/B. The start vector is seeded, so results are reproducible.
double top_eigenvalue_power(const Eigen::MatrixXd& g, std::uint64_t seed, std::uint64_t stream) {
  int b = static_cast<int>(g.rows());
  rng_stream rng = rng_stream::of(seed, kTagPowerStart, stream);
  Eigen::VectorXd v(b);
  for (int i = 0; i < b; ++i) v[i] = rng.normal();
  v.normalize();
  double mu = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    Eigen::VectorXd w = g * v;
    double mu_next = v.dot(w);
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    bool converged = std::abs(mu_next - mu) <= 1e-12 * std::max(1.0, std::abs(mu_next));
    mu = mu_next;
    if (converged && iter > 0) break;
  }
  return mu / b;
}

}  // namespace

KernelSpec KernelSpec::exponential_dot(double kappa) {
  if (kappa <= 0) throw degenerate_input("KernelSpec: exponential_dot needs kappa > 0");
  return {kernel_kind::exponential_dot, kappa};
}

double KernelSpec::evaluate_dot(double dot) const {
  return kind == kernel_kind::linear ? dot : std::exp(kappa * dot);
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& points, const KernelSpec& kernel) {
  int b = static_cast<int>(points.rows());
  if (b < 1) throw degenerate_input("gram: need at least one point");
  Eigen::MatrixXd g = points * points.transpose();
  if (kernel.kind == kernel_kind::exponential_dot) {
    double kappa = kernel.kappa;
    parallel_for(b, [&](int lo, int hi) {
      g.middleRows(lo, hi - lo) = (kappa * g.middleRows(lo, hi - lo).array()).exp();
    });
  }
  return g;
}

SpectrumReport covariance_spectrum(const Eigen::MatrixXd& points, const KernelSpec& kernel) {
  int b = static_cast<int>(points.rows());
  if (b < 2) throw degenerate_input("covariance_spectrum: need at least 2 points");
  if (b > 5000)
    throw degenerate_input("covariance_spectrum: dense eigendecomposition capped at B=5000");

  Eigen::MatrixXd a = gram(points, kernel) / b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    char msg[160];
    std::snprintf(msg, sizeof msg,
                  "covariance_spectrum: eigensolver failed (B=%d, diag range [%.6g, %.6g], "
                  "norm %.6g)",
                  b, a.diagonal().minCoeff(), a.diagonal().maxCoeff(), a.norm());
    throw numerical_error(msg);
  }

  Eigen::VectorXd ev = solver.eigenvalues().reverse();
  double worst = ev.minCoeff();
  if (worst < -1e-8)
    std::fprintf(stderr,
                 "covariance_spectrum: clamping eigenvalues below the roundoff slack "
                 "(min %.6g)\n",
                 worst);
  ev = ev.cwiseMax(0.0);

  SpectrumReport report;
  report.eigenvalues = ev;
  report.batch_size = b;
  report.kernel = kernel;
  report.lambda_grid = {0.01, 0.1, 1.0};
  for (double lambda : report.lambda_grid)
    report.worst_case.push_back(worst_case_isb(ev[0], lambda));
  return report;
}

double worst_case_isb(double mu1, double lambda) {
  if (mu1 < 0) throw degenerate_input("worst_case_isb: mu1 must be >= 0");
  if (lambda <= 0) throw degenerate_input("worst_case_isb: lambda must be > 0");
  if (mu1 == 0) return 0.0;
  double t = mu1 * lambda / (mu1 + lambda);
  return t * t;
}

double isb_spectral_bruteforce(const SpectrumReport& spectrum, double lambda, int trials,
                               std::uint64_t seed) {
  if (trials < 1) throw degenerate_input("isb_spectral_bruteforce: trials must be >= 1");
  int j_count = static_cast<int>(spectrum.eigenvalues.size());
  if (j_count < 1) throw degenerate_input("isb_spectral_bruteforce: empty spectrum");

  Eigen::VectorXd h(j_count);
  for (int j = 0; j < j_count; ++j) h[j] = worst_case_isb(spectrum.eigenvalues[j], lambda);
  double sup = h.maxCoeff();  // basis vectors, attained at e1

  rng_stream rng = rng_stream::of(seed, kTagBruteForce, 0);
  Eigen::VectorXd a(j_count);
  for (int t = 0; t < trials; ++t) {
    for (int j = 0; j < j_count; ++j) a[j] = rng.normal();
    double nrm2 = a.squaredNorm();
    if (nrm2 == 0.0) continue;
    sup = std::max(sup, h.dot(a.cwiseAbs2()) / nrm2);
  }
  return sup;
}

DistributionSpec DistributionSpec::uniform(int d) {
  if (d < 2) throw degenerate_input("DistributionSpec: d must be >= 2");
  DistributionSpec spec;
  spec.label = "uniform";
  spec.kind = krr_distribution_kind::uniform;
  spec.d = d;
  return spec;
}

DistributionSpec DistributionSpec::vmf_mixture(const std::vector<VmfComponent>& components,
                                               int d) {
  if (components.empty()) throw degenerate_input("DistributionSpec: empty mixture");
  for (const VmfComponent& c : components)
    if (c.mu.size() != d) throw degenerate_input("DistributionSpec: component dimension mismatch");
  DistributionSpec spec;
  spec.label = "vmf_mixture";
  spec.kind = krr_distribution_kind::vmf_mixture;
  spec.d = d;
  spec.components = components;
  return spec;
}

DistributionSpec DistributionSpec::radial(const RadialLaw& law, int d) {
  law.validate();
  DistributionSpec spec;
  spec.label = "radial";
  spec.kind = krr_distribution_kind::radial;
  spec.d = d;
  spec.law = law;
  return spec;
}

void DistributionSpec::validate_energy() const {
  if (kind != krr_distribution_kind::radial) return;  // on-sphere: E[|x|^2] = 1
  if (std::abs(law.second_moment() - 1.0) > 1e-12)
    throw degenerate_input("DistributionSpec: radial law violates E[|x|^2] = 1");
}

Eigen::MatrixXd DistributionSpec::sample(int n, std::uint64_t seed, std::uint64_t stream) const {
  switch (kind) {
    case krr_distribution_kind::uniform:
      return sample_uniform_sphere(d, n, seed, stream).data;
    case krr_distribution_kind::vmf_mixture:
      return sample_vmf_mixture(components, n, seed, stream).data;
    default: {
      PointCloud base = sample_uniform_sphere(d, n, seed, stream);
      return sample_radial(base, law, seed, stream).data;
    }
  }
}

EigenvalueTable compare_top_eigenvalue(const std::vector<DistributionSpec>& distributions,
                                       const KernelSpec& kernel, int B, int reps,
                                       std::uint64_t seed) {
  if (distributions.empty()) throw degenerate_input("compare_top_eigenvalue: no distributions");
  if (B < 2) throw degenerate_input("compare_top_eigenvalue: B must be >= 2");
  if (reps < 2) throw degenerate_input("compare_top_eigenvalue: reps must be >= 2");
  for (const DistributionSpec& spec : distributions) spec.validate_energy();

  int count = static_cast<int>(distributions.size());
  EigenvalueTable table;
  table.mu1_mean.resize(count);
  table.mu1_std_error.resize(count);
  for (int i = 0; i < count; ++i) {
    table.names.push_back(distributions[i].label);
    Eigen::VectorXd mu(reps);
    for (int rep = 0; rep < reps; ++rep) {
      std::uint64_t stream = static_cast<std::uint64_t>(i) * reps + rep;
      Eigen::MatrixXd x = distributions[i].sample(B, seed, stream);
      Eigen::MatrixXd g = gram(x, kernel);
      mu[rep] = top_eigenvalue_power(g, seed, stream);
    }
    double mean = mu.mean();
    double var = (mu.array() - mean).square().sum() / (reps - 1.0);
    table.mu1_mean[i] = mean;
    table.mu1_std_error[i] = std::sqrt(var / reps);
  }
  return table;
}

double linear_probe_top_eig(const Eigen::MatrixXd& points) {
  int b = static_cast<int>(points.rows());
  if (b < 2) throw degenerate_input("linear_probe_top_eig: need at least 2 points");
  Eigen::MatrixXd second_moment = points.transpose() * points / b;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(second_moment, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw numerical_error("linear_probe_top_eig: eigensolver failed");
  return solver.eigenvalues().maxCoeff();
}

MeanKernelEstimate mean_kernel_check(const DistributionSpec& distribution,
                                     const KernelSpec& kernel, int B, std::uint64_t seed) {
  if (kernel.kind != kernel_kind::exponential_dot)
    throw degenerate_input("mean_kernel_check: exponential kernel only");
  if (B < 2) throw degenerate_input("mean_kernel_check: B must be >= 2");
  Eigen::MatrixXd x = distribution.sample(B, seed, 0);
  Eigen::MatrixXd g = gram(x, kernel);

  // Leave-self-out row means; the U-statistic is their average, and their
  // spread gives the (conservative, factor-2) standard error.
  Eigen::VectorXd row_means = (g.rowwise().sum() - g.diagonal()) / (B - 1.0);
  double value = row_means.mean();
  double sd = std::sqrt((row_means.array() - value).square().sum() / (B - 1.0));
  return {value, 2.0 * sd / std::sqrt(static_cast<double>(B))};
}

double uniform_mean_kernel(int d, double kappa) {
  return normalizer(d) *
         integrate_weighted_pm1(d, [kappa](double t) { return std::exp(kappa * t); });
}

}  // namespace spherelab
