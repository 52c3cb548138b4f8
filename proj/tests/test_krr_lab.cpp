#include <doctest.h>

#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/krr_lab.hpp"
#include "spherelab/special_functions.hpp"

using namespace spherelab;

namespace {

DistributionSpec single_vmf(int d, double kappa) {
  VmfComponent comp;
  comp.mu = Eigen::VectorXd::Unit(d, 0);
  comp.kappa = kappa;
  comp.weight = 1.0;
  return DistributionSpec::vmf_mixture({comp}, d);
}

}  // namespace

TEST_SUITE("krr_lab") {

TEST_CASE("kernel evaluation and gram") {
  KernelSpec exp_k = KernelSpec::exponential_dot(2.0);
  CHECK(exp_k.evaluate_dot(0.25) == doctest::Approx(std::exp(0.5)).epsilon(1e-15));
  KernelSpec lin = KernelSpec::linear();
  CHECK(lin.evaluate_dot(0.25) == 0.25);
  CHECK_THROWS_AS(KernelSpec::exponential_dot(0.0), degenerate_input);

  Eigen::MatrixXd pts(2, 2);
  pts << 1.0, 0.0, 0.0, 1.0;
  Eigen::MatrixXd g = gram(pts, exp_k);
  CHECK(g(0, 0) == doctest::Approx(std::exp(2.0)).epsilon(1e-15));
  CHECK(g(0, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(g(1, 0) == g(0, 1));
  Eigen::MatrixXd gl = gram(pts, lin);
  CHECK(gl(0, 0) == 1.0);
  CHECK(gl(0, 1) == 0.0);
}

TEST_CASE("spectrum basics and the trace identity") {
  DistributionSpec u = DistributionSpec::uniform(3);
  Eigen::MatrixXd pts = u.sample(600, 4);
  KernelSpec k = KernelSpec::exponential_dot(1.0);
  SpectrumReport rep = covariance_spectrum(pts, k);
  REQUIRE(rep.eigenvalues.size() == 600);
  CHECK(rep.batch_size == 600);
  // Descending order, nonnegative.
  for (int i = 1; i < 600; ++i) CHECK(rep.eigenvalues[i] <= rep.eigenvalues[i - 1]);
  CHECK(rep.eigenvalues.minCoeff() >= 0.0);
  // Sum of eigenvalues = trace of (1/B) Gram = e^kappa on the unit sphere.
  CHECK(std::abs(rep.eigenvalues.sum() - std::exp(1.0)) < 1e-8);
  // The worst-case column tracks h_lambda(mu1) over the default grid.
  REQUIRE(rep.lambda_grid.size() == 3);
  for (std::size_t i = 0; i < rep.lambda_grid.size(); ++i)
    CHECK(rep.worst_case[i] ==
          doctest::Approx(worst_case_isb(rep.eigenvalues[0], rep.lambda_grid[i])).epsilon(1e-14));
}

TEST_CASE("spectrum rejects degenerate batches") {
  KernelSpec k = KernelSpec::exponential_dot(1.0);
  Eigen::MatrixXd one = DistributionSpec::uniform(2).sample(1, 0);
  CHECK_THROWS_AS(covariance_spectrum(one, k), degenerate_input);
  Eigen::MatrixXd big = DistributionSpec::uniform(2).sample(5001, 0);
  CHECK_THROWS_AS(covariance_spectrum(big, k), degenerate_input);
}

TEST_CASE("worst case isb closed form") {
  CHECK(worst_case_isb(2.0, 1.0) == doctest::Approx(std::pow(2.0 / 3.0, 2.0)).epsilon(1e-15));
  CHECK(worst_case_isb(0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(worst_case_isb(2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(worst_case_isb(-1.0, 1.0), std::invalid_argument);
  // h_lambda(mu) is increasing in both arguments.
  CHECK(worst_case_isb(2.0, 0.5) < worst_case_isb(2.0, 1.0));
  CHECK(worst_case_isb(1.0, 1.0) < worst_case_isb(2.0, 1.0));
}

TEST_CASE("brute force sup matches the top eigenvalue form") {
  DistributionSpec u = DistributionSpec::uniform(2);
  Eigen::MatrixXd pts = u.sample(300, 7);
  SpectrumReport rep = covariance_spectrum(pts, KernelSpec::exponential_dot(1.0));
  for (double lambda : {0.01, 0.1, 1.0}) {
    double sup = isb_spectral_bruteforce(rep, lambda, 50, 11);
    CHECK(sup == doctest::Approx(worst_case_isb(rep.eigenvalues[0], lambda)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(isb_spectral_bruteforce(rep, 1.0, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(isb_spectral_bruteforce(rep, 0.0, 5, 0), std::invalid_argument);
}

TEST_CASE("nystrom eigenvalues stabilize toward the operator spectrum") {
  // Uniform S^1 with the exponential kernel: the integral operator's top
  // eigenvalue is I0(1), the next pair is I1(1). Doubling the batch must not
  // move the top estimate by more than 1%.
  KernelSpec k = KernelSpec::exponential_dot(1.0);
  DistributionSpec u = DistributionSpec::uniform(2);
  SpectrumReport a = covariance_spectrum(u.sample(1000, 3), k);
  SpectrumReport b = covariance_spectrum(u.sample(2000, 4), k);
  double i0 = modified_bessel_i(0, 1.0);
  CHECK(std::abs(a.eigenvalues[0] - i0) < 0.02 * i0);
  CHECK(std::abs(b.eigenvalues[0] - i0) < 0.02 * i0);
  CHECK(std::abs(a.eigenvalues[0] - b.eigenvalues[0]) < 0.01 * i0);
}

TEST_CASE("spectrum is rotation invariant") {
  KernelSpec k = KernelSpec::exponential_dot(1.5);
  Eigen::MatrixXd pts = DistributionSpec::uniform(2).sample(400, 9);
  double c = std::cos(0.7), s = std::sin(0.7);
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  Eigen::MatrixXd rotated = pts * rot.transpose();
  SpectrumReport a = covariance_spectrum(pts, k);
  SpectrumReport b = covariance_spectrum(rotated, k);
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("distribution specs validate and sample deterministically") {
  CHECK_THROWS_AS(DistributionSpec::uniform(1), degenerate_input);
  DistributionSpec u = DistributionSpec::uniform(4);
  u.validate_energy();
  Eigen::MatrixXd a = u.sample(20, 5, 1);
  Eigen::MatrixXd b = u.sample(20, 5, 1);
  CHECK(a == b);

  RadialLaw balanced;
  balanced.atoms = {{0.5, 0.5}, {std::sqrt(1.75), 0.5}};
  DistributionSpec r = DistributionSpec::radial(balanced, 3);
  r.validate_energy();
  Eigen::MatrixXd pts = r.sample(1000, 6);
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double nrm = pts.row(i).norm();
    CHECK((std::abs(nrm - 0.5) < 1e-9 || std::abs(nrm - std::sqrt(1.75)) < 1e-9));
  }

  RadialLaw skewed;
  skewed.atoms = {{2.0, 1.0}};
  DistributionSpec bad = DistributionSpec::radial(skewed, 3);
  CHECK_THROWS_AS(bad.validate_energy(), degenerate_input);

  DistributionSpec mix = single_vmf(3, 5.0);
  mix.validate_energy();
  Eigen::MatrixXd mp = mix.sample(2000, 7);
  CHECK((mp * Eigen::VectorXd::Unit(3, 0)).mean() > 0.5);
}

TEST_CASE("concentration raises the top eigenvalue") {
  KernelSpec k = KernelSpec::exponential_dot(1.0);
  std::vector<DistributionSpec> dists = {DistributionSpec::uniform(3), single_vmf(3, 5.0)};
  EigenvalueTable t = compare_top_eigenvalue(dists, k, 500, 6, 21);
  REQUIRE(t.mu1_mean.size() == 2);
  CHECK(t.names[0] == "uniform");
  double pooled = std::hypot(t.mu1_std_error[0], t.mu1_std_error[1]);
  CHECK(t.mu1_mean[1] - t.mu1_mean[0] > 3.0 * pooled);
}

TEST_CASE("compare_top_eigenvalue enforces the energy constraint") {
  KernelSpec k = KernelSpec::exponential_dot(1.0);
  RadialLaw skewed;
  skewed.atoms = {{2.0, 1.0}};
  std::vector<DistributionSpec> dists = {DistributionSpec::radial(skewed, 3)};
  CHECK_THROWS_AS(compare_top_eigenvalue(dists, k, 100, 3, 0), std::invalid_argument);
}

TEST_CASE("linear probe second moment") {
  Eigen::MatrixXd pts = DistributionSpec::uniform(8).sample(100000, 13);
  CHECK(std::abs(linear_probe_top_eig(pts) - 0.125) < 0.005);
  Eigen::MatrixXd conc = single_vmf(8, 5.0).sample(100000, 13);
  CHECK(linear_probe_top_eig(conc) > linear_probe_top_eig(pts) + 0.05);
}

TEST_CASE("mean kernel u-statistic") {
  // d=3 closed form: E[e^{kappa U.V}] = sinh(kappa)/kappa.
  CHECK(uniform_mean_kernel(3, 1.0) == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
  CHECK(uniform_mean_kernel(2, 1.0) ==
        doctest::Approx(modified_bessel_i(0, 1.0)).epsilon(1e-12));
  // kappa -> 0 limit is 1 for every d.
  CHECK(uniform_mean_kernel(7, 1e-9) == doctest::Approx(1.0).epsilon(1e-8));

  DistributionSpec u = DistributionSpec::uniform(3);
  KernelSpec k = KernelSpec::exponential_dot(1.0);
  MeanKernelEstimate est = mean_kernel_check(u, k, 2000, 3);
  double g = std::sinh(1.0);
  CHECK(est.std_error > 0.0);
  CHECK(est.value >= g - 3.0 * est.std_error);
  CHECK(std::abs(est.value - g) < 4.0 * est.std_error);

  CHECK_THROWS_AS(mean_kernel_check(u, KernelSpec::linear(), 100, 0), degenerate_input);
}

}
