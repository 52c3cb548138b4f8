#pragma once

#include <Eigen/Core>
#include <utility>

namespace spherelab {

// Nodes and weights of the n-point Gauss-Legendre rule on [-1,1].
// Newton iteration on the Legendre recurrence; accurate to ~1e-15.
std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n);

// Modified Bessel function I_n(x) for integer n >= 0, by power series.
// Intended range |x| <= ~60; plenty for the concentration values used here.
double modified_bessel_i(int n, double x);

// Bessel function J_nu(x) for real nu >= 0, by power series. Accurate for
// moderate arguments (|x| <= ~15), which covers the frequency ranges probed
// by the characteristic-function tests.
double bessel_j(double nu, double x);

}  // namespace spherelab
