#include "spherelab/special_functions.hpp"

#include <cmath>

#include "spherelab/errors.hpp"

namespace spherelab {

std::pair<Eigen::VectorXd, Eigen::VectorXd> gauss_legendre(int n) {
  if (n < 1) throw degenerate_input("gauss_legendre: n must be >= 1");
  Eigen::VectorXd x(n), w(n);
  for (int i = 0; i < n; ++i) {
    // Tricomi-style initial guess, then Newton on P_n.
    double xi = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = xi;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * xi * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (xi * p1 - p0) / (xi * xi - 1.0);
      double dx = p1 / dp;
      xi -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    x[i] = xi;
    w[i] = 2.0 / ((1.0 - xi * xi) * dp * dp);
  }
  return {x, w};
}

double modified_bessel_i(int n, double x) {
  if (n < 0) throw degenerate_input("modified_bessel_i: order must be >= 0");
  if (x == 0.0) return n == 0 ? 1.0 : 0.0;
  double half = 0.5 * x;
  // term_m = (x/2)^{2m+n} / (m! (m+n)!)
  double term = std::exp(n * std::log(std::abs(half)) - std::lgamma(n + 1.0));
  if (n % 2 == 1 && x < 0) term = -term;
  double sum = term;
  double q = half * half;
  for (int m = 1; m < 500; ++m) {
    term *= q / (m * (m + static_cast<double>(n)));
    sum += term;
    if (std::abs(term) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

double bessel_j(double nu, double x) {
  if (nu < 0) throw degenerate_input("bessel_j: order must be >= 0");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  double half = 0.5 * x;
  double term = std::exp(nu * std::log(std::abs(half)) - std::lgamma(nu + 1.0));
  double sum = term;
  double q = half * half;
  for (int m = 1; m < 500; ++m) {
    term *= -q / (m * (m + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * (std::abs(sum) + 1e-300)) break;
  }
  return sum;
}

}  // namespace spherelab
