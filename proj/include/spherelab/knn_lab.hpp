#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "spherelab/manifold.hpp"

namespace spherelab {

// Mean of targets over the k nearest data rows to query, distances taken in
// the manifold metric (chordal and geodesic orderings agree on spheres).
// Ties break toward the smallest sample index.
double knn_regress(const ManifoldSpec& manifold, const Eigen::VectorXd& query,
                   const Eigen::MatrixXd& data, const Eigen::VectorXd& targets, int k);

// Local k-NN radius law: leading term r0 = (k Gamma(1+m/2) / (n p(x) pi^{m/2}))^{1/m},
// optionally with the curvature/density correction
// r = r0 - r0^3 (lap p / p - Scal/3) / (2 m (m+2)).
double knn_radius(const DensitySpec& density, const Eigen::VectorXd& x, double k, double n,
                  bool curvature_correction = false);

// Leading pointwise bias (r^2 / (2(m+2))) (lap f + 2 <grad f, grad p> / p).
double bias_leading_term(const ManifoldSpec& manifold, const DensitySpec& density,
                         const TargetFunctionSpec& target_fn, const Eigen::VectorXd& x,
                         double k, double n);

struct McEstimate {
  double mean;
  double std_error;
};

// Monte Carlo pointwise bias: mean over reps of knn estimate minus truth.
McEstimate pointwise_bias_mc(const ManifoldSpec& manifold, const DensitySpec& density,
                             const TargetFunctionSpec& target_fn, const Eigen::VectorXd& x,
                             int k, int n, int reps, std::uint64_t seed);

// Leading integrated squared bias
// A(m,k,n) * integral (lap f + 2 <grad f, grad p> / p)^2 p^{1-4/m} dvol
// over a dense deterministic grid (Circle 4096 angles, Sphere2 Fibonacci 8192).
double isb_leading(const ManifoldSpec& manifold, const DensitySpec& density,
                   const TargetFunctionSpec& target_fn, double k, double n);

// Monte Carlo ISB over query_grid deterministic query points: the grid-weighted
// sum of p(q) times the debiased squared mean bias at q. The debiasing
// (mean^2 - var/reps) removes the Monte Carlo noise inflation of mean^2.
double isb_mc(const ManifoldSpec& manifold, const DensitySpec& density,
              const TargetFunctionSpec& target_fn, int k, int n, int reps, int query_grid,
              std::uint64_t seed);

struct MinimaxTable {
  std::vector<std::string> density_names;
  std::vector<double> slopes;
  Eigen::MatrixXd isb;        // densities x slopes
  Eigen::MatrixXd std_error;  // delta-method error of each entry
};

// ISB of the ramp family f_R across densities and slopes R, sharing one set of
// neighbor windows per density (the estimate is linear in f, so each slope is
// a linear combination of the h-part and s-part window sums). Every f_R must
// satisfy the Laplacian budget c, asserted on a dense angle grid.
MinimaxTable minimax_probe(const ManifoldSpec& manifold, const std::vector<DensitySpec>& densities,
                           double c, const std::vector<double>& slope_grid, int k, int n, int reps,
                           std::uint64_t seed);

struct AnisotropyReport {
  Eigen::VectorXd shift;            // mean (neighbor centroid - query)
  Eigen::VectorXd shift_std_error;  // per coordinate, across reps
  double eigen_ratio;               // neighbor scatter eigenvalue ratio, largest/smallest
};

// Neighborhood geometry at a query: mean centroid shift of the k nearest
// neighbors plus the eccentricity of their pooled scatter. For mean-zero
// Gaussian distributions on R^2, ring_average > 1 averages the estimate over
// that many rotated copies of the query (valid by rotational symmetry), which
// shrinks the noise by roughly its square root.
AnisotropyReport neighborhood_anisotropy(const DensitySpec& distribution,
                                         const Eigen::VectorXd& query, int k, int n, int reps,
                                         std::uint64_t seed, int ring_average = 0);

}  // namespace spherelab
