#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "spherelab/rng.hpp"

namespace spherelab {

// Rows are points in R^d. on_sphere marks clouds whose rows are unit vectors;
// samplers set it, normalize() enforces it, sample_radial clears it unless the
// law is degenerate at radius 1.
struct PointCloud {
  Eigen::MatrixXd data;
  bool on_sphere = false;

  Eigen::Index n() const { return data.rows(); }
  Eigen::Index dim() const { return data.cols(); }
};

// Discrete radial law: atoms of (radius, probability).
struct RadialLaw {
  std::vector<std::pair<double, double>> atoms;

  double second_moment() const;  // E[R^2]
  void validate() const;         // radii >= 0, weights >= 0 summing to 1
};

// All samplers are deterministic in (arguments, seed, stream). `stream`
// selects an independent substream of the same seed; callers doing Monte
// Carlo replications pass the replication index there.
PointCloud sample_uniform_sphere(int d, int n, std::uint64_t seed, std::uint64_t stream = 0);

// vMF via the Wood rejection sampler for the cosine, tangent direction uniform.
PointCloud sample_vmf(const Eigen::VectorXd& mean_direction, double kappa, int n,
                      std::uint64_t seed, std::uint64_t stream = 0);

struct VmfComponent {
  Eigen::VectorXd mu;
  double kappa;
  double weight;
};

PointCloud sample_vmf_mixture(const std::vector<VmfComponent>& components, int n,
                              std::uint64_t seed, std::uint64_t stream = 0);

PointCloud sample_radial(const PointCloud& base, const RadialLaw& law, std::uint64_t seed,
                         std::uint64_t stream = 0);

PointCloud normalize(const Eigen::MatrixXd& z);

Eigen::VectorXd project(const PointCloud& points, const Eigen::VectorXd& direction);

// Single vMF cosine draw (exposed for reuse by the manifold samplers).
double vmf_cosine(double kappa, int d, rng_stream& rng);

// Uniform unit vector orthogonal to mu.
Eigen::VectorXd tangent_uniform(const Eigen::VectorXd& mu, rng_stream& rng);

}  // namespace spherelab
