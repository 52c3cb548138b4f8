#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace spherelab {

enum class manifold_kind { circle, sphere2, euclidean };

// The three concrete manifolds the k-NN lab runs on. Circle and Sphere2 are
// the unit circle/sphere embedded in R^2/R^3; Euclidean is flat R^m.
struct ManifoldSpec {
  manifold_kind kind;
  int m;        // intrinsic dimension
  int ambient;  // embedding dimension

  static ManifoldSpec circle() { return {manifold_kind::circle, 1, 2}; }
  static ManifoldSpec sphere2() { return {manifold_kind::sphere2, 2, 3}; }
  static ManifoldSpec euclidean(int m);

  double volume() const;  // 2*pi / 4*pi; throws for euclidean
  double scal() const;    // scalar curvature: 0 (circle), 2 (sphere2), 0 (euclidean)
  double geodesic(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
};

enum class density_kind { uniform, vmf, gaussian_euclidean };

// Sampling density on a manifold with analytic derivative data: pdf, the
// intrinsic (tangential) gradient expressed in ambient coordinates, and the
// Laplace-Beltrami Laplacian. Circle densities also expose angle-space
// evaluators and an angle sampler for the fast k-NN paths.
class DensitySpec {
 public:
  static DensitySpec uniform(const ManifoldSpec& manifold);
  static DensitySpec vmf(const ManifoldSpec& manifold, const Eigen::VectorXd& mu, double kappa);
  static DensitySpec gaussian_euclidean(const Eigen::VectorXd& mean, double sigma2);

  const ManifoldSpec& manifold() const { return manifold_; }
  density_kind kind() const { return kind_; }
  const char* name() const;
  double vmf_kappa() const { return kappa_; }
  const Eigen::VectorXd& gaussian_mean() const { return mu_; }

  double pdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;
  double laplacian(const Eigen::VectorXd& x) const;

  Eigen::MatrixXd sample(int n, std::uint64_t seed, std::uint64_t stream = 0) const;

  // Circle specializations (theta parametrization, arclength = angle).
  double pdf_angle(double theta) const;
  double dpdf_angle(double theta) const;
  double d2pdf_angle(double theta) const;
  Eigen::VectorXd sample_angles(int n, std::uint64_t seed, std::uint64_t stream = 0) const;

 private:
  DensitySpec(const ManifoldSpec& manifold, density_kind kind) : manifold_(manifold), kind_(kind) {}

  ManifoldSpec manifold_;
  density_kind kind_;
  Eigen::VectorXd mu_;      // vmf mean direction / gaussian mean
  double kappa_ = 0.0;      // vmf concentration
  double mu_angle_ = 0.0;   // vmf on circle
  double log_norm_ = 0.0;   // vmf normalization
  double sigma2_ = 1.0;     // gaussian
};

enum class target_fn_kind {
  circle_cos,
  circle_sin,
  sphere2_y1,
  sphere2_y2,
  euclid_coordinate,
  euclid_sqnorm,
  circle_ramp,
};

// Regression targets with analytic intrinsic gradient and Laplacian.
// circle_ramp is the two-piece family used by the minimax probe: a curvature
// wave h around theta=0 saturating the Laplacian budget plus slope R times a
// mollified unit-slope tent s around theta=pi, with disjoint supports. Its
// construction is documented at the implementation.
class TargetFunctionSpec {
 public:
  static TargetFunctionSpec circle_cos();
  static TargetFunctionSpec circle_sin();
  static TargetFunctionSpec sphere2_y1();
  static TargetFunctionSpec sphere2_y2();
  static TargetFunctionSpec coordinate(int axis, int m);
  static TargetFunctionSpec squared_norm(int m);
  static TargetFunctionSpec circle_ramp(double c, double slope);

  target_fn_kind kind() const { return kind_; }
  double ramp_slope() const { return slope_; }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd grad(const Eigen::VectorXd& x) const;  // intrinsic, ambient coords
  double laplacian(const Eigen::VectorXd& x) const;

  // Circle angle-space evaluators.
  double value_angle(double theta) const;
  double dvalue_angle(double theta) const;
  double d2value_angle(double theta) const;

  // Ramp decomposition f = h + slope * s, used by the minimax probe to share
  // neighbor windows across the slope grid.
  double ramp_h_angle(double theta) const;
  double ramp_s_angle(double theta) const;

 private:
  explicit TargetFunctionSpec(target_fn_kind kind) : kind_(kind) {}

  target_fn_kind kind_;
  int axis_ = 0;
  int m_ = 1;
  double slope_ = 0.0;  // ramp R

  // Piecewise-linear curvature wave h'' of the ramp: per segment the local
  // offset/slope of h'' plus accumulated h and h' at the segment start.
  struct HSegment {
    double x0, g0, g1, acc_h1, acc_h;
  };
  std::vector<HSegment> h_segments_;
  double h_support_ = 0.0;
  double h_tail_ = 0.0;  // G2(L), subtracted so h vanishes at the support edge
};

// A(m,k,n) = (1/(4(m+2)^2)) * (k Gamma(1+m/2) / (n pi^{m/2}))^{4/m}.
struct IsbConstant {
  int m;
  double k;
  double n;

  double value() const;
};

// Deterministic integration grids used by the ISB evaluations.
Eigen::VectorXd circle_grid(int count);           // midpoint angles on [0, 2pi)
Eigen::MatrixXd fibonacci_sphere_grid(int count); // near-uniform points on S^2

// Circle embedding helpers.
Eigen::Vector2d circle_point(double theta);
double circle_angle(const Eigen::Vector2d& x);

}  // namespace spherelab
