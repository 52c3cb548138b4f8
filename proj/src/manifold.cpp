#include "spherelab/manifold.hpp"

#include <algorithm>
#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/rng.hpp"
#include "spherelab/special_functions.hpp"
#include "spherelab/sphere_geometry.hpp"

namespace spherelab {

namespace {

constexpr std::uint32_t kTagDensitySample = 0x31;

double wrap_pi(double a) {
  // wrap to (-pi, pi]
  double y = std::remainder(a, 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  return y;
}

// Quintic smoothstep and its pieces.
double smoothstep5(double u) { return u * u * u * (10.0 + u * (-15.0 + 6.0 * u)); }
double smoothstep5_d(double u) { return 30.0 * u * u * (1.0 - u) * (1.0 - u); }
double smoothstep5_i(double u) {  // integral from 0
  return u * u * u * u * (2.5 + u * (-3.0 + u));
}

// Frozen geometry of the ramp family. The tent s lives in y = theta - pi:
// s' ramps 0 -> 1 over [-Y3,-Y2], holds 1 on the flank [-Y2,-Y1], swings
// 1 -> -1 across [-Y1,Y1], holds -1, ramps back to 0; all corners use the
// quintic smoothstep, so |s''| <= 3.75/kTentWidth and s is C^2. The
// curvature wave h lives in |theta| <= kWaveSupport: h'' is a trapezoid wave
// of M alternating lobes at amplitude 0.995c, whose half-integrals vanish at
// the support edge, making h itself C^2 and compactly supported. The two
// supports are disjoint, so the Laplacian budget splits exactly into the
// h part (0.995c) and the slope part (3.75 R / kTentWidth).
constexpr double kTentWidth = 0.625;   // w: corner mollification width
constexpr double kTentFlank = 0.7;     // straight unit-slope flank length
constexpr double kWaveSupport = 1.2;   // L: half-support of h
constexpr int kWaveLobes = 4;          // M: lobes per half
constexpr double kWaveLobeLen = 0.3;   // P2 = L / M
constexpr double kWaveRamp = 0.06;     // tau: linear transition length

double tent_y1() { return 0.5 * kTentWidth; }
double tent_y2() { return 0.5 * kTentWidth + kTentFlank; }
double tent_y3() { return 1.5 * kTentWidth + kTentFlank; }

double tent_value(double y) {
  double a = std::abs(y);
  double w = kTentWidth;
  if (a >= tent_y3()) return 0.0;
  if (a >= tent_y2()) {
    double u = (a - tent_y2()) / w;
    return w * (smoothstep5_i(u) - u + 0.5);
  }
  if (a >= tent_y1()) return 0.5 * w + (tent_y2() - a);
  double u = (y + tent_y1()) / w;
  return 0.5 * w + kTentFlank - w * (2.0 * smoothstep5_i(u) - u);
}

double tent_deriv(double y) {
  double a = std::abs(y);
  double sign = y < 0 ? -1.0 : 1.0;
  double w = kTentWidth;
  if (a >= tent_y3()) return 0.0;
  if (a >= tent_y2()) return sign * (smoothstep5((a - tent_y2()) / w) - 1.0);
  if (a >= tent_y1()) return -sign;
  return 1.0 - 2.0 * smoothstep5((y + tent_y1()) / w);
}

double tent_second(double y) {
  double a = std::abs(y);
  double w = kTentWidth;
  if (a >= tent_y3()) return 0.0;
  if (a >= tent_y2()) return smoothstep5_d((a - tent_y2()) / w) / w;
  if (a >= tent_y1()) return 0.0;
  return -2.0 * smoothstep5_d((y + tent_y1()) / w) / w;
}

}  // namespace

ManifoldSpec ManifoldSpec::euclidean(int m) {
  if (m < 1) throw degenerate_input("ManifoldSpec: euclidean dimension must be >= 1");
  return {manifold_kind::euclidean, m, m};
}

double ManifoldSpec::volume() const {
  switch (kind) {
    case manifold_kind::circle: return 2.0 * M_PI;
    case manifold_kind::sphere2: return 4.0 * M_PI;
    default: throw degenerate_input("ManifoldSpec: euclidean space has no finite volume");
  }
}

double ManifoldSpec::scal() const {
  return kind == manifold_kind::sphere2 ? 2.0 : 0.0;
}

double ManifoldSpec::geodesic(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  if (a.size() != ambient || b.size() != ambient)
    throw degenerate_input("geodesic: dimension mismatch");
  if (kind == manifold_kind::euclidean) return (a - b).norm();
  double c = a.dot(b);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

const char* DensitySpec::name() const {
  switch (kind_) {
    case density_kind::uniform: return "uniform";
    case density_kind::vmf: return "vmf";
    default: return "gaussian";
  }
}

DensitySpec DensitySpec::uniform(const ManifoldSpec& manifold) {
  if (manifold.kind == manifold_kind::euclidean)
    throw degenerate_input("DensitySpec: no uniform density on euclidean space");
  return DensitySpec(manifold, density_kind::uniform);
}

DensitySpec DensitySpec::vmf(const ManifoldSpec& manifold, const Eigen::VectorXd& mu,
                             double kappa) {
  if (manifold.kind == manifold_kind::euclidean)
    throw degenerate_input("DensitySpec: vmf requires a sphere");
  if (kappa < 0) throw degenerate_input("DensitySpec: kappa must be >= 0");
  if (mu.size() != manifold.ambient || std::abs(mu.norm() - 1.0) > 1e-10)
    throw degenerate_input("DensitySpec: vmf mean must be a unit vector of the ambient dim");
  DensitySpec d(manifold, density_kind::vmf);
  d.mu_ = mu;
  d.kappa_ = kappa;
  if (manifold.kind == manifold_kind::circle) {
    d.mu_angle_ = std::atan2(mu[1], mu[0]);
    d.log_norm_ = std::log(2.0 * M_PI * modified_bessel_i(0, kappa));
  }
  return d;
}

DensitySpec DensitySpec::gaussian_euclidean(const Eigen::VectorXd& mean, double sigma2) {
  if (sigma2 <= 0) throw degenerate_input("DensitySpec: sigma2 must be > 0");
  if (mean.size() < 1) throw degenerate_input("DensitySpec: empty mean");
  DensitySpec d(ManifoldSpec::euclidean(static_cast<int>(mean.size())),
                density_kind::gaussian_euclidean);
  d.mu_ = mean;
  d.sigma2_ = sigma2;
  return d;
}

double DensitySpec::pdf_angle(double theta) const {
  if (manifold_.kind != manifold_kind::circle)
    throw degenerate_input("pdf_angle: circle densities only");
  if (kind_ == density_kind::uniform) return 1.0 / (2.0 * M_PI);
  return std::exp(kappa_ * std::cos(theta - mu_angle_) - log_norm_);
}

double DensitySpec::dpdf_angle(double theta) const {
  if (kind_ == density_kind::uniform) return 0.0;
  return -kappa_ * std::sin(theta - mu_angle_) * pdf_angle(theta);
}

double DensitySpec::d2pdf_angle(double theta) const {
  if (kind_ == density_kind::uniform) return 0.0;
  double s = std::sin(theta - mu_angle_), c = std::cos(theta - mu_angle_);
  return (kappa_ * kappa_ * s * s - kappa_ * c) * pdf_angle(theta);
}

double DensitySpec::pdf(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case density_kind::uniform:
      return 1.0 / manifold_.volume();
    case density_kind::vmf: {
      if (manifold_.kind == manifold_kind::circle) return pdf_angle(circle_angle(x.head<2>()));
      if (kappa_ == 0.0) return 1.0 / (4.0 * M_PI);
      double t = mu_.dot(x);
      return kappa_ * std::exp(kappa_ * t) / (4.0 * M_PI * std::sinh(kappa_));
    }
    default: {
      double q = (x - mu_).squaredNorm();
      int m = manifold_.m;
      return std::exp(-0.5 * q / sigma2_) / std::pow(2.0 * M_PI * sigma2_, 0.5 * m);
    }
  }
}

Eigen::VectorXd DensitySpec::grad(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case density_kind::uniform:
      return Eigen::VectorXd::Zero(manifold_.ambient);
    case density_kind::vmf: {
      if (manifold_.kind == manifold_kind::circle) {
        double theta = circle_angle(x.head<2>());
        Eigen::VectorXd tangent(2);
        tangent << -std::sin(theta), std::cos(theta);
        return dpdf_angle(theta) * tangent;
      }
      double t = mu_.dot(x);
      return kappa_ * pdf(x) * (mu_ - t * x);
    }
    default:
      return -pdf(x) / sigma2_ * (x - mu_);
  }
}

double DensitySpec::laplacian(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case density_kind::uniform:
      return 0.0;
    case density_kind::vmf: {
      if (manifold_.kind == manifold_kind::circle)
        return d2pdf_angle(circle_angle(x.head<2>()));
      double t = mu_.dot(x);
      return ((1.0 - t * t) * kappa_ * kappa_ - 2.0 * t * kappa_) * pdf(x);
    }
    default: {
      double q = (x - mu_).squaredNorm();
      return pdf(x) * (q / (sigma2_ * sigma2_) - manifold_.m / sigma2_);
    }
  }
}

Eigen::VectorXd DensitySpec::sample_angles(int n, std::uint64_t seed, std::uint64_t stream) const {
  if (manifold_.kind != manifold_kind::circle)
    throw degenerate_input("sample_angles: circle densities only");
  if (n < 1) throw degenerate_input("sample_angles: n must be >= 1");
  rng_stream rng = rng_stream::of(seed, kTagDensitySample, stream);
  Eigen::VectorXd out(n);
  if (kind_ == density_kind::uniform || kappa_ == 0.0) {
    for (int i = 0; i < n; ++i) out[i] = 2.0 * M_PI * rng.uniform01();
    return out;
  }
  for (int i = 0; i < n; ++i) {
    double c = vmf_cosine(kappa_, 2, rng);
    double phi = std::acos(std::clamp(c, -1.0, 1.0));
    double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    out[i] = mu_angle_ + sign * phi;
  }
  return out;
}

Eigen::MatrixXd DensitySpec::sample(int n, std::uint64_t seed, std::uint64_t stream) const {
  if (n < 1) throw degenerate_input("DensitySpec::sample: n must be >= 1");
  if (manifold_.kind == manifold_kind::circle) {
    Eigen::VectorXd theta = sample_angles(n, seed, stream);
    Eigen::MatrixXd out(n, 2);
    for (int i = 0; i < n; ++i) out.row(i) = circle_point(theta[i]).transpose();
    return out;
  }
  rng_stream rng = rng_stream::of(seed, kTagDensitySample, stream);
  if (manifold_.kind == manifold_kind::sphere2) {
    Eigen::MatrixXd out(n, 3);
    if (kind_ == density_kind::uniform || kappa_ == 0.0) {
      for (int i = 0; i < n; ++i) {
        Eigen::Vector3d g(rng.normal(), rng.normal(), rng.normal());
        while (g.norm() == 0.0) g = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal());
        out.row(i) = g.transpose() / g.norm();
      }
      return out;
    }
    for (int i = 0; i < n; ++i) {
      double t = vmf_cosine(kappa_, 3, rng);
      Eigen::VectorXd v = tangent_uniform(mu_, rng);
      out.row(i) = (t * mu_ + std::sqrt(std::max(0.0, 1.0 - t * t)) * v).transpose();
    }
    return out;
  }
  int m = manifold_.m;
  double sigma = std::sqrt(sigma2_);
  Eigen::MatrixXd out(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out(i, j) = mu_[j] + sigma * rng.normal();
  return out;
}

TargetFunctionSpec TargetFunctionSpec::circle_cos() {
  return TargetFunctionSpec(target_fn_kind::circle_cos);
}
TargetFunctionSpec TargetFunctionSpec::circle_sin() {
  return TargetFunctionSpec(target_fn_kind::circle_sin);
}
TargetFunctionSpec TargetFunctionSpec::sphere2_y1() {
  return TargetFunctionSpec(target_fn_kind::sphere2_y1);
}
TargetFunctionSpec TargetFunctionSpec::sphere2_y2() {
  return TargetFunctionSpec(target_fn_kind::sphere2_y2);
}

TargetFunctionSpec TargetFunctionSpec::coordinate(int axis, int m) {
  if (axis < 0 || axis >= m) throw degenerate_input("coordinate target: axis out of range");
  TargetFunctionSpec f(target_fn_kind::euclid_coordinate);
  f.axis_ = axis;
  f.m_ = m;
  return f;
}

TargetFunctionSpec TargetFunctionSpec::squared_norm(int m) {
  if (m < 1) throw degenerate_input("squared_norm target: m must be >= 1");
  TargetFunctionSpec f(target_fn_kind::euclid_sqnorm);
  f.m_ = m;
  return f;
}

TargetFunctionSpec TargetFunctionSpec::circle_ramp(double c, double slope) {
  if (c < 0) throw degenerate_input("circle_ramp: Laplacian bound must be >= 0");
  if (slope < 0) throw degenerate_input("circle_ramp: slope must be >= 0");
  TargetFunctionSpec f(target_fn_kind::circle_ramp);
  f.slope_ = slope;

  // Build h'' as the trapezoid wave and integrate it twice, segment by
  // segment, carrying exact polynomial accumulators.
  double amp = 0.995 * c;
  double acc_h1 = 0.0, acc_h = 0.0;
  auto push = [&](double x0, double len, double g0, double g1) {
    f.h_segments_.push_back({x0, g0, g1, acc_h1, acc_h});
    acc_h += acc_h1 * len + 0.5 * g0 * len * len + g1 * len * len * len / 6.0;
    acc_h1 += g0 * len + 0.5 * g1 * len * len;
  };
  for (int j = 0; j < kWaveLobes; ++j) {
    double s = (j % 2 == 0) ? 1.0 : -1.0;
    double base = j * kWaveLobeLen;
    push(base, kWaveRamp, 0.0, s * amp / kWaveRamp);
    push(base + kWaveRamp, kWaveLobeLen - 2.0 * kWaveRamp, s * amp, 0.0);
    push(base + kWaveLobeLen - kWaveRamp, kWaveRamp, s * amp, -s * amp / kWaveRamp);
  }
  f.h_support_ = kWaveLobes * kWaveLobeLen;
  f.h_tail_ = acc_h;
  return f;
}

double TargetFunctionSpec::ramp_h_angle(double theta) const {
  double y = wrap_pi(theta);
  double a = std::abs(y);
  if (a >= h_support_ || h_segments_.empty()) return 0.0;
  auto it = std::upper_bound(h_segments_.begin(), h_segments_.end(), a,
                             [](double v, const HSegment& s) { return v < s.x0; });
  const HSegment& seg = *(it - 1);
  double dx = a - seg.x0;
  double h = seg.acc_h + seg.acc_h1 * dx + 0.5 * seg.g0 * dx * dx + seg.g1 * dx * dx * dx / 6.0;
  return h - h_tail_;
}

double TargetFunctionSpec::ramp_s_angle(double theta) const {
  return tent_value(wrap_pi(theta - M_PI));
}

double TargetFunctionSpec::value_angle(double theta) const {
  switch (kind_) {
    case target_fn_kind::circle_cos: return std::cos(theta);
    case target_fn_kind::circle_sin: return std::sin(theta);
    case target_fn_kind::circle_ramp:
      return ramp_h_angle(theta) + slope_ * ramp_s_angle(theta);
    default: throw degenerate_input("value_angle: circle targets only");
  }
}

double TargetFunctionSpec::dvalue_angle(double theta) const {
  switch (kind_) {
    case target_fn_kind::circle_cos: return -std::sin(theta);
    case target_fn_kind::circle_sin: return std::cos(theta);
    case target_fn_kind::circle_ramp: {
      double y = wrap_pi(theta);
      double a = std::abs(y);
      double dh = 0.0;
      if (a < h_support_ && !h_segments_.empty()) {
        auto it = std::upper_bound(h_segments_.begin(), h_segments_.end(), a,
                                   [](double v, const HSegment& s) { return v < s.x0; });
        const HSegment& seg = *(it - 1);
        double dx = a - seg.x0;
        double g1v = seg.acc_h1 + seg.g0 * dx + 0.5 * seg.g1 * dx * dx;
        dh = (y < 0 ? -1.0 : 1.0) * g1v;
      }
      return dh + slope_ * tent_deriv(wrap_pi(theta - M_PI));
    }
    default: throw degenerate_input("dvalue_angle: circle targets only");
  }
}

double TargetFunctionSpec::d2value_angle(double theta) const {
  switch (kind_) {
    case target_fn_kind::circle_cos: return -std::cos(theta);
    case target_fn_kind::circle_sin: return -std::sin(theta);
    case target_fn_kind::circle_ramp: {
      double a = std::abs(wrap_pi(theta));
      double d2h = 0.0;
      if (a < h_support_ && !h_segments_.empty()) {
        auto it = std::upper_bound(h_segments_.begin(), h_segments_.end(), a,
                                   [](double v, const HSegment& s) { return v < s.x0; });
        const HSegment& seg = *(it - 1);
        double dx = a - seg.x0;
        d2h = seg.g0 + seg.g1 * dx;
      }
      return d2h + slope_ * tent_second(wrap_pi(theta - M_PI));
    }
    default: throw degenerate_input("d2value_angle: circle targets only");
  }
}

double TargetFunctionSpec::value(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case target_fn_kind::circle_cos:
    case target_fn_kind::circle_sin:
    case target_fn_kind::circle_ramp:
      return value_angle(circle_angle(x.head<2>()));
    case target_fn_kind::sphere2_y1: return x[2];
    case target_fn_kind::sphere2_y2: return x[0] * x[1];
    case target_fn_kind::euclid_coordinate: return x[axis_];
    default: return x.squaredNorm();
  }
}

Eigen::VectorXd TargetFunctionSpec::grad(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case target_fn_kind::circle_cos:
    case target_fn_kind::circle_sin:
    case target_fn_kind::circle_ramp: {
      double theta = circle_angle(x.head<2>());
      Eigen::VectorXd tangent(2);
      tangent << -std::sin(theta), std::cos(theta);
      return dvalue_angle(theta) * tangent;
    }
    case target_fn_kind::sphere2_y1: {
      Eigen::VectorXd g(3);
      g << 0, 0, 1;
      return g - x[2] * x;
    }
    case target_fn_kind::sphere2_y2: {
      Eigen::VectorXd g(3);
      g << x[1], x[0], 0;
      return g - 2.0 * x[0] * x[1] * x;
    }
    case target_fn_kind::euclid_coordinate: {
      Eigen::VectorXd g = Eigen::VectorXd::Zero(m_);
      g[axis_] = 1.0;
      return g;
    }
    default: return 2.0 * x;
  }
}

double TargetFunctionSpec::laplacian(const Eigen::VectorXd& x) const {
  switch (kind_) {
    case target_fn_kind::circle_cos:
    case target_fn_kind::circle_sin:
    case target_fn_kind::circle_ramp:
      return d2value_angle(circle_angle(x.head<2>()));
    case target_fn_kind::sphere2_y1: return -2.0 * x[2];
    case target_fn_kind::sphere2_y2: return -6.0 * x[0] * x[1];
    case target_fn_kind::euclid_coordinate: return 0.0;
    default: return 2.0 * m_;
  }
}

double IsbConstant::value() const {
  if (m < 1 || k <= 0 || n <= 0) throw degenerate_input("IsbConstant: invalid parameters");
  double base = k * std::tgamma(1.0 + 0.5 * m) / (n * std::pow(M_PI, 0.5 * m));
  return std::pow(base, 4.0 / m) / (4.0 * (m + 2.0) * (m + 2.0));
}

Eigen::VectorXd circle_grid(int count) {
  if (count < 1) throw degenerate_input("circle_grid: count must be >= 1");
  Eigen::VectorXd theta(count);
  for (int i = 0; i < count; ++i) theta[i] = 2.0 * M_PI * (i + 0.5) / count;
  return theta;
}

Eigen::MatrixXd fibonacci_sphere_grid(int count) {
  if (count < 1) throw degenerate_input("fibonacci_sphere_grid: count must be >= 1");
  Eigen::MatrixXd pts(count, 3);
  double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    double z = 1.0 - (2.0 * i + 1.0) / count;
    double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    double phi = golden_angle * i;
    pts(i, 0) = r * std::cos(phi);
    pts(i, 1) = r * std::sin(phi);
    pts(i, 2) = z;
  }
  return pts;
}

Eigen::Vector2d circle_point(double theta) { return {std::cos(theta), std::sin(theta)}; }

double circle_angle(const Eigen::Vector2d& x) { return std::atan2(x[1], x[0]); }

}  // namespace spherelab
