#include "spherelab/sphere_geometry.hpp"

#include <cmath>

#include "spherelab/errors.hpp"

namespace spherelab {

namespace {

// Substream tags; keep distinct across every consumer of rng_stream::of.
constexpr std::uint32_t kTagUniform = 0x11;
constexpr std::uint32_t kTagVmf = 0x12;
constexpr std::uint32_t kTagMixture = 0x13;
constexpr std::uint32_t kTagRadial = 0x14;

Eigen::VectorXd gaussian_row(int d, rng_stream& rng) {
  Eigen::VectorXd g(d);
  for (int j = 0; j < d; ++j) g[j] = rng.normal();
  return g;
}

}  // namespace

double RadialLaw::second_moment() const {
  double s = 0.0;
  for (const auto& [r, w] : atoms) s += w * r * r;
  return s;
}

void RadialLaw::validate() const {
  if (atoms.empty()) throw degenerate_input("radial law: no atoms");
  double total = 0.0;
  for (const auto& [r, w] : atoms) {
    if (r < 0) throw degenerate_input("radial law: negative radius atom");
    if (w < 0) throw degenerate_input("radial law: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw degenerate_input("radial law: weights must sum to 1");
}

PointCloud sample_uniform_sphere(int d, int n, std::uint64_t seed, std::uint64_t stream) {
  if (d < 2) throw degenerate_input("sample_uniform_sphere: d must be >= 2");
  if (n < 1) throw degenerate_input("sample_uniform_sphere: n must be >= 1");
  rng_stream rng = rng_stream::of(seed, kTagUniform, stream);
  PointCloud cloud;
  cloud.data.resize(n, d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd g = gaussian_row(d, rng);
    double norm = g.norm();
    while (norm == 0.0) {  // probability zero, but stay well defined
      g = gaussian_row(d, rng);
      norm = g.norm();
    }
    cloud.data.row(i) = g.transpose() / norm;
  }
  cloud.on_sphere = true;
  return cloud;
}

double vmf_cosine(double kappa, int d, rng_stream& rng) {
  // Wood's rejection scheme for the cosine t = mu.x of a vMF draw. The
  // Beta((d-1)/2,(d-1)/2) proposal is drawn as (1+V)/2 where V is the first
  // coordinate of a uniform direction in R^d (its law is exactly that Beta
  // after the affine map), which avoids a gamma sampler.
  double dm1 = d - 1.0;
  double b = dm1 / (2.0 * kappa + std::sqrt(4.0 * kappa * kappa + dm1 * dm1));
  double x0 = (1.0 - b) / (1.0 + b);
  double c = kappa * x0 + dm1 * std::log(1.0 - x0 * x0);
  for (int iter = 0; iter < 10000; ++iter) {
    double num = rng.normal();
    double ss = num * num;
    for (int j = 1; j < d; ++j) {
      double g = rng.normal();
      ss += g * g;
    }
    double z = 0.5 * (1.0 + (ss > 0 ? num / std::sqrt(ss) : 0.0));
    double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    double u = rng.uniform01_open();
    if (kappa * w + dm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
  throw numerical_error("vmf_cosine: rejection sampler failed to accept");
}

Eigen::VectorXd tangent_uniform(const Eigen::VectorXd& mu, rng_stream& rng) {
  int d = static_cast<int>(mu.size());
  Eigen::VectorXd v = gaussian_row(d, rng);
  v -= v.dot(mu) * mu;
  double norm = v.norm();
  while (norm < 1e-14) {
    v = gaussian_row(d, rng);
    v -= v.dot(mu) * mu;
    norm = v.norm();
  }
  return v / norm;
}

namespace {

Eigen::VectorXd vmf_row(const Eigen::VectorXd& mu, double kappa, rng_stream& rng) {
  int d = static_cast<int>(mu.size());
  if (kappa == 0.0) {
    Eigen::VectorXd g = gaussian_row(d, rng);
    return g / g.norm();
  }
  double t = vmf_cosine(kappa, d, rng);
  Eigen::VectorXd v = tangent_uniform(mu, rng);
  return t * mu + std::sqrt(std::max(0.0, 1.0 - t * t)) * v;
}

}  // namespace

PointCloud sample_vmf(const Eigen::VectorXd& mean_direction, double kappa, int n,
                      std::uint64_t seed, std::uint64_t stream) {
  int d = static_cast<int>(mean_direction.size());
  if (d < 2) throw degenerate_input("sample_vmf: dimension must be >= 2");
  if (n < 1) throw degenerate_input("sample_vmf: n must be >= 1");
  if (kappa < 0) throw degenerate_input("sample_vmf: kappa must be >= 0");
  if (std::abs(mean_direction.norm() - 1.0) > 1e-10)
    throw degenerate_input("sample_vmf: mean direction must be unit norm");
  rng_stream rng = rng_stream::of(seed, kTagVmf, stream);
  PointCloud cloud;
  cloud.data.resize(n, d);
  for (int i = 0; i < n; ++i) cloud.data.row(i) = vmf_row(mean_direction, kappa, rng).transpose();
  cloud.on_sphere = true;
  return cloud;
}

PointCloud sample_vmf_mixture(const std::vector<VmfComponent>& components, int n,
                              std::uint64_t seed, std::uint64_t stream) {
  if (components.empty()) throw degenerate_input("sample_vmf_mixture: empty component list");
  if (components.size() == 1)
    return sample_vmf(components[0].mu, components[0].kappa, n, seed, stream);
  double total = 0.0;
  int d = static_cast<int>(components[0].mu.size());
  for (const auto& comp : components) {
    if (comp.weight < 0) throw degenerate_input("sample_vmf_mixture: negative weight");
    if (comp.kappa < 0) throw degenerate_input("sample_vmf_mixture: negative kappa");
    if (static_cast<int>(comp.mu.size()) != d)
      throw degenerate_input("sample_vmf_mixture: component dimension mismatch");
    total += comp.weight;
  }
  if (std::abs(total - 1.0) > 1e-10)
    throw degenerate_input("sample_vmf_mixture: weights must sum to 1");
  rng_stream rng = rng_stream::of(seed, kTagMixture, stream);
  PointCloud cloud;
  cloud.data.resize(n, d);
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform01();
    std::size_t pick = 0;
    double acc = 0.0;
    for (std::size_t c = 0; c < components.size(); ++c) {
      acc += components[c].weight;
      if (u < acc) {
        pick = c;
        break;
      }
      pick = c;
    }
    cloud.data.row(i) = vmf_row(components[pick].mu, components[pick].kappa, rng).transpose();
  }
  cloud.on_sphere = true;
  return cloud;
}

PointCloud sample_radial(const PointCloud& base, const RadialLaw& law, std::uint64_t seed,
                         std::uint64_t stream) {
  if (!base.on_sphere) throw degenerate_input("sample_radial: base cloud must be on the sphere");
  law.validate();
  rng_stream rng = rng_stream::of(seed, kTagRadial, stream);
  PointCloud out;
  out.data = base.data;
  bool unit = law.atoms.size() == 1 && law.atoms[0].first == 1.0;
  for (Eigen::Index i = 0; i < out.data.rows(); ++i) {
    double u = rng.uniform01();
    double acc = 0.0;
    double r = law.atoms.back().first;
    for (const auto& [radius, w] : law.atoms) {
      acc += w;
      if (u < acc) {
        r = radius;
        break;
      }
    }
    out.data.row(i) *= r;
  }
  out.on_sphere = unit;
  return out;
}

PointCloud normalize(const Eigen::MatrixXd& z) {
  PointCloud out;
  out.data.resize(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double norm = z.row(i).norm();
    if (norm == 0.0) throw degenerate_input("normalize: zero row has no direction");
    out.data.row(i) = z.row(i) / norm;
  }
  out.on_sphere = true;
  return out;
}

Eigen::VectorXd project(const PointCloud& points, const Eigen::VectorXd& direction) {
  if (points.dim() != direction.size())
    throw degenerate_input("project: dimension mismatch");
  return points.data * direction;
}

}  // namespace spherelab
