#include "spherelab/target_density.hpp"

#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/rng.hpp"
#include "spherelab/special_functions.hpp"

namespace spherelab {

namespace {

constexpr int kQuadNodes = 257;
constexpr std::uint32_t kTagTargetSample = 0x21;

struct SubstitutedRule {
  Eigen::VectorXd t;       // sin(u_i)
  Eigen::VectorXd cos_u;   // cos(u_i)
  Eigen::VectorXd w;       // (pi/2) * GL weight
};

const SubstitutedRule& rule() {
  static const SubstitutedRule r = [] {
    auto [x, w] = gauss_legendre(kQuadNodes);
    SubstitutedRule out;
    out.t.resize(kQuadNodes);
    out.cos_u.resize(kQuadNodes);
    out.w.resize(kQuadNodes);
    for (int i = 0; i < kQuadNodes; ++i) {
      double u = 0.5 * M_PI * x[i];
      out.t[i] = std::sin(u);
      out.cos_u[i] = std::cos(u);
      out.w[i] = 0.5 * M_PI * w[i];
    }
    return out;
  }();
  return r;
}

}  // namespace

double normalizer(int d) {
  if (d < 2) throw degenerate_input("normalizer: d must be >= 2");
  return std::exp(std::lgamma(0.5 * d) - 0.5 * std::log(M_PI) - std::lgamma(0.5 * (d - 1)));
}

double integrate_pm1(const std::function<double(double)>& fn) {
  const auto& r = rule();
  double acc = 0.0;
  for (int i = 0; i < kQuadNodes; ++i) acc += r.w[i] * r.cos_u[i] * fn(r.t[i]);
  return acc;
}

double integrate_weighted_pm1(int d, const std::function<double(double)>& fn) {
  if (d < 2) throw degenerate_input("integrate_weighted_pm1: d must be >= 2");
  const auto& r = rule();
  double acc = 0.0;
  for (int i = 0; i < kQuadNodes; ++i) {
    // (1-t^2)^{(d-3)/2} dt = cos^{d-2}(u) du
    acc += r.w[i] * std::pow(r.cos_u[i], d - 2) * fn(r.t[i]);
  }
  return acc;
}

ProjectionTarget make_exact_rho(int d) {
  if (d < 2) throw degenerate_input("make_exact_rho: d must be >= 2");
  ProjectionTarget t;
  t.kind = target_kind::exact_rho;
  t.d = d;
  t.c_d = normalizer(d);
  const auto& r = rule();
  t.cf_nodes.resize(kQuadNodes);
  t.cf_weights.resize(kQuadNodes);
  for (int i = 0; i < kQuadNodes; ++i) {
    t.cf_nodes[i] = r.t[i];
    t.cf_weights[i] = t.c_d * r.w[i] * std::pow(r.cos_u[i], d - 2);
  }
  return t;
}

ProjectionTarget make_gaussian_approx(int d) {
  if (d < 2) throw degenerate_input("make_gaussian_approx: d must be >= 2");
  ProjectionTarget t;
  t.kind = target_kind::gaussian_approx;
  t.d = d;
  t.sigma2 = 1.0 / d;
  return t;
}

ProjectionTarget select_target(int d) {
  if (d < 2) throw degenerate_input("select_target: d must be >= 2");
  return d <= 256 ? make_exact_rho(d) : make_gaussian_approx(d);
}

double rho_pdf(const ProjectionTarget& target, double t) {
  if (target.kind == target_kind::gaussian_approx) {
    return std::exp(-0.5 * t * t / target.sigma2) / std::sqrt(2.0 * M_PI * target.sigma2);
  }
  if (std::abs(t) >= 1.0) {
    if (target.d == 2) throw std::domain_error("rho_pdf: d=2 density diverges at |t| >= 1");
    return 0.0;
  }
  return target.c_d * std::pow(1.0 - t * t, 0.5 * (target.d - 3));
}

double characteristic_function(const ProjectionTarget& target, double s) {
  if (target.kind == target_kind::gaussian_approx) {
    return std::exp(-0.5 * s * s * target.sigma2);
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < target.cf_nodes.size(); ++i)
    acc += target.cf_weights[i] * std::cos(s * target.cf_nodes[i]);
  return acc;
}

Eigen::VectorXd cf_grid(const ProjectionTarget& target, const Eigen::VectorXd& s) {
  Eigen::VectorXd out(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) out[i] = characteristic_function(target, s[i]);
  return out;
}

Eigen::VectorXd sample_target(const ProjectionTarget& target, int n, std::uint64_t seed,
                              std::uint64_t stream) {
  if (n < 1) throw degenerate_input("sample_target: n must be >= 1");
  rng_stream rng = rng_stream::of(seed, kTagTargetSample, stream);
  Eigen::VectorXd out(n);
  if (target.kind == target_kind::gaussian_approx) {
    double sigma = std::sqrt(target.sigma2);
    for (int i = 0; i < n; ++i) out[i] = sigma * rng.normal();
    return out;
  }
  // First coordinate of a uniform point on S^{d-1}.
  for (int i = 0; i < n; ++i) {
    double first = rng.normal();
    double ss = first * first;
    for (int j = 1; j < target.d; ++j) {
      double g = rng.normal();
      ss += g * g;
    }
    out[i] = ss > 0 ? first / std::sqrt(ss) : 0.0;
  }
  return out;
}

}  // namespace spherelab
