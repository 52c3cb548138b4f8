#include "spherelab/knn_lab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "spherelab/errors.hpp"
#include "spherelab/parallel.hpp"

namespace spherelab {

namespace {

double wrap_pi(double a) {
  double y = std::remainder(a, 2.0 * M_PI);
  if (y <= -M_PI) y += 2.0 * M_PI;
  return y;
}

double wrap_2pi(double a) {
  double y = std::fmod(a, 2.0 * M_PI);
  if (y < 0) y += 2.0 * M_PI;
  return y;
}

bool target_matches(const ManifoldSpec& manifold, const TargetFunctionSpec& fn) {
  switch (fn.kind()) {
    case target_fn_kind::circle_cos:
    case target_fn_kind::circle_sin:
    case target_fn_kind::circle_ramp:
      return manifold.kind == manifold_kind::circle;
    case target_fn_kind::sphere2_y1:
    case target_fn_kind::sphere2_y2:
      return manifold.kind == manifold_kind::sphere2;
    default:
      return manifold.kind == manifold_kind::euclidean;
  }
}

void check_mc_inputs(const ManifoldSpec& manifold, const DensitySpec& density,
                     const TargetFunctionSpec& fn, int k, int n, int reps) {
  if (manifold.kind != density.manifold().kind)
    throw degenerate_input("manifold does not match the density's manifold");
  if (!target_matches(manifold, fn))
    throw degenerate_input("target function does not live on this manifold");
  if (k < 1 || k > n) throw degenerate_input("k must be in [1, n]");
  if (reps < 30) throw degenerate_input("need at least 30 replications");
}

// Indices of the k nearest entries of d2, ties toward the smaller index.
void select_k(const std::vector<double>& d2, int k, std::vector<int>& idx) {
  idx.resize(d2.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(), [&](int a, int b) {
    return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
  });
}

// Contiguous k-window of the sorted array ext nearest to q, starting from a
// caller-maintained candidate s that must not sit past the optimum (queries
// asked in ascending order keep this invariant).
int advance_window(const std::vector<double>& ext, int k, double q, int s) {
  int last = static_cast<int>(ext.size()) - k;
  while (s < last && ext[s + k] - q < q - ext[s]) ++s;
  return s;
}

int initial_window(const std::vector<double>& ext, int k, double q) {
  int pos = static_cast<int>(std::lower_bound(ext.begin(), ext.end(), q) - ext.begin());
  int s = std::max(0, pos - k);
  return advance_window(ext, k, q, s);
}

struct EigenPair {
  double lo, hi;
};

EigenPair sym2x2_eigen(const Eigen::Matrix2d& s) {
  double tr = s(0, 0) + s(1, 1);
  double disc = std::sqrt(std::max(0.0, 0.25 * (s(0, 0) - s(1, 1)) * (s(0, 0) - s(1, 1)) +
                                            s(0, 1) * s(0, 1)));
  return {0.5 * tr - disc, 0.5 * tr + disc};
}

double scatter_ratio(const Eigen::Matrix2d& s) {
  EigenPair ev = sym2x2_eigen(s);
  if (ev.lo <= 0) return std::numeric_limits<double>::infinity();
  return ev.hi / ev.lo;
}

}  // namespace

double knn_regress(const ManifoldSpec& manifold, const Eigen::VectorXd& query,
                   const Eigen::MatrixXd& data, const Eigen::VectorXd& targets, int k) {
  int n = static_cast<int>(data.rows());
  if (k < 1 || k > n) throw degenerate_input("knn_regress: k must be in [1, n]");
  if (query.size() != data.cols() || query.size() != manifold.ambient)
    throw degenerate_input("knn_regress: query dimension mismatch");
  if (targets.size() != n) throw degenerate_input("knn_regress: targets size mismatch");

  // Squared chordal distance orders points exactly like the geodesic metric
  // on the sphere manifolds, and is the metric itself on euclidean space.
  std::vector<double> d2(n);
  for (int i = 0; i < n; ++i) d2[i] = (data.row(i).transpose() - query).squaredNorm();
  std::vector<int> idx;
  select_k(d2, k, idx);
  double acc = 0.0;
  for (int j = 0; j < k; ++j) acc += targets[idx[j]];
  return acc / k;
}

double knn_radius(const DensitySpec& density, const Eigen::VectorXd& x, double k, double n,
                  bool curvature_correction) {
  if (k <= 0 || n <= 0) throw degenerate_input("knn_radius: k and n must be positive");
  const ManifoldSpec& man = density.manifold();
  double p = density.pdf(x);
  if (!(p > 0)) throw std::domain_error("knn_radius: density vanishes at x");
  int m = man.m;
  double r0 = std::pow(k * std::tgamma(1.0 + 0.5 * m) / (n * p * std::pow(M_PI, 0.5 * m)),
                       1.0 / m);
  if (!curvature_correction) return r0;
  double shape = density.laplacian(x) / p - man.scal() / 3.0;
  return r0 - r0 * r0 * r0 * shape / (2.0 * m * (m + 2.0));
}

double bias_leading_term(const ManifoldSpec& manifold, const DensitySpec& density,
                         const TargetFunctionSpec& target_fn, const Eigen::VectorXd& x,
                         double k, double n) {
  if (manifold.kind != density.manifold().kind)
    throw degenerate_input("bias_leading_term: manifold does not match the density");
  if (!target_matches(manifold, target_fn))
    throw degenerate_input("bias_leading_term: target function manifold mismatch");
  double p = density.pdf(x);
  if (!(p > 0)) throw std::domain_error("bias_leading_term: density vanishes at x");
  double r = knn_radius(density, x, k, n);
  double curv = target_fn.laplacian(x) + 2.0 * target_fn.grad(x).dot(density.grad(x)) / p;
  return r * r / (2.0 * (manifold.m + 2.0)) * curv;
}

McEstimate pointwise_bias_mc(const ManifoldSpec& manifold, const DensitySpec& density,
                             const TargetFunctionSpec& target_fn, const Eigen::VectorXd& x,
                             int k, int n, int reps, std::uint64_t seed) {
  check_mc_inputs(manifold, density, target_fn, k, n, reps);
  std::vector<double> bias(reps);

  if (manifold.kind == manifold_kind::circle) {
    double theta_q = circle_angle(x.head<2>());
    double f_q = target_fn.value_angle(theta_q);
    parallel_for(reps, [&](int lo, int hi) {
      std::vector<double> d(n);
      std::vector<int> idx;
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::VectorXd th = density.sample_angles(n, seed, rep);
        for (int i = 0; i < n; ++i) d[i] = std::abs(wrap_pi(th[i] - theta_q));
        select_k(d, k, idx);
        double acc = 0.0;
        for (int j = 0; j < k; ++j) acc += target_fn.value_angle(th[idx[j]]);
        bias[rep] = acc / k - f_q;
      }
    });
  } else {
    double f_q = target_fn.value(x);
    parallel_for(reps, [&](int lo, int hi) {
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::MatrixXd data = density.sample(n, seed, rep);
        Eigen::VectorXd f(n);
        for (int i = 0; i < n; ++i) f[i] = target_fn.value(data.row(i).transpose());
        bias[rep] = knn_regress(manifold, x, data, f, k) - f_q;
      }
    });
  }

  double mean = std::accumulate(bias.begin(), bias.end(), 0.0) / reps;
  double ss = 0.0;
  for (double b : bias) ss += (b - mean) * (b - mean);
  return {mean, std::sqrt(ss / (reps - 1.0) / reps)};
}

double isb_leading(const ManifoldSpec& manifold, const DensitySpec& density,
                   const TargetFunctionSpec& target_fn, double k, double n) {
  if (manifold.kind != density.manifold().kind)
    throw degenerate_input("isb_leading: manifold does not match the density");
  if (!target_matches(manifold, target_fn))
    throw degenerate_input("isb_leading: target function manifold mismatch");
  double a = IsbConstant{manifold.m, k, n}.value();
  double acc = 0.0;
  if (manifold.kind == manifold_kind::circle) {
    const int grid_n = 4096;
    Eigen::VectorXd grid = circle_grid(grid_n);
    for (int i = 0; i < grid_n; ++i) {
      double p = density.pdf_angle(grid[i]);
      double curv = target_fn.d2value_angle(grid[i]) +
                    2.0 * target_fn.dvalue_angle(grid[i]) * density.dpdf_angle(grid[i]) / p;
      acc += curv * curv * std::pow(p, -3.0);
    }
    return a * acc * (2.0 * M_PI / grid_n);
  }
  if (manifold.kind == manifold_kind::sphere2) {
    const int grid_n = 8192;
    Eigen::MatrixXd grid = fibonacci_sphere_grid(grid_n);
    for (int i = 0; i < grid_n; ++i) {
      Eigen::VectorXd x = grid.row(i).transpose();
      double p = density.pdf(x);
      double curv = target_fn.laplacian(x) + 2.0 * target_fn.grad(x).dot(density.grad(x)) / p;
      acc += curv * curv / p;
    }
    return a * acc * (4.0 * M_PI / grid_n);
  }
  throw degenerate_input("isb_leading: no deterministic grid on euclidean space");
}

namespace {

// One replication of the circle ISB sweep: sorted sample extended by one
// period on each side, prefix sums of the target, then each ascending grid
// query reuses the window pointer. Writes the per-query bias into out.
void circle_bias_sweep(const Eigen::VectorXd& angles, const TargetFunctionSpec& target_fn,
                       const Eigen::VectorXd& grid, const Eigen::VectorXd& f_grid, int k,
                       double* out) {
  int n = static_cast<int>(angles.size());
  std::vector<double> th(n);
  for (int i = 0; i < n; ++i) th[i] = wrap_2pi(angles[i]);
  std::sort(th.begin(), th.end());

  std::vector<double> ext(3 * n), prefix(3 * n + 1, 0.0);
  std::vector<double> f_base(n);
  for (int i = 0; i < n; ++i) {
    ext[i] = th[i] - 2.0 * M_PI;
    ext[n + i] = th[i];
    ext[2 * n + i] = th[i] + 2.0 * M_PI;
    f_base[i] = target_fn.value_angle(th[i]);
  }
  for (int j = 0; j < 3 * n; ++j) prefix[j + 1] = prefix[j] + f_base[j % n];

  int q_count = static_cast<int>(grid.size());
  int s = initial_window(ext, k, grid[0]);
  for (int q = 0; q < q_count; ++q) {
    s = advance_window(ext, k, grid[q], s);
    out[q] = (prefix[s + k] - prefix[s]) / k - f_grid[q];
  }
}

double debiased_isb_reduce(const Eigen::MatrixXd& bias, const Eigen::VectorXd& density_grid,
                           double cell) {
  int reps = static_cast<int>(bias.rows());
  int q_count = static_cast<int>(bias.cols());
  double acc = 0.0;
  for (int q = 0; q < q_count; ++q) {
    double mean = bias.col(q).mean();
    double var = (bias.col(q).array() - mean).square().sum() / (reps - 1.0);
    acc += density_grid[q] * (mean * mean - var / reps);
  }
  return acc * cell;
}

}  // namespace

double isb_mc(const ManifoldSpec& manifold, const DensitySpec& density,
              const TargetFunctionSpec& target_fn, int k, int n, int reps, int query_grid,
              std::uint64_t seed) {
  check_mc_inputs(manifold, density, target_fn, k, n, reps);
  if (query_grid < 1) throw degenerate_input("isb_mc: query_grid must be >= 1");

  if (manifold.kind == manifold_kind::circle) {
    Eigen::VectorXd grid = circle_grid(query_grid);
    Eigen::VectorXd f_grid(query_grid), p_grid(query_grid);
    for (int q = 0; q < query_grid; ++q) {
      f_grid[q] = target_fn.value_angle(grid[q]);
      p_grid[q] = density.pdf_angle(grid[q]);
    }
    Eigen::MatrixXd bias(reps, query_grid);
    parallel_for(reps, [&](int lo, int hi) {
      // The sweep fills a contiguous buffer; a row of the column-major bias
      // matrix is strided, so it goes through a scratch vector.
      Eigen::VectorXd row(query_grid);
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::VectorXd th = density.sample_angles(n, seed, rep);
        circle_bias_sweep(th, target_fn, grid, f_grid, k, row.data());
        bias.row(rep) = row.transpose();
      }
    });
    return debiased_isb_reduce(bias, p_grid, 2.0 * M_PI / query_grid);
  }

  if (manifold.kind == manifold_kind::sphere2) {
    Eigen::MatrixXd grid = fibonacci_sphere_grid(query_grid);
    Eigen::VectorXd f_grid(query_grid), p_grid(query_grid);
    for (int q = 0; q < query_grid; ++q) {
      Eigen::VectorXd x = grid.row(q).transpose();
      f_grid[q] = target_fn.value(x);
      p_grid[q] = density.pdf(x);
    }
    Eigen::MatrixXd bias(reps, query_grid);
    parallel_for(reps, [&](int lo, int hi) {
      std::vector<double> d2(n);
      std::vector<int> idx;
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::MatrixXd data = density.sample(n, seed, rep);
        Eigen::VectorXd f(n);
        for (int i = 0; i < n; ++i) f[i] = target_fn.value(data.row(i).transpose());
        for (int q = 0; q < query_grid; ++q) {
          Eigen::VectorXd x = grid.row(q).transpose();
          for (int i = 0; i < n; ++i) d2[i] = (data.row(i).transpose() - x).squaredNorm();
          select_k(d2, k, idx);
          double acc = 0.0;
          for (int j = 0; j < k; ++j) acc += f[idx[j]];
          bias(rep, q) = acc / k - f_grid[q];
        }
      }
    });
    return debiased_isb_reduce(bias, p_grid, 4.0 * M_PI / query_grid);
  }

  throw degenerate_input("isb_mc: no deterministic query grid on euclidean space");
}

MinimaxTable minimax_probe(const ManifoldSpec& manifold, const std::vector<DensitySpec>& densities,
                           double c, const std::vector<double>& slope_grid, int k, int n, int reps,
                           std::uint64_t seed) {
  if (manifold.kind != manifold_kind::circle)
    throw degenerate_input("minimax_probe: circle manifold only");
  if (densities.empty() || slope_grid.empty())
    throw degenerate_input("minimax_probe: need at least one density and one slope");
  if (k < 1 || k > n) throw degenerate_input("minimax_probe: k must be in [1, n]");
  if (reps < 2) throw degenerate_input("minimax_probe: need at least 2 replications");
  for (const DensitySpec& d : densities)
    if (d.manifold().kind != manifold_kind::circle)
      throw degenerate_input("minimax_probe: all densities must live on the circle");

  // Laplacian budget must hold for every slope, checked on a dense angle grid.
  {
    Eigen::VectorXd check = circle_grid(4096);
    for (double r : slope_grid) {
      TargetFunctionSpec f = TargetFunctionSpec::circle_ramp(c, r);
      for (int i = 0; i < check.size(); ++i)
        if (std::abs(f.d2value_angle(check[i])) > c + 1e-9)
          throw degenerate_input("minimax_probe: ramp family violates the Laplacian bound");
    }
  }

  const int q_count = 1024;
  Eigen::VectorXd grid = circle_grid(q_count);
  TargetFunctionSpec ramp = TargetFunctionSpec::circle_ramp(c, 1.0);
  Eigen::VectorXd h_grid(q_count), s_grid(q_count);
  for (int q = 0; q < q_count; ++q) {
    h_grid[q] = ramp.ramp_h_angle(grid[q]);
    s_grid[q] = ramp.ramp_s_angle(grid[q]);
  }

  int n_dens = static_cast<int>(densities.size());
  int n_slopes = static_cast<int>(slope_grid.size());
  MinimaxTable table;
  table.slopes = slope_grid;
  table.isb = Eigen::MatrixXd::Zero(n_dens, n_slopes);
  table.std_error = Eigen::MatrixXd::Zero(n_dens, n_slopes);

  for (int di = 0; di < n_dens; ++di) {
    const DensitySpec& density = densities[di];
    char buf[64];
    if (density.kind() == density_kind::vmf)
      std::snprintf(buf, sizeof buf, "vmf(kappa=%g)", density.vmf_kappa());
    else
      std::snprintf(buf, sizeof buf, "%s", density.name());
    table.density_names.emplace_back(buf);

    Eigen::VectorXd p_grid(q_count);
    for (int q = 0; q < q_count; ++q) p_grid[q] = density.pdf_angle(grid[q]);

    // Per-rep window sums of the two ramp parts; every slope reuses them.
    Eigen::MatrixXd bh(reps, q_count), bs(reps, q_count);
    parallel_for(reps, [&](int lo, int hi) {
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::VectorXd angles = density.sample_angles(n, seed, rep);
        int nn = static_cast<int>(angles.size());
        std::vector<double> th(nn);
        for (int i = 0; i < nn; ++i) th[i] = wrap_2pi(angles[i]);
        std::sort(th.begin(), th.end());
        std::vector<double> ext(3 * nn), ph(3 * nn + 1, 0.0), ps(3 * nn + 1, 0.0);
        std::vector<double> hv(nn), sv(nn);
        for (int i = 0; i < nn; ++i) {
          ext[i] = th[i] - 2.0 * M_PI;
          ext[nn + i] = th[i];
          ext[2 * nn + i] = th[i] + 2.0 * M_PI;
          hv[i] = ramp.ramp_h_angle(th[i]);
          sv[i] = ramp.ramp_s_angle(th[i]);
        }
        for (int j = 0; j < 3 * nn; ++j) {
          ph[j + 1] = ph[j] + hv[j % nn];
          ps[j + 1] = ps[j] + sv[j % nn];
        }
        int s = initial_window(ext, k, grid[0]);
        for (int q = 0; q < q_count; ++q) {
          s = advance_window(ext, k, grid[q], s);
          bh(rep, q) = (ph[s + k] - ph[s]) / k - h_grid[q];
          bs(rep, q) = (ps[s + k] - ps[s]) / k - s_grid[q];
        }
      }
    });

    Eigen::VectorXd mh(q_count), ms(q_count), vh(q_count), vs(q_count), cv(q_count);
    for (int q = 0; q < q_count; ++q) {
      mh[q] = bh.col(q).mean();
      ms[q] = bs.col(q).mean();
      Eigen::ArrayXd dh = bh.col(q).array() - mh[q];
      Eigen::ArrayXd ds = bs.col(q).array() - ms[q];
      vh[q] = dh.square().sum() / (reps - 1.0);
      vs[q] = ds.square().sum() / (reps - 1.0);
      cv[q] = (dh * ds).sum() / (reps - 1.0);
    }

    double cell = 2.0 * M_PI / q_count;
    for (int si = 0; si < n_slopes; ++si) {
      double r = slope_grid[si];
      double acc = 0.0, err2 = 0.0;
      for (int q = 0; q < q_count; ++q) {
        double mean = mh[q] + r * ms[q];
        double var = vh[q] + r * r * vs[q] + 2.0 * r * cv[q];
        acc += p_grid[q] * (mean * mean - var / reps);
        double w = cell * p_grid[q];
        double var_sq = 4.0 * mean * mean * var / reps + 2.0 * var * var / (reps * (reps - 1.0));
        err2 += w * w * var_sq;
      }
      table.isb(di, si) = acc * cell;
      table.std_error(di, si) = std::sqrt(err2);
    }
  }
  return table;
}

namespace {

struct AnnulusPoint {
  double angle, x, y;
};

// Accumulators of one anisotropy replication.
struct AnisotropyRep {
  Eigen::Vector2d shift = Eigen::Vector2d::Zero();
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  long count = 0;
};

void accumulate_neighbors(const Eigen::MatrixXd& data, const std::vector<int>& idx, int k,
                          const Eigen::Vector2d& query, const Eigen::Matrix2d& back_rot,
                          AnisotropyRep& rep) {
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (int j = 0; j < k; ++j) centroid += data.row(idx[j]).transpose();
  centroid /= k;
  rep.shift += back_rot * (centroid - query);
  for (int j = 0; j < k; ++j) {
    Eigen::Vector2d v = back_rot * (data.row(idx[j]).transpose() - centroid);
    rep.scatter += v * v.transpose();
  }
  rep.count += k;
}

}  // namespace

AnisotropyReport neighborhood_anisotropy(const DensitySpec& distribution,
                                         const Eigen::VectorXd& query, int k, int n, int reps,
                                         std::uint64_t seed, int ring_average) {
  const ManifoldSpec& man = distribution.manifold();
  if (k < 1 || k > n) throw degenerate_input("neighborhood_anisotropy: k must be in [1, n]");
  if (reps < 2) throw degenerate_input("neighborhood_anisotropy: need at least 2 replications");
  if (query.size() != man.ambient)
    throw degenerate_input("neighborhood_anisotropy: query dimension mismatch");

  std::vector<AnisotropyRep> per_rep(reps);

  if (man.kind == manifold_kind::circle) {
    double theta_q = circle_angle(query.head<2>());
    Eigen::Vector2d qpt = circle_point(theta_q);
    parallel_for(reps, [&](int lo, int hi) {
      std::vector<double> d(n);
      std::vector<int> idx;
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::VectorXd th = distribution.sample_angles(n, seed, rep);
        for (int i = 0; i < n; ++i) d[i] = std::abs(wrap_pi(th[i] - theta_q));
        select_k(d, k, idx);
        Eigen::MatrixXd pts(n, 2);
        for (int j = 0; j < k; ++j) pts.row(idx[j]) = circle_point(th[idx[j]]).transpose();
        accumulate_neighbors(pts, idx, k, qpt, Eigen::Matrix2d::Identity(), per_rep[rep]);
      }
    });
  } else if (man.kind == manifold_kind::euclidean && man.m == 2 &&
             distribution.kind() == density_kind::gaussian_euclidean) {
    Eigen::Vector2d q2 = query.head<2>();
    double rho = q2.norm();
    int ring = std::max(1, ring_average);
    if (ring > 1 && distribution.gaussian_mean().norm() > 0)
      throw degenerate_input("neighborhood_anisotropy: ring averaging needs a centered Gaussian");
    if (rho < 1e-12) ring = 1;
    double psi = ring > 1 ? std::atan2(q2[1], q2[0]) : 0.0;
    double r0 = knn_radius(distribution, query, k, n);
    double band = std::max(8.0 * r0, 0.05);

    parallel_for(reps, [&](int lo, int hi) {
      std::vector<double> d2(n);
      std::vector<int> idx;
      for (int rep = lo; rep < hi; ++rep) {
        Eigen::MatrixXd data = distribution.sample(n, seed, rep);
        if (ring == 1) {
          for (int i = 0; i < n; ++i) d2[i] = (data.row(i).transpose() - q2).squaredNorm();
          select_k(d2, k, idx);
          accumulate_neighbors(data, idx, k, q2, Eigen::Matrix2d::Identity(), per_rep[rep]);
          continue;
        }

        // Thin annulus around the query ring, sorted by angle; each rotated
        // query reads a contiguous angular slice. d_k is validated against
        // the slice bounds, with a full brute-force fallback.
        std::vector<AnnulusPoint> ann;
        ann.reserve(n / 4);
        for (int i = 0; i < n; ++i) {
          double r = data.row(i).norm();
          if (std::abs(r - rho) < band)
            ann.push_back({std::atan2(data(i, 1), data(i, 0)), data(i, 0), data(i, 1)});
        }
        std::sort(ann.begin(), ann.end(),
                  [](const AnnulusPoint& a, const AnnulusPoint& b) { return a.angle < b.angle; });
        int na = static_cast<int>(ann.size());
        double margin = 4.0 * r0;
        double chord_base = 2.0 * std::sqrt(rho * std::max(rho - band, 0.0));
        double alpha = chord_base > margin ? 2.0 * std::asin(std::min(1.0, margin / chord_base))
                                           : M_PI;

        Eigen::MatrixXd cand(2 * k + 64, 2);
        std::vector<double> cd2;
        std::vector<int> cidx;
        for (int j = 0; j < ring; ++j) {
          double phi = psi + 2.0 * M_PI * j / ring;
          Eigen::Vector2d qj(rho * std::cos(phi), rho * std::sin(phi));
          Eigen::Matrix2d back;
          double rot = phi - psi;
          back << std::cos(rot), std::sin(rot), -std::sin(rot), std::cos(rot);

          bool done = false;
          if (na >= k && alpha < M_PI) {
            // gather the angular slice (phi - alpha, phi + alpha)
            std::vector<int> slice;
            double lo_a = wrap_pi(phi) - alpha, hi_a = wrap_pi(phi) + alpha;
            for (double base : {-2.0 * M_PI, 0.0, 2.0 * M_PI}) {
              auto first = std::lower_bound(ann.begin(), ann.end(), lo_a - base,
                                            [](const AnnulusPoint& a, double v) { return a.angle < v; });
              auto last = std::upper_bound(ann.begin(), ann.end(), hi_a - base,
                                           [](double v, const AnnulusPoint& a) { return v < a.angle; });
              for (auto it = first; it != last; ++it)
                slice.push_back(static_cast<int>(it - ann.begin()));
            }
            if (static_cast<int>(slice.size()) >= k) {
              int ns = static_cast<int>(slice.size());
              if (cand.rows() < ns) cand.resize(ns, 2);
              cd2.resize(ns);
              for (int t = 0; t < ns; ++t) {
                const AnnulusPoint& a = ann[slice[t]];
                cand(t, 0) = a.x;
                cand(t, 1) = a.y;
                double dx = a.x - qj[0], dy = a.y - qj[1];
                cd2[t] = dx * dx + dy * dy;
              }
              select_k(cd2, k, cidx);
              double dk = 0.0;
              for (int t = 0; t < k; ++t) dk = std::max(dk, cd2[cidx[t]]);
              dk = std::sqrt(dk);
              double slice_bound = chord_base * std::sin(0.5 * alpha);
              if (dk < band && dk < slice_bound) {
                accumulate_neighbors(cand, cidx, k, qj, back, per_rep[rep]);
                done = true;
              }
            }
          }
          if (!done) {
            for (int i = 0; i < n; ++i) d2[i] = (data.row(i).transpose() - qj).squaredNorm();
            select_k(d2, k, idx);
            accumulate_neighbors(data, idx, k, qj, back, per_rep[rep]);
          }
        }
        per_rep[rep].shift /= ring;
      }
    });
  } else {
    throw degenerate_input(
        "neighborhood_anisotropy: supports circle densities and planar Gaussians");
  }

  Eigen::MatrixXd shifts(reps, 2);
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  long total = 0;
  for (int rep = 0; rep < reps; ++rep) {
    shifts.row(rep) = per_rep[rep].shift.transpose();
    scatter += per_rep[rep].scatter;
    total += per_rep[rep].count;
  }
  scatter /= static_cast<double>(total);

  AnisotropyReport report;
  report.shift = shifts.colwise().mean().transpose();
  report.shift_std_error.resize(2);
  for (int c = 0; c < 2; ++c) {
    double mu = report.shift[c];
    double ss = (shifts.col(c).array() - mu).square().sum() / (reps - 1.0);
    report.shift_std_error[c] = std::sqrt(ss / reps);
  }
  report.eigen_ratio = scatter_ratio(scatter);
  return report;
}

}  // namespace spherelab
