#include "spherelab/susreg.hpp"

#include <cmath>

#include "spherelab/errors.hpp"

namespace spherelab {

namespace {

// train_toy draws its per-step direction sets from this base stream index so
// they can never collide with caller-side sampling of the initial batch.
constexpr std::uint64_t kSliceStreamBase = 1ull << 40;

void check_directions(const MultiViewBatch& batch, const PointCloud& directions) {
  if (directions.n() < 1) throw degenerate_input("susreg: empty direction set");
  if (directions.dim() != batch.dim())
    throw degenerate_input("susreg: direction dimension does not match batch");
  for (Eigen::Index a = 0; a < directions.n(); ++a)
    if (std::abs(directions.data.row(a).norm() - 1.0) > 1e-8)
      throw degenerate_input("susreg: directions must be unit norm");
}

}  // namespace

void MultiViewBatch::validate() const {
  if (views.empty()) throw degenerate_input("batch: no views");
  if (v_g < 1 || v_g > static_cast<int>(views.size()))
    throw degenerate_input("batch: v_g must lie in [1, V_a]");
  Eigen::Index rows = views[0].n(), cols = views[0].dim();
  if (rows < 1 || cols < 2) throw degenerate_input("batch: views must be n x d with d >= 2");
  for (const auto& v : views) {
    if (v.n() != rows || v.dim() != cols)
      throw degenerate_input("batch: views must share (n, d)");
    for (Eigen::Index i = 0; i < rows; ++i)
      if (std::abs(v.data.row(i).norm() - 1.0) > 1e-10)
        throw degenerate_input("batch: view rows must be unit norm");
  }
}

MultiViewBatch single_view(PointCloud cloud) {
  MultiViewBatch b;
  b.views.push_back(std::move(cloud));
  b.v_g = 1;
  return b;
}

void TrainConfig::validate() const {
  if (steps < 1) throw degenerate_input("TrainConfig: steps must be >= 1");
  if (learning_rate <= 0) throw degenerate_input("TrainConfig: learning_rate must be > 0");
  if (lambda < 0 || lambda > 1) throw degenerate_input("TrainConfig: lambda must be in [0,1]");
  if (num_slices < 1) throw degenerate_input("TrainConfig: num_slices must be >= 1");
}

double susreg_loss(const MultiViewBatch& batch, const PointCloud& directions,
                   const ProjectionTarget& target, const EPConfig& cfg) {
  batch.validate();
  check_directions(batch, directions);
  EPGrid grid(target, cfg);
  double acc = 0.0;
  for (const auto& view : batch.views) {
    for (Eigen::Index a = 0; a < directions.n(); ++a) {
      Eigen::VectorXd t = view.data * directions.data.row(a).transpose();
      acc += grid.statistic(t);
    }
  }
  return acc / (static_cast<double>(batch.views.size()) * static_cast<double>(directions.n()));
}

Eigen::MatrixXd prototype(const MultiViewBatch& batch) {
  batch.validate();
  Eigen::MatrixXd mu = batch.views[0].data;
  for (int v = 1; v < batch.v_g; ++v) mu += batch.views[v].data;
  return mu / batch.v_g;
}

double invariance_loss(const MultiViewBatch& batch) {
  batch.validate();
  Eigen::MatrixXd mu = prototype(batch);
  double acc = 0.0;
  for (const auto& view : batch.views) acc += (mu - view.data).squaredNorm();
  return acc / (static_cast<double>(batch.views.size()) * static_cast<double>(batch.n()));
}

double total_loss(const MultiViewBatch& batch, const PointCloud& directions,
                  const ProjectionTarget& target, const EPConfig& cfg, double lambda) {
  if (lambda < 0 || lambda > 1) throw degenerate_input("total_loss: lambda must be in [0,1]");
  double inv = invariance_loss(batch);
  double sus = susreg_loss(batch, directions, target, cfg);
  return (1.0 - lambda) * inv + lambda * sus;
}

namespace {

// Ambient invariance gradient dL_inv/dz per view, before tangent projection.
std::vector<Eigen::MatrixXd> invariance_gradient_ambient(const MultiViewBatch& batch) {
  const int va = static_cast<int>(batch.views.size());
  const double scale = 2.0 / (static_cast<double>(va) * static_cast<double>(batch.n()));
  Eigen::MatrixXd mu = prototype(batch);
  Eigen::MatrixXd residual_sum = static_cast<double>(va) * mu;
  for (const auto& view : batch.views) residual_sum -= view.data;
  std::vector<Eigen::MatrixXd> grads;
  grads.reserve(va);
  for (int v = 0; v < va; ++v) {
    Eigen::MatrixXd g = batch.views[v].data - mu;
    if (v < batch.v_g) g += residual_sum / batch.v_g;
    grads.push_back(scale * g);
  }
  return grads;
}

void project_rows_to_tangent(const MultiViewBatch& batch, std::vector<Eigen::MatrixXd>& grads) {
  for (std::size_t v = 0; v < grads.size(); ++v) {
    const Eigen::MatrixXd& z = batch.views[v].data;
    Eigen::VectorXd radial = (grads[v].array() * z.array()).rowwise().sum();
    grads[v] -= radial.asDiagonal() * z;
  }
}

}  // namespace

std::vector<Eigen::MatrixXd> total_loss_gradient(const MultiViewBatch& batch,
                                                 const PointCloud& directions,
                                                 const ProjectionTarget& target,
                                                 const EPConfig& cfg, double lambda) {
  if (lambda < 0 || lambda > 1)
    throw degenerate_input("total_loss_gradient: lambda must be in [0,1]");
  batch.validate();
  check_directions(batch, directions);
  const int va = static_cast<int>(batch.views.size());
  std::vector<Eigen::MatrixXd> grads = invariance_gradient_ambient(batch);
  for (auto& g : grads) g *= (1.0 - lambda);
  if (lambda > 0) {
    EPGrid grid(target, cfg);
    const double scale = lambda / (static_cast<double>(va) * static_cast<double>(directions.n()));
    Eigen::VectorXd ep_grad;
    for (int v = 0; v < va; ++v) {
      for (Eigen::Index a = 0; a < directions.n(); ++a) {
        Eigen::VectorXd dir = directions.data.row(a).transpose();
        Eigen::VectorXd t = batch.views[v].data * dir;
        grid.statistic_and_gradient(t, ep_grad);
        grads[v].noalias() += scale * ep_grad * dir.transpose();
      }
    }
  }
  project_rows_to_tangent(batch, grads);
  return grads;
}

TrainResult train_toy(const MultiViewBatch& initial, const TrainConfig& cfg,
                      const ProjectionTarget& target, const EPConfig& ep_cfg) {
  initial.validate();
  cfg.validate();
  ep_cfg.validate();
  const int d = static_cast<int>(initial.dim());
  const int va = static_cast<int>(initial.views.size());

  TrainResult result;
  result.final_batch = initial;
  MultiViewBatch& batch = result.final_batch;
  EPGrid grid(target, ep_cfg);

  PointCloud dirs = sample_uniform_sphere(d, cfg.num_slices, cfg.seed, kSliceStreamBase);
  Eigen::VectorXd ep_grad;

  for (int step = 0; step <= cfg.steps; ++step) {
    if (step > 0 && cfg.resample_slices_each_step)
      dirs = sample_uniform_sphere(d, cfg.num_slices, cfg.seed, kSliceStreamBase + step);

    // Loss terms and the SUSReg gradient share one pass over (view, slice).
    double inv = invariance_loss(batch);
    double sus = 0.0;
    std::vector<Eigen::MatrixXd> grads = invariance_gradient_ambient(batch);
    for (auto& g : grads) g *= (1.0 - cfg.lambda);
    const double scale =
        cfg.lambda / (static_cast<double>(va) * static_cast<double>(cfg.num_slices));
    for (int v = 0; v < va; ++v) {
      for (Eigen::Index a = 0; a < dirs.n(); ++a) {
        Eigen::VectorXd dir = dirs.data.row(a).transpose();
        Eigen::VectorXd t = batch.views[v].data * dir;
        if (cfg.lambda > 0) {
          sus += grid.statistic_and_gradient(t, ep_grad);
          grads[v].noalias() += scale * ep_grad * dir.transpose();
        } else {
          sus += grid.statistic(t);
        }
      }
    }
    sus /= static_cast<double>(va) * static_cast<double>(cfg.num_slices);
    double total = (1.0 - cfg.lambda) * inv + cfg.lambda * sus;
    if (!std::isfinite(total)) throw training_failure("train_toy: non-finite loss", step);

    double resultant = batch.views[0].data.colwise().mean().norm();
    result.history.push_back({step, inv, sus, total, resultant});
    if (step == cfg.steps) break;

    project_rows_to_tangent(batch, grads);
    for (int v = 0; v < va; ++v) {
      Eigen::MatrixXd z = batch.views[v].data - cfg.learning_rate * grads[v];
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        double norm = z.row(i).norm();
        if (!(norm > 1e-12) || !std::isfinite(norm))
          throw training_failure("train_toy: embedding row collapsed", step);
        batch.views[v].data.row(i) = z.row(i) / norm;
      }
      batch.views[v].on_sphere = true;
    }
  }
  return result;
}

}  // namespace spherelab
