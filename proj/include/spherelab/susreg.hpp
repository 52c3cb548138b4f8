#pragma once

#include <cstdint>
#include <vector>

#include "spherelab/epps_pulley.hpp"
#include "spherelab/sphere_geometry.hpp"

namespace spherelab {

// V_a views of the same n samples; the first v_g views are the global ones
// that define the prototype.
struct MultiViewBatch {
  std::vector<PointCloud> views;
  int v_g = 1;

  Eigen::Index n() const { return views.empty() ? 0 : views[0].n(); }
  Eigen::Index dim() const { return views.empty() ? 0 : views[0].dim(); }
  void validate() const;
};

MultiViewBatch single_view(PointCloud cloud);

struct TrainConfig {
  int steps = 200;
  double learning_rate = 0.5;
  double lambda = 1.0;
  int num_slices = 1024;
  std::uint64_t seed = 0;
  bool resample_slices_each_step = true;

  void validate() const;
};

// Mean over views and slicing directions of the EP statistic of the
// projected view.
double susreg_loss(const MultiViewBatch& batch, const PointCloud& directions,
                   const ProjectionTarget& target, const EPConfig& cfg);

// Row-wise average of the global views. Rows are generally not unit norm.
Eigen::MatrixXd prototype(const MultiViewBatch& batch);

// Mean over views and samples of the squared distance to the prototype.
double invariance_loss(const MultiViewBatch& batch);

double total_loss(const MultiViewBatch& batch, const PointCloud& directions,
                  const ProjectionTarget& target, const EPConfig& cfg, double lambda);

// Gradient of total_loss per view, taken with respect to the unconstrained
// pre-normalization embeddings: the ambient gradient composed with the
// normalization Jacobian (I - zz^T)/|z|, which at unit rows is the tangent
// projection. Every returned row is orthogonal to its embedding row.
std::vector<Eigen::MatrixXd> total_loss_gradient(const MultiViewBatch& batch,
                                                 const PointCloud& directions,
                                                 const ProjectionTarget& target,
                                                 const EPConfig& cfg, double lambda);

struct TrainHistoryRow {
  int step;
  double inv_loss;
  double susreg_loss;
  double total_loss;
  double resultant_length;
};

struct TrainResult {
  MultiViewBatch final_batch;
  std::vector<TrainHistoryRow> history;  // steps+1 rows; last row is the final point
};

// Plain projected gradient descent on free embedding rows, renormalizing
// after every step. Slicing directions are redrawn each step from a
// dedicated substream of cfg.seed when resample_slices_each_step is set.
TrainResult train_toy(const MultiViewBatch& initial, const TrainConfig& cfg,
                      const ProjectionTarget& target, const EPConfig& ep_cfg = EPConfig{});

}  // namespace spherelab
