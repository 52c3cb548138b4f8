#include "spherelab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "spherelab/errors.hpp"
#include "spherelab/parallel.hpp"

namespace spherelab {

namespace {

// Directions drawn far away from the substreams used for data sampling, so a
// sweep never projects a cloud onto one of its own points.
constexpr std::uint64_t kSweepStreamBase = 1ull << 41;

void check_on_sphere(const PointCloud& points) {
  if (!points.on_sphere || points.n() < 1)
    throw degenerate_input("expected a nonempty on-sphere cloud");
}

}  // namespace

double mean_resultant_length(const PointCloud& points) {
  check_on_sphere(points);
  return points.data.colwise().mean().norm();
}

EpSweepSummary ep_sweep(const PointCloud& points, int num_directions,
                        const ProjectionTarget& target, const EPConfig& cfg, std::uint64_t seed) {
  check_on_sphere(points);
  if (num_directions < 1) throw degenerate_input("ep_sweep: need at least one direction");
  int d = static_cast<int>(points.dim());
  if (target.d != d) throw degenerate_input("ep_sweep: target dimension mismatch");

  PointCloud dirs = sample_uniform_sphere(d, num_directions, seed, kSweepStreamBase);
  EPGrid grid(target, cfg);
  std::vector<double> stats(num_directions);
  parallel_for(num_directions, [&](int lo, int hi) {
    for (int i = lo; i < hi; ++i)
      stats[i] = grid.statistic(project(points, dirs.data.row(i).transpose()));
  });

  std::sort(stats.begin(), stats.end());
  int k = num_directions;
  double median = (k % 2 == 1) ? stats[k / 2] : 0.5 * (stats[k / 2 - 1] + stats[k / 2]);
  int p99_rank = static_cast<int>(std::ceil(0.99 * k));
  return {median, stats[std::max(0, p99_rank - 1)]};
}

void RetrievalBatch::validate() const {
  int b = static_cast<int>(embeddings.rows());
  if (b < 2) throw degenerate_input("RetrievalBatch: need at least 2 rows");
  if (static_cast<int>(labels.size()) != b)
    throw degenerate_input("RetrievalBatch: labels size mismatch");
  for (int i = 0; i < b; ++i)
    if (std::abs(embeddings.row(i).norm() - 1.0) > 1e-8)
      throw degenerate_input("RetrievalBatch: embeddings must have unit rows");
  std::unordered_map<int, int> counts;
  for (int id : labels) ++counts[id];
  for (int id : labels)
    if (counts[id] < 2)
      throw degenerate_input("RetrievalBatch: a query has no positive in the batch");
}

namespace {

// Gallery of query i ranked by descending dot product, ties to smaller index.
std::vector<int> ranked_gallery(const Eigen::MatrixXd& dots, int i) {
  int b = static_cast<int>(dots.rows());
  std::vector<int> order;
  order.reserve(b - 1);
  for (int j = 0; j < b; ++j)
    if (j != i) order.push_back(j);
  std::sort(order.begin(), order.end(), [&](int a, int c) {
    return dots(i, a) > dots(i, c) || (dots(i, a) == dots(i, c) && a < c);
  });
  return order;
}

}  // namespace

double recall_at_k(const RetrievalBatch& batch, int k) {
  if (k < 1) throw degenerate_input("recall_at_k: K must be >= 1");
  batch.validate();
  int b = static_cast<int>(batch.embeddings.rows());
  Eigen::MatrixXd dots = batch.embeddings * batch.embeddings.transpose();
  int hits = 0;
  for (int i = 0; i < b; ++i) {
    std::vector<int> order = ranked_gallery(dots, i);
    int top = std::min<int>(k, static_cast<int>(order.size()));
    for (int r = 0; r < top; ++r)
      if (batch.labels[order[r]] == batch.labels[i]) {
        ++hits;
        break;
      }
  }
  return static_cast<double>(hits) / b;
}

double mean_average_precision(const RetrievalBatch& batch) {
  batch.validate();
  int b = static_cast<int>(batch.embeddings.rows());
  Eigen::MatrixXd dots = batch.embeddings * batch.embeddings.transpose();
  double total = 0.0;
  for (int i = 0; i < b; ++i) {
    std::vector<int> order = ranked_gallery(dots, i);
    int positives_seen = 0;
    double ap = 0.0;
    for (int r = 0; r < static_cast<int>(order.size()); ++r) {
      if (batch.labels[order[r]] == batch.labels[i]) {
        ++positives_seen;
        ap += static_cast<double>(positives_seen) / (r + 1);
      }
    }
    total += ap / positives_seen;
  }
  return total / b;
}

}  // namespace spherelab
