#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "spherelab/epps_pulley.hpp"
#include "spherelab/sphere_geometry.hpp"
#include "spherelab/target_density.hpp"

namespace spherelab {

// Norm of the mean direction; 0 for balanced clouds, 1 for a point mass.
double mean_resultant_length(const PointCloud& points);

struct EpSweepSummary {
  double median;
  double p99;
};

// EP statistic of the projections onto num_directions fresh uniform
// directions; reported as median and 99th percentile (nearest rank).
EpSweepSummary ep_sweep(const PointCloud& points, int num_directions,
                        const ProjectionTarget& target, const EPConfig& cfg, std::uint64_t seed);

// Retrieval evaluation batch: unit-row embeddings with instance labels, every
// instance appearing at least twice so each query has a positive.
struct RetrievalBatch {
  Eigen::MatrixXd embeddings;
  std::vector<int> labels;

  void validate() const;
};

// Fraction of queries whose top-K ranked gallery (self excluded, dot-product
// similarity, ties to the smaller index) contains a same-instance row.
double recall_at_k(const RetrievalBatch& batch, int k);

// Mean over queries of the average precision of the full ranked gallery.
double mean_average_precision(const RetrievalBatch& batch);

}  // namespace spherelab
