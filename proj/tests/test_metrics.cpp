#include <doctest.h>

#include <cmath>

#include "spherelab/errors.hpp"
#include "spherelab/metrics.hpp"

using namespace spherelab;

namespace {

RetrievalBatch pairs_batch(const Eigen::MatrixXd& embeddings, const std::vector<int>& labels) {
  RetrievalBatch b;
  b.embeddings = embeddings;
  b.labels = labels;
  return b;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("mean resultant length extremes") {
  PointCloud u = sample_uniform_sphere(16, 10000, 1);
  CHECK(mean_resultant_length(u) < 0.03);
  PointCloud conc = sample_vmf(Eigen::VectorXd::Unit(16, 0), 500.0, 2000, 2);
  CHECK(mean_resultant_length(conc) > 0.95);
}

TEST_CASE("ep sweep separates uniform from concentrated") {
  ProjectionTarget t = select_target(8);
  EPConfig cfg;
  PointCloud u = sample_uniform_sphere(8, 2048, 3);
  EpSweepSummary su = ep_sweep(u, 128, t, cfg, 7);
  CHECK(su.median > 0.0);
  CHECK(su.p99 >= su.median);
  CHECK(su.median < 0.2);

  PointCloud c = sample_vmf(Eigen::VectorXd::Unit(8, 0), 20.0, 2048, 4);
  EpSweepSummary sc = ep_sweep(c, 128, t, cfg, 7);
  CHECK(sc.median > 50.0 * su.median);
}

TEST_CASE("ep sweep is deterministic and validates dimensions") {
  ProjectionTarget t = select_target(4);
  EPConfig cfg;
  PointCloud u = sample_uniform_sphere(4, 256, 5);
  EpSweepSummary a = ep_sweep(u, 33, t, cfg, 11);
  EpSweepSummary b = ep_sweep(u, 33, t, cfg, 11);
  CHECK(a.median == b.median);
  CHECK(a.p99 == b.p99);
  ProjectionTarget wrong = select_target(5);
  CHECK_THROWS_AS(ep_sweep(u, 16, wrong, cfg, 0), degenerate_input);
  CHECK_THROWS_AS(ep_sweep(u, 0, t, cfg, 0), degenerate_input);
}

TEST_CASE("retrieval batch validation") {
  Eigen::MatrixXd e(4, 2);
  e << 1, 0, 0, 1, -1, 0, 0, -1;
  RetrievalBatch ok = pairs_batch(e, {0, 1, 0, 1});
  ok.validate();

  RetrievalBatch lonely = pairs_batch(e, {0, 0, 0, 1});
  CHECK_THROWS_AS(lonely.validate(), degenerate_input);

  Eigen::MatrixXd off = e;
  off(0, 0) = 1.5;
  RetrievalBatch not_unit = pairs_batch(off, {0, 1, 0, 1});
  CHECK_THROWS_AS(not_unit.validate(), degenerate_input);

  RetrievalBatch mismatched = pairs_batch(e, {0, 1, 0});
  CHECK_THROWS_AS(mismatched.validate(), degenerate_input);
}

TEST_CASE("recall and map on a hand-built batch") {
  // Four points on the circle at angles 0, 10, 90, 100 degrees; labels pair
  // (0,1) and (2,3). Nearest gallery row of each query is its same-label
  // partner, so every metric is 1.
  auto at = [](double deg) {
    double th = deg * M_PI / 180.0;
    return Eigen::RowVector2d(std::cos(th), std::sin(th));
  };
  Eigen::MatrixXd e(4, 2);
  e.row(0) = at(0);
  e.row(1) = at(10);
  e.row(2) = at(90);
  e.row(3) = at(100);
  RetrievalBatch b = pairs_batch(e, {7, 7, 9, 9});
  CHECK(recall_at_k(b, 1) == 1.0);
  CHECK(recall_at_k(b, 3) == 1.0);
  CHECK(mean_average_precision(b) == 1.0);

  // Cross the pairings. Queries 0 and 3 then rank their partner second
  // (AP 1/2), queries 1 and 2 rank theirs last (AP 1/3): the partner sits 90
  // degrees away while the two negatives sit at 80 and 10.
  RetrievalBatch worse = pairs_batch(e, {7, 9, 7, 9});
  CHECK(recall_at_k(worse, 1) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(recall_at_k(worse, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(recall_at_k(worse, 3) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(mean_average_precision(worse) == doctest::Approx(5.0 / 12.0).epsilon(1e-12));
}

TEST_CASE("ranking ties break toward the smaller index") {
  Eigen::MatrixXd e(4, 2);
  e << 1, 0, 0, 1, 0, 1, 0, 1;
  RetrievalBatch b = pairs_batch(e, {5, 6, 6, 5});
  // Query 0 sees rows 1,2,3 all at similarity 0; rank order is 1,2,3 so its
  // positive (row 3) sits at rank 3.
  CHECK(recall_at_k(b, 2) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(recall_at_k(b, 3) == 1.0);
}

TEST_CASE("recall arguments") {
  Eigen::MatrixXd e(2, 2);
  e << 1, 0, 1, 0;
  RetrievalBatch b = pairs_batch(e, {1, 1});
  CHECK(recall_at_k(b, 1) == 1.0);
  CHECK_THROWS_AS(recall_at_k(b, 0), std::invalid_argument);
}

TEST_CASE("random embeddings sit at the chance level") {
  // 50 instances x 2 copies of random unit embeddings: Recall@1 has mean
  // 1/99, mAP has mean H(99)/99. Averaged over batches both land within a
  // few standard errors.
  const int batches = 60;
  double r1 = 0.0, map = 0.0;
  for (int rep = 0; rep < batches; ++rep) {
    PointCloud cloud = sample_uniform_sphere(16, 100, 77, static_cast<std::uint64_t>(rep));
    std::vector<int> labels(100);
    for (int i = 0; i < 100; ++i) labels[static_cast<std::size_t>(i)] = i / 2;
    RetrievalBatch b = pairs_batch(cloud.data, labels);
    r1 += recall_at_k(b, 1);
    map += mean_average_precision(b);
  }
  r1 /= batches;
  map /= batches;
  double h99 = 0.0;
  for (int i = 1; i <= 99; ++i) h99 += 1.0 / i;
  CHECK(r1 == doctest::Approx(1.0 / 99).epsilon(0.5));
  CHECK(map == doctest::Approx(h99 / 99).epsilon(0.15));
  CHECK(map >= r1 / 99.0);
}

}
