// Acceptance gate: one self-contained check per line, printed as
// [PASS]/[FAIL] with the measured quantities and the pinned tolerance.
// Exit code is the number of failing checks. The determinism check expects
// SPHERELAB_BIN to point at the CLI binary.

#include <spherelab/epps_pulley.hpp>
#include <spherelab/knn_lab.hpp>
#include <spherelab/krr_lab.hpp>
#include <spherelab/manifold.hpp>
#include <spherelab/metrics.hpp>
#include <spherelab/susreg.hpp>
#include <spherelab/target_density.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace fs = std::filesystem;
using namespace spherelab;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

int failures = 0;

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

void run_check(int idx, const char* name, double time_limit_s,
               const std::function<Outcome()>& body) {
  auto t0 = std::chrono::steady_clock::now();
  Outcome r{false, ""};
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  bool in_time = time_limit_s <= 0.0 || secs < time_limit_s;
  bool ok = r.ok && in_time;
  if (!ok) ++failures;
  if (time_limit_s > 0.0)
    std::printf("[%s] %2d. %s: %s (%.2f s, limit %.0f s)\n", ok ? "PASS" : "FAIL", idx, name,
                r.detail.c_str(), secs, time_limit_s);
  else
    std::printf("[%s] %2d. %s: %s (%.2f s)\n", ok ? "PASS" : "FAIL", idx, name, r.detail.c_str(),
                secs);
  std::fflush(stdout);
}

const int kDimLadder[] = {2, 3, 4, 8, 16, 64, 256, 512};

// ------------------------------------------------- projection density checks

Outcome check_normalization() {
  double worst_pdf = 0.0, worst_norm = 0.0;
  for (int d : kDimLadder) {
    ProjectionTarget t = make_exact_rho(d);
    double integral = integrate_pm1([&](double x) { return rho_pdf(t, x); });
    double raw = integrate_weighted_pm1(d, [](double) { return 1.0; });
    worst_pdf = std::max(worst_pdf, std::abs(integral - 1.0));
    worst_norm = std::max(worst_norm, std::abs(normalizer(d) * raw - 1.0));
  }
  bool ok = worst_pdf < 1e-9 && worst_norm < 1e-9;
  return {ok, fmt("max |integral(pdf)-1| = %.3g, max |C_d*integral(raw)-1| = %.3g, tol 1e-9",
                  worst_pdf, worst_norm)};
}

Outcome check_second_moment() {
  double worst = 0.0;
  for (int d : kDimLadder) {
    ProjectionTarget t = make_exact_rho(d);
    double m2 = integrate_pm1([&](double x) { return x * x * rho_pdf(t, x); });
    worst = std::max(worst, std::abs(m2 - 1.0 / d));
  }
  return {worst < 1e-8, fmt("max |m2 - 1/d| = %.3g, tol 1e-8", worst)};
}

// ----------------------------------------------------------- EP statistic

Outcome check_ep_closed_form() {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    int d = 257 + static_cast<int>(unif(gen) * 1000);
    int n = 8 + static_cast<int>(unif(gen) * 504);
    double vw = 0.5 + 1.5 * unif(gen);
    double shift = unif(gen) - 0.5;
    double scale = 0.05 + 0.35 * unif(gen);
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = shift + scale * normal(gen);
    ProjectionTarget target = make_gaussian_approx(d);
    EPConfig cfg{vw, 257, 0.0};
    double quad = ep_statistic(x, target, cfg);
    double closed = ep_statistic_gaussian_closed_form(x, target.sigma2, vw);
    worst = std::max(worst, std::abs(quad - closed) / std::max(std::abs(closed), 1e-300));
  }
  return {worst < 1e-6, fmt("100 instances, max relative gap = %.3g, tol 1e-6", worst)};
}

Outcome check_ep_gradient() {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal;
  const int n = 64;
  EPConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    // First half exact targets, second half the large-d Gaussian limb.
    int d = (i < 10) ? 2 + static_cast<int>(unif(gen) * 255)
                     : 257 + static_cast<int>(unif(gen) * 744);
    ProjectionTarget target = select_target(d);
    double sigma = 1.0 / std::sqrt(static_cast<double>(d));
    double shift = 0.5 * (unif(gen) - 0.5);
    Eigen::VectorXd x(n);
    for (int j = 0; j < n; ++j) x[j] = shift + sigma * normal(gen);
    Eigen::VectorXd g = ep_gradient(x, target, cfg);
    double gmax = g.cwiseAbs().maxCoeff();
    for (int j = 0; j < n; ++j) {
      double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      Eigen::VectorXd xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      double fd = (ep_statistic(xp, target, cfg) - ep_statistic(xm, target, cfg)) / (2.0 * h);
      double rel = std::abs(g[j] - fd) / std::max(std::abs(fd), 1e-3 * gmax);
      worst = std::max(worst, rel);
    }
  }
  return {worst < 1e-4, fmt("20 instances x 64 coords, max relative error = %.3g, tol 1e-4",
                            worst)};
}

// ------------------------------------------------------------- toy training

Outcome check_toy_training() {
  const int d = 16, n = 4096;
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d), e2 = Eigen::VectorXd::Zero(d);
  e1(0) = 1.0;
  e2(1) = 1.0;
  Eigen::VectorXd diag = Eigen::VectorXd::Ones(d) / 4.0;
  std::vector<VmfComponent> comps{{e1, 20.0, 1.0 / 3.0}, {e2, 20.0, 1.0 / 3.0},
                                  {diag, 20.0, 1.0 / 3.0}};
  MultiViewBatch batch = single_view(sample_vmf_mixture(comps, n, 1));

  TrainConfig cfg;
  cfg.steps = 2000;
  cfg.learning_rate = 0.5;
  cfg.lambda = 1.0;
  cfg.num_slices = 256;
  cfg.seed = 1;
  ProjectionTarget target = select_target(d);
  // Coarser frequency grid for the descent only; 65 nodes keep the statistic
  // within quadrature accuracy while halving the per-step cost. The final
  // uniformity checks below run at the default grid.
  TrainResult res = train_toy(batch, cfg, target, EPConfig{1.0, 65, 0.0});

  double resultant = mean_resultant_length(res.final_batch.views[0]);
  EPConfig full;
  EpSweepSummary sweep = ep_sweep(res.final_batch.views[0], 128, target, full, 99);
  EpSweepSummary null_sweep = ep_sweep(sample_uniform_sphere(d, n, 1234), 128, target, full, 99);

  // Mean total loss over ten disjoint 200-step windows must strictly decrease.
  bool decreasing = true;
  double prev = std::numeric_limits<double>::infinity();
  for (int w = 0; w < 10; ++w) {
    double s = 0.0;
    for (int i = 1 + 200 * w; i <= 200 * (w + 1); ++i) s += res.history[i].total_loss;
    s /= 200.0;
    if (s >= prev) decreasing = false;
    prev = s;
  }

  bool ok = resultant < 0.05 && sweep.median <= 2.0 * null_sweep.median && decreasing;
  return {ok, fmt("resultant %.3g (< 0.05), sweep median %.3g vs 2x null %.3g, "
                  "window means %s",
                  resultant, sweep.median, 2.0 * null_sweep.median,
                  decreasing ? "strictly decreasing" : "NOT decreasing")};
}

// ------------------------------------------------------------ circle k-NN

Outcome check_circle_bias_and_isb() {
  ManifoldSpec circle = ManifoldSpec::circle();
  DensitySpec uniform = DensitySpec::uniform(circle);
  TargetFunctionSpec cosfn = TargetFunctionSpec::circle_cos();
  Eigen::Vector2d q(1.0, 0.0);
  const int k = 500, n = 200000, reps = 200;

  McEstimate mc = pointwise_bias_mc(circle, uniform, cosfn, q, k, n, reps, 9);
  double lead = bias_leading_term(circle, uniform, cosfn, q, k, n);
  double r = M_PI * k / n;
  double gap = std::abs(mc.mean - lead);
  double band = std::max(0.10 * std::abs(lead), 3.0 * mc.std_error);
  bool pointwise_ok = gap <= band && std::abs(lead + r * r / 6.0) < 1e-15;

  double mc_isb = isb_mc(circle, uniform, cosfn, k, n, reps, 1024, 9);
  double lead_isb = isb_leading(circle, uniform, cosfn, k, n);
  double ratio = mc_isb / lead_isb;
  bool isb_ok = std::abs(ratio - 1.0) <= 0.15;

  return {pointwise_ok && isb_ok,
          fmt("bias_mc %.4g vs -r^2/6 %.4g (gap %.2g <= band %.2g), isb ratio %.3f in "
              "[0.85, 1.15]",
              mc.mean, lead, gap, band, ratio)};
}

Outcome check_isb_k_scaling() {
  ManifoldSpec circle = ManifoldSpec::circle();
  DensitySpec uniform = DensitySpec::uniform(circle);
  TargetFunctionSpec cosfn = TargetFunctionSpec::circle_cos();
  const int k = 500, n = 200000, reps = 150;

  double lead_k = isb_leading(circle, uniform, cosfn, k, n);
  double lead_2k = isb_leading(circle, uniform, cosfn, 2 * k, n);
  double exact_ratio = lead_2k / lead_k;
  bool exact_ok = std::abs(exact_ratio - 16.0) < 1e-12 * 16.0;

  double mc_k = isb_mc(circle, uniform, cosfn, k, n, reps, 1024, 7);
  double mc_2k = isb_mc(circle, uniform, cosfn, 2 * k, n, reps, 1024, 7);
  double track = mc_2k / (16.0 * mc_k);
  bool track_ok = std::abs(track - 1.0) <= 0.25;

  return {exact_ok && track_ok,
          fmt("isb_leading(2k)/isb_leading(k) = %.14f (exact 16), mc(2k)/(16 mc(k)) = %.3f in "
              "[0.75, 1.25]",
              exact_ratio, track)};
}

Outcome check_ramp_isb_growth() {
  ManifoldSpec circle = ManifoldSpec::circle();
  std::vector<DensitySpec> densities{DensitySpec::uniform(circle),
                                     DensitySpec::vmf(circle, Eigen::Vector2d(1.0, 0.0), 2.0)};
  MinimaxTable table = minimax_probe(circle, densities, 128.0, {1.0, 4.0, 16.0}, 400, 400000,
                                     300, 8);
  double u_min = table.isb.row(0).minCoeff();
  double u_max = table.isb.row(0).maxCoeff();
  double uniform_spread = u_max / u_min;
  double vmf_growth = table.isb(1, 2) / table.isb(1, 0);
  bool ok = uniform_spread < 1.5 && vmf_growth > 10.0;
  return {ok, fmt("uniform column spread %.3fx (< 1.5x), concentrated growth R=16/R=1 "
                  "= %.1fx (> 10x)",
                  uniform_spread, vmf_growth)};
}

Outcome check_neighborhood_anisotropy() {
  // Standard Gaussian in the plane, query on the unit circle.
  Eigen::Vector2d q(1.0, 0.0);
  DensitySpec gauss = DensitySpec::gaussian_euclidean(Eigen::Vector2d(0.0, 0.0), 1.0);
  const int k = 20, n = 100000, reps = 500;
  AnisotropyReport g = neighborhood_anisotropy(gauss, q, k, n, reps, 9, 128);
  double p = std::exp(-0.5) / (2.0 * M_PI);
  double r2 = k / (n * M_PI * p);
  double predicted = -r2 * q[0] / 4.0;
  double rel = std::abs(g.shift[0] - predicted) / std::abs(predicted);
  bool gauss_ok = rel <= 0.20;

  ManifoldSpec circle = ManifoldSpec::circle();
  AnisotropyReport u = neighborhood_anisotropy(DensitySpec::uniform(circle), q, k, n, reps, 9, 0);
  bool tangent_ok = std::abs(u.shift[1]) <= 3.0 * u.shift_std_error[1];

  return {gauss_ok && tangent_ok,
          fmt("radial shift %.4g vs predicted %.4g (off %.1f%%, tol 20%%), uniform tangential "
              "%.2g within 3 se %.2g",
              g.shift[0], predicted, 100.0 * rel, u.shift[1], 3.0 * u.shift_std_error[1])};
}

// ------------------------------------------------------------ kernel probes

Outcome check_kernel_spectrum() {
  const double i0 = 1.2660658777520084, i1 = 0.565159103992485;
  Eigen::MatrixXd pts = sample_uniform_sphere(2, 4000, 10).data;
  KernelSpec kernel = KernelSpec::exponential_dot(1.0);
  SpectrumReport spectrum = covariance_spectrum(pts, kernel);
  double mu1 = spectrum.eigenvalues[0], mu2 = spectrum.eigenvalues[1];
  bool mu_ok = std::abs(mu1 - i0) <= 0.02 * i0 && std::abs(mu2 - i1) <= 0.03 * i1;

  double brute = isb_spectral_bruteforce(spectrum, 0.1, 200, 42);
  double closed = worst_case_isb(mu1, 0.1);
  bool brute_ok = std::abs(brute - closed) <= 1e-14 * closed;

  // Concentration raises the top eigenvalue in every dimension.
  bool order_ok = true;
  double min_gap = std::numeric_limits<double>::infinity();
  for (int d : {2, 4, 8}) {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d), e2 = Eigen::VectorXd::Zero(d);
    e1(0) = 1.0;
    e2(1) = 1.0;
    Eigen::VectorXd diag = Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
    std::vector<VmfComponent> comps{{e1, 5.0, 1.0 / 3.0}, {e2, 5.0, 1.0 / 3.0},
                                    {diag, 5.0, 1.0 / 3.0}};
    RadialLaw law;
    law.atoms = {{0.5, 0.5}, {std::sqrt(1.75), 0.5}};
    std::vector<DistributionSpec> dists{DistributionSpec::uniform(d),
                                        DistributionSpec::vmf_mixture(comps, d),
                                        DistributionSpec::radial(law, d)};
    EigenvalueTable table = compare_top_eigenvalue(dists, kernel, 1000, 8, 10 + d);
    for (int j : {1, 2}) {
      double gap = (table.mu1_mean[j] - table.mu1_mean[0]) /
                   std::hypot(table.mu1_std_error[j], table.mu1_std_error[0]);
      min_gap = std::min(min_gap, gap);
      if (gap <= 3.0) order_ok = false;
    }
  }

  return {mu_ok && brute_ok && order_ok,
          fmt("mu1 %.5f vs %.5f (2%%), mu2 %.5f vs %.5f (3%%), brute sup gap %.2g, "
              "min concentration gap %.1f se (> 3)",
              mu1, i0, mu2, i1, std::abs(brute - closed), min_gap)};
}

Outcome check_linear_probe() {
  Eigen::MatrixXd uniform_pts = sample_uniform_sphere(8, 100000, 11).data;
  double eig_uniform = linear_probe_top_eig(uniform_pts);
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(8);
  mu(0) = 1.0;
  double eig_vmf = linear_probe_top_eig(sample_vmf(mu, 5.0, 100000, 11).data);
  bool ok = std::abs(eig_uniform - 0.125) <= 0.005 && eig_vmf > eig_uniform;
  return {ok, fmt("uniform top eigenvalue %.5f (1/8 +- 0.005), concentrated %.5f (larger)",
                  eig_uniform, eig_vmf)};
}

Outcome check_retrieval_chance_level() {
  const int batches = 200, B = 100, d = 16;
  double h99 = 0.0;
  for (int j = 1; j <= 99; ++j) h99 += 1.0 / j;
  double expected = h99 / 99.0;

  std::vector<int> labels(B);
  for (int i = 0; i < B; ++i) labels[i] = i / 2;
  std::vector<double> maps(batches);
  for (int b = 0; b < batches; ++b) {
    RetrievalBatch batch{sample_uniform_sphere(d, B, 12, b).data, labels};
    maps[b] = mean_average_precision(batch);
  }
  double mean = 0.0;
  for (double m : maps) mean += m;
  mean /= batches;
  double var = 0.0;
  for (double m : maps) var += (m - mean) * (m - mean);
  double stderr_mean = std::sqrt(var / (batches - 1) / batches);
  bool chance_ok = std::abs(mean - expected) <= 3.0 * stderr_mean;

  // Duplicated rows make every positive the top neighbor.
  Eigen::MatrixXd base = sample_uniform_sphere(d, B / 2, 13).data;
  Eigen::MatrixXd paired(B, d);
  for (int i = 0; i < B / 2; ++i) {
    paired.row(2 * i) = base.row(i);
    paired.row(2 * i + 1) = base.row(i);
  }
  RetrievalBatch perfect{paired, labels};
  bool perfect_ok = recall_at_k(perfect, 1) == 1.0 && mean_average_precision(perfect) == 1.0;

  return {chance_ok && perfect_ok,
          fmt("random mAP %.5f vs %.5f within 3 se (%.5f), perfect batch recall@1 = mAP = 1: %s",
              mean, expected, 3.0 * stderr_mean, perfect_ok ? "yes" : "NO")};
}

// ------------------------------------------------------------- determinism

int run_bin(const std::string& bin, const std::string& args) {
  std::string cmd = "\"" + bin + "\" " + args + " > /dev/null 2> /dev/null";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::ifstream is(entry.path(), std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    files[entry.path().filename().string()] = os.str();
  }
  return files;
}

Outcome check_cli_determinism() {
  const char* bin_env = std::getenv("SPHERELAB_BIN");
  if (!bin_env) return {false, "SPHERELAB_BIN not set"};
  std::string bin = bin_env;

  fs::remove_all("acc13");
  fs::create_directories("acc13");
  if (run_bin(bin, "sample --dist vmf --dim 6 --n 64 --kappa 8 --seed 3 --out acc13/in") != 0)
    return {false, "input generation failed"};
  {
    std::ofstream os("acc13/labels.csv");
    os << "id\n";
    for (int i = 0; i < 64; ++i) os << i / 2 << "\n";
  }

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"rho", "rho --dim 8 --grid 33"},
      {"sample", "sample --dist vmf-mixture --dim 6 --n 64 --kappa 10 --seed 3"},
      {"ep-test", "ep-test --input acc13/in/sample.csv --dim 6 --null-reps 11 --seed 5"},
      {"train-toy", "train-toy --dim 4 --n 32 --slices 16 --steps 3 --seed 1 --init uniform"},
      {"knn-bias", "knn-bias --manifold circle --density uniform --target cos --theta 0.3 "
                   "--k 20 --n 2000 --reps 30 --seed 2"},
      {"knn-isb", "knn-isb --manifold circle --density uniform --target cos --k 20 --n 2000 "
                  "--reps 30 --grid 64 --seed 2"},
      {"knn-minimax", "knn-minimax --c 128 --slopes 1,4 --kappas 0,2 --k 50 --n 5000 --reps 30 "
                      "--seed 2"},
      {"knn-fig1", "knn-fig1 --k 10 --n 5000 --reps 40 --ring 16 --seed 2 --queries 1,0"},
      {"krr-spectrum", "krr-spectrum --dist uniform --dim 2 --kappa 1 --batch 200 --reps 3 "
                       "--seed 2"},
      {"retrieval-eval", "retrieval-eval --embeddings acc13/in/sample.csv "
                         "--labels acc13/labels.csv --batch 32 --k 1,3 --seed 2"},
  };

  // Same manifest means the same resolved configuration, output directory
  // included: rerun into the same directory and snapshot between runs.
  std::string bad;
  for (const auto& [name, args] : runs) {
    std::string dir = "acc13/" + name;
    if (run_bin(bin, args + " --out " + dir) != 0) {
      bad = name + " (nonzero exit)";
      break;
    }
    std::map<std::string, std::string> first = read_dir(dir);
    if (run_bin(bin, args + " --out " + dir) != 0) {
      bad = name + " (nonzero exit on rerun)";
      break;
    }
    if (first != read_dir(dir)) {
      bad = name + " (artifacts differ)";
      break;
    }
  }
  fs::remove_all("acc13");
  if (!bad.empty()) return {false, "first mismatch: " + bad};
  return {true, fmt("%zu subcommands, repeated runs byte-identical", runs.size())};
}

}  // namespace

int main() {
  run_check(1, "projection density normalization", 1, check_normalization);
  run_check(2, "projection second moment", 1, check_second_moment);
  run_check(3, "ep statistic closed form vs quadrature", 5, check_ep_closed_form);
  run_check(4, "ep gradient vs finite differences", 30, check_ep_gradient);
  run_check(5, "toy training uniformizes a clustered start", 300, check_toy_training);
  run_check(6, "circle pointwise bias and integrated squared bias", 600,
            check_circle_bias_and_isb);
  run_check(7, "integrated squared bias k-scaling", 600, check_isb_k_scaling);
  run_check(8, "ramp family isb growth under concentration", 600, check_ramp_isb_growth);
  run_check(9, "neighborhood centroid shift", 300, check_neighborhood_anisotropy);
  run_check(10, "kernel spectrum on the circle", 300, check_kernel_spectrum);
  run_check(11, "linear probe second moment", 10, check_linear_probe);
  run_check(12, "retrieval metrics chance level and perfect batches", 10,
            check_retrieval_chance_level);
  run_check(13, "cli determinism", 0, check_cli_determinism);

  if (failures == 0)
    std::printf("all 13 checks passed\n");
  else
    std::printf("%d check(s) failed\n", failures);
  return failures;
}
