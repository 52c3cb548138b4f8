#include "spherelab/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "spherelab/epps_pulley.hpp"
#include "spherelab/errors.hpp"
#include "spherelab/io.hpp"
#include "spherelab/knn_lab.hpp"
#include "spherelab/krr_lab.hpp"
#include "spherelab/metrics.hpp"
#include "spherelab/sphere_geometry.hpp"
#include "spherelab/susreg.hpp"
#include "spherelab/target_density.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace spherelab {

namespace {

// ---------------------------------------------------------------- plumbing

struct Common {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> config;
  bool no_overwrite = false;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "RNG seed (default 0)");
  cmd->add_option("--out", c.out, "output directory, or - for stdout (default -)");
  cmd->add_option("--config", c.config, "JSON config file; explicit flags take precedence");
  cmd->add_flag("--no-overwrite", c.no_overwrite, "fail instead of replacing existing artifacts");
}

// Flag > config file > built-in default, recording the resolved value in the
// manifest as it goes.
class Resolver {
 public:
  Resolver(const char* subcommand, const Common& common) {
    if (common.config) {
      std::ifstream is(*common.config);
      if (!is) throw std::runtime_error("cannot open config file " + *common.config);
      is >> file_;
    }
    manifest_["subcommand"] = subcommand;
    manifest_["version"] = kVersion;
    seed = (*this)(common.seed, "seed", std::uint64_t{0});
    out = (*this)(common.out, "out", std::string("-"));
    overwrite = !common.no_overwrite && file_.value("overwrite", true);
    manifest_["overwrite"] = overwrite;
  }

  template <typename T>
  T operator()(const std::optional<T>& flag, const char* key, T fallback) {
    T v = flag ? *flag : (file_.contains(key) ? file_.at(key).get<T>() : fallback);
    manifest_[key] = v;
    return v;
  }

  const json& manifest() const { return manifest_; }

  std::uint64_t seed = 0;
  std::string out = "-";
  bool overwrite = true;

 private:
  json file_ = json::object();
  json manifest_ = json::object();
};

void write_text_file(const fs::path& p, const std::string& content, bool overwrite) {
  if (!overwrite && fs::exists(p))
    throw std::runtime_error("refusing to overwrite " + p.string());
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  os << content;
}

// Streams the first artifact to stdout when out is "-", otherwise writes all
// artifacts plus manifest.json under the directory.
void emit(const Resolver& r, const std::vector<std::pair<std::string, std::string>>& artifacts) {
  if (r.out == "-") {
    std::cout << artifacts.front().second;
    return;
  }
  fs::path dir(r.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
  for (const auto& [name, content] : artifacts)
    write_text_file(dir / name, content, r.overwrite);
  write_text_file(dir / "manifest.json", r.manifest().dump(2) + "\n", r.overwrite);
}

std::string csv_string(const std::vector<std::string>& header, const Eigen::MatrixXd& rows) {
  std::ostringstream os;
  write_csv(os, header, rows);
  return os.str();
}

std::string json_string(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------- parsing

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  parts.push_back(cur);
  return parts;
}

double parse_double(const std::string& s) {
  size_t pos = 0;
  double v = std::stod(s, &pos);
  if (pos != s.size()) throw degenerate_input("cannot parse number '" + s + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  for (const std::string& p : split(s, ',')) out.push_back(parse_double(p));
  return out;
}

Eigen::VectorXd parse_vector(const std::string& s) {
  std::vector<double> v = parse_list(s);
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

RadialLaw parse_atoms(const std::string& s) {
  RadialLaw law;
  for (const std::string& p : split(s, ',')) {
    std::vector<std::string> rw = split(p, ':');
    if (rw.size() != 2) throw degenerate_input("atom '" + p + "' is not radius:weight");
    law.atoms.emplace_back(parse_double(rw[0]), parse_double(rw[1]));
  }
  law.validate();
  return law;
}

// The three-component benchmark mixture: means e1, e2 and the diagonal.
std::vector<VmfComponent> default3_mixture(int d, double kappa) {
  std::vector<VmfComponent> comps(3);
  comps[0].mu = Eigen::VectorXd::Unit(d, 0);
  comps[1].mu = Eigen::VectorXd::Unit(d, 1);
  comps[2].mu = Eigen::VectorXd::Ones(d) / std::sqrt(static_cast<double>(d));
  double w[3] = {1.0 / 3, 1.0 / 3, 1.0 - 2.0 / 3};
  for (int i = 0; i < 3; ++i) {
    comps[i].kappa = kappa;
    comps[i].weight = w[i];
  }
  return comps;
}

// "default3" or a JSON array [{"weight": w, "kappa": k, "mu": [...]}].
std::vector<VmfComponent> parse_components(const std::string& s, int d, double kappa) {
  if (s == "default3") return default3_mixture(d, kappa);
  json arr = json::parse(s);
  if (!arr.is_array() || arr.empty())
    throw degenerate_input("--components must be 'default3' or a JSON array");
  std::vector<VmfComponent> comps;
  for (const json& c : arr) {
    VmfComponent comp;
    comp.weight = c.at("weight").get<double>();
    comp.kappa = c.at("kappa").get<double>();
    std::vector<double> mu = c.at("mu").get<std::vector<double>>();
    comp.mu = Eigen::Map<const Eigen::VectorXd>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    comp.mu.normalize();
    comps.push_back(comp);
  }
  return comps;
}

// "uniform" | "vmf:KAPPA" | "radial:R:W,R:W,..."
DistributionSpec parse_krr_distribution(const std::string& s, int d) {
  if (s == "uniform") return DistributionSpec::uniform(d);
  if (s.rfind("vmf:", 0) == 0) {
    VmfComponent comp;
    comp.mu = Eigen::VectorXd::Unit(d, 0);
    comp.kappa = parse_double(s.substr(4));
    comp.weight = 1.0;
    DistributionSpec spec = DistributionSpec::vmf_mixture({comp}, d);
    spec.label = s;
    return spec;
  }
  if (s.rfind("radial:", 0) == 0) {
    DistributionSpec spec = DistributionSpec::radial(parse_atoms(s.substr(7)), d);
    spec.label = s;
    return spec;
  }
  throw degenerate_input("unknown distribution '" + s + "'");
}

// ---------------------------------------------------------------- knn glue

ManifoldSpec parse_manifold(const std::string& s) {
  if (s == "circle") return ManifoldSpec::circle();
  if (s == "sphere2") return ManifoldSpec::sphere2();
  throw degenerate_input("unknown manifold '" + s + "' (circle|sphere2)");
}

DensitySpec parse_density(const ManifoldSpec& man, const std::string& s, double kappa,
                          double mu_angle, const std::string& mu) {
  if (s == "uniform") return DensitySpec::uniform(man);
  if (s == "vmf") {
    Eigen::VectorXd mean;
    if (man.kind == manifold_kind::circle)
      mean = circle_point(mu_angle);
    else
      mean = parse_vector(mu).normalized();
    return DensitySpec::vmf(man, mean, kappa);
  }
  throw degenerate_input("unknown density '" + s + "' (uniform|vmf)");
}

TargetFunctionSpec parse_target_fn(const std::string& s) {
  if (s == "cos") return TargetFunctionSpec::circle_cos();
  if (s == "sin") return TargetFunctionSpec::circle_sin();
  if (s == "y1") return TargetFunctionSpec::sphere2_y1();
  if (s == "y2") return TargetFunctionSpec::sphere2_y2();
  throw degenerate_input("unknown target function '" + s + "' (cos|sin|y1|y2)");
}

Eigen::VectorXd parse_query(const ManifoldSpec& man, double theta, const std::string& query) {
  if (man.kind == manifold_kind::circle) return circle_point(theta);
  return parse_vector(query).normalized();
}

// ---------------------------------------------------------------- commands

int cmd_rho(Resolver& r, int dim, int grid, const std::string& kind) {
  if (dim < 2) throw degenerate_input("rho: --dim must be >= 2");
  if (grid < 1) throw degenerate_input("rho: --grid must be >= 1");
  ProjectionTarget target = kind == "auto"       ? select_target(dim)
                            : kind == "exact"    ? make_exact_rho(dim)
                            : kind == "gaussian" ? make_gaussian_approx(dim)
                                                 : throw degenerate_input(
                                                       "rho: --kind is auto|exact|gaussian");
  Eigen::MatrixXd rows(grid, 3);
  for (int i = 0; i < grid; ++i) {
    double t = -1.0 + 2.0 * (i + 0.5) / grid;
    rows(i, 0) = t;
    rows(i, 1) = rho_pdf(target, t);
    rows(i, 2) = characteristic_function(target, t);
  }
  emit(r, {{"rho.csv", csv_string({"t", "pdf", "cf"}, rows)}});
  return 0;
}

int cmd_sample(Resolver& r, const std::string& dist, int dim, int n, double kappa,
               const std::string& mu, const std::string& components, const std::string& atoms) {
  if (dim < 2) throw degenerate_input("sample: --dim must be >= 2");
  if (n < 1) throw degenerate_input("sample: --n must be >= 1");
  Eigen::MatrixXd data;
  if (dist == "uniform") {
    data = sample_uniform_sphere(dim, n, r.seed).data;
  } else if (dist == "vmf") {
    Eigen::VectorXd mean =
        mu.empty() ? Eigen::VectorXd(Eigen::VectorXd::Unit(dim, 0)) : parse_vector(mu).normalized();
    data = sample_vmf(mean, kappa, n, r.seed).data;
  } else if (dist == "vmf-mixture") {
    data = sample_vmf_mixture(parse_components(components, dim, kappa), n, r.seed).data;
  } else if (dist == "radial") {
    PointCloud base = sample_uniform_sphere(dim, n, r.seed);
    data = sample_radial(base, parse_atoms(atoms), r.seed).data;
  } else {
    throw degenerate_input("sample: unknown --dist '" + dist + "'");
  }
  std::vector<std::string> header;
  for (int j = 0; j < dim; ++j) header.push_back("x" + std::to_string(j));
  emit(r, {{"sample.csv", csv_string(header, data)}});
  return 0;
}

int cmd_ep_test(Resolver& r, const std::string& input, int dim, int null_reps,
                double weight_variance, int quad_nodes, double quad_halfwidth) {
  if (input.empty()) throw degenerate_input("ep-test: --input is required");
  if (dim < 2) throw degenerate_input("ep-test: --dim must be >= 2");
  csv_table tbl = read_csv(input);
  if (tbl.values.rows() < 1) throw degenerate_input("ep-test: no samples in " + input);
  Eigen::VectorXd samples = tbl.values.col(0);
  int n = static_cast<int>(samples.size());

  ProjectionTarget target = select_target(dim);
  EPConfig cfg{weight_variance, quad_nodes, quad_halfwidth};
  cfg.validate();

  json out;
  out["statistic"] = ep_statistic(samples, target, cfg);
  out["n"] = n;
  if (null_reps > 0) {
    EPGrid grid(target, cfg);
    std::vector<double> null_stats(null_reps);
    for (int rep = 0; rep < null_reps; ++rep)
      null_stats[rep] = grid.statistic(sample_target(target, n, r.seed, rep));
    std::sort(null_stats.begin(), null_stats.end());
    int k = null_reps;
    out["null_median"] =
        (k % 2 == 1) ? null_stats[k / 2] : 0.5 * (null_stats[k / 2 - 1] + null_stats[k / 2]);
    out["null_p99"] = null_stats[std::max(0, static_cast<int>(std::ceil(0.99 * k)) - 1)];
  }
  emit(r, {{"ep.json", json_string(out)}});
  return 0;
}

int cmd_train_toy(Resolver& r, int dim, int n, int slices, double lambda, int steps, double lr,
                  const std::string& init, double kappa, int views, int v_g) {
  if (views < 1) throw degenerate_input("train-toy: --views must be >= 1");
  MultiViewBatch batch;
  batch.v_g = v_g;
  for (int v = 0; v < views; ++v) {
    if (init == "uniform")
      batch.views.push_back(sample_uniform_sphere(dim, n, r.seed, v));
    else if (init == "vmf-mixture")
      batch.views.push_back(sample_vmf_mixture(default3_mixture(dim, kappa), n, r.seed, v));
    else
      throw degenerate_input("train-toy: --init is uniform|vmf-mixture");
  }

  TrainConfig cfg;
  cfg.steps = steps;
  cfg.learning_rate = lr;
  cfg.lambda = lambda;
  cfg.num_slices = slices;
  cfg.seed = r.seed;
  TrainResult result = train_toy(batch, cfg, select_target(dim));

  Eigen::MatrixXd hist(result.history.size(), 5);
  for (size_t i = 0; i < result.history.size(); ++i) {
    const TrainHistoryRow& row = result.history[i];
    hist.row(static_cast<Eigen::Index>(i)) << row.step, row.inv_loss, row.susreg_loss,
        row.total_loss, row.resultant_length;
  }
  std::vector<std::string> final_header;
  for (int j = 0; j < dim; ++j) final_header.push_back("x" + std::to_string(j));
  emit(r, {{"history.csv",
            csv_string({"step", "inv_loss", "susreg_loss", "total_loss", "resultant_length"},
                       hist)},
           {"final.csv", csv_string(final_header, result.final_batch.views[0].data)}});
  return 0;
}

int cmd_knn_bias(Resolver& r, const std::string& manifold, const std::string& density,
                 double kappa, double mu_angle, const std::string& mu, const std::string& target,
                 double theta, const std::string& query, int k, int n, int reps,
                 bool radius_correction) {
  ManifoldSpec man = parse_manifold(manifold);
  DensitySpec dens = parse_density(man, density, kappa, mu_angle, mu);
  TargetFunctionSpec fn = parse_target_fn(target);
  Eigen::VectorXd q = parse_query(man, theta, query);

  McEstimate mc = pointwise_bias_mc(man, dens, fn, q, k, n, reps, r.seed);
  double r0 = knn_radius(dens, q, k, n);
  double radius = radius_correction ? knn_radius(dens, q, k, n, true) : r0;
  // The leading bias scales with the squared radius, so the corrected radius
  // reshapes the prediction by (r/r0)^2.
  double leading = bias_leading_term(man, dens, fn, q, k, n) * (radius * radius) / (r0 * r0);

  Eigen::MatrixXd row(1, 7);
  row << q[0], q[1], (man.ambient > 2 ? q[2] : 0.0), mc.mean, mc.std_error, leading, radius;
  emit(r, {{"bias.csv",
            csv_string({"query_0", "query_1", "query_2", "bias_mc", "bias_stderr",
                        "bias_leading", "radius"},
                       row)}});
  return 0;
}

int cmd_knn_isb(Resolver& r, const std::string& manifold, const std::string& density, double kappa,
                double mu_angle, const std::string& mu, const std::string& target, int k, int n,
                int reps, int grid) {
  ManifoldSpec man = parse_manifold(manifold);
  DensitySpec dens = parse_density(man, density, kappa, mu_angle, mu);
  TargetFunctionSpec fn = parse_target_fn(target);

  double mc = isb_mc(man, dens, fn, k, n, reps, grid, r.seed);
  double leading = isb_leading(man, dens, fn, k, n);

  Eigen::MatrixXd row(1, 6);
  row << k, n, reps, mc, leading, mc / leading;
  emit(r, {{"isb.csv",
            csv_string({"k", "n", "reps", "isb_mc", "isb_leading", "ratio"}, row)}});
  return 0;
}

int cmd_knn_minimax(Resolver& r, double c, const std::string& slopes, const std::string& kappas,
                    int k, int n, int reps) {
  ManifoldSpec man = ManifoldSpec::circle();
  std::vector<double> kappa_list = parse_list(kappas);
  std::vector<DensitySpec> densities;
  for (double kp : kappa_list) {
    if (kp == 0.0)
      densities.push_back(DensitySpec::uniform(man));
    else
      densities.push_back(DensitySpec::vmf(man, circle_point(0.0), kp));
  }
  MinimaxTable table =
      minimax_probe(man, densities, c, parse_list(slopes), k, n, reps, r.seed);

  int n_dens = static_cast<int>(table.density_names.size());
  int n_slopes = static_cast<int>(table.slopes.size());
  Eigen::MatrixXd rows(n_dens * n_slopes, 4);
  for (int di = 0; di < n_dens; ++di)
    for (int si = 0; si < n_slopes; ++si)
      rows.row(di * n_slopes + si) << kappa_list[di], table.slopes[si], table.isb(di, si),
          table.std_error(di, si);
  emit(r, {{"minimax.csv", csv_string({"kappa", "slope", "isb", "stderr"}, rows)}});
  return 0;
}

int cmd_knn_fig1(Resolver& r, int k, int n, int reps, int ring, double sigma2,
                 const std::string& queries) {
  DensitySpec dens = DensitySpec::gaussian_euclidean(Eigen::VectorXd::Zero(2), sigma2);
  std::vector<std::string> query_strs = split(queries, ';');
  Eigen::MatrixXd rows(query_strs.size(), 7);
  for (size_t i = 0; i < query_strs.size(); ++i) {
    Eigen::VectorXd q = parse_vector(query_strs[i]);
    if (q.size() != 2) throw degenerate_input("fig1 queries must be x,y pairs");
    AnisotropyReport rep = neighborhood_anisotropy(dens, q, k, n, reps, r.seed, ring);
    rows.row(static_cast<Eigen::Index>(i)) << q[0], q[1], rep.shift[0], rep.shift[1],
        rep.shift_std_error[0], rep.shift_std_error[1], rep.eigen_ratio;
  }
  emit(r, {{"fig1.csv",
            csv_string({"query_x", "query_y", "shift_x", "shift_y", "stderr_x", "stderr_y",
                        "ecc"},
                       rows)}});
  return 0;
}

int cmd_krr_spectrum(Resolver& r, const std::string& dist, int dim, double kappa, int batch,
                     int reps) {
  DistributionSpec spec = parse_krr_distribution(dist, dim);
  KernelSpec kernel = KernelSpec::exponential_dot(kappa);
  spec.validate_energy();

  SpectrumReport report = covariance_spectrum(spec.sample(batch, r.seed, 0), kernel);
  EigenvalueTable table = compare_top_eigenvalue({spec}, kernel, batch, reps, r.seed);

  json out;
  int top = std::min<int>(16, static_cast<int>(report.eigenvalues.size()));
  out["eigenvalues_top16"] = std::vector<double>(report.eigenvalues.data(),
                                                 report.eigenvalues.data() + top);
  out["mu1_mean"] = table.mu1_mean[0];
  out["mu1_stderr"] = table.mu1_std_error[0];
  json wci;
  for (size_t i = 0; i < report.lambda_grid.size(); ++i)
    wci[format_g17(report.lambda_grid[i])] = report.worst_case[i];
  out["worst_case_isb"] = wci;
  emit(r, {{"spectrum.json", json_string(out)}});
  return 0;
}

int cmd_retrieval_eval(Resolver& r, const std::string& embeddings, const std::string& labels,
                       int batch, const std::string& k_list) {
  if (embeddings.empty() || labels.empty())
    throw degenerate_input("retrieval-eval: --embeddings and --labels are required");
  csv_table emb = read_csv(embeddings);
  csv_table lab = read_csv(labels);
  int total = static_cast<int>(emb.values.rows());
  if (lab.values.rows() != total)
    throw degenerate_input("retrieval-eval: embeddings and labels row counts differ");
  if (batch < 2) throw degenerate_input("retrieval-eval: --batch must be >= 2");
  int batches = total / batch;
  if (batches < 1) throw degenerate_input("retrieval-eval: fewer rows than one batch");

  std::vector<double> ks = parse_list(k_list);
  std::vector<double> recall_acc(ks.size(), 0.0);
  double map_acc = 0.0;
  for (int b = 0; b < batches; ++b) {
    RetrievalBatch rb;
    rb.embeddings = emb.values.middleRows(static_cast<Eigen::Index>(b) * batch, batch);
    for (int i = 0; i < batch; ++i)
      rb.labels.push_back(static_cast<int>(lab.values(static_cast<Eigen::Index>(b) * batch + i, 0)));
    for (size_t i = 0; i < ks.size(); ++i)
      recall_acc[i] += recall_at_k(rb, static_cast<int>(ks[i]));
    map_acc += mean_average_precision(rb);
  }

  json out;
  json recall;
  for (size_t i = 0; i < ks.size(); ++i)
    recall[std::to_string(static_cast<int>(ks[i]))] = recall_acc[i] / batches;
  out["recall"] = recall;
  out["map"] = map_acc / batches;
  out["batches"] = batches;
  emit(r, {{"retrieval.json", json_string(out)}});
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"spherelab: hyperspherical uniformity regularization and manifold "
               "regression experiments"};
  app.require_subcommand(1);
  std::function<int()> action;

  // rho
  auto rho_common = std::make_shared<Common>();
  auto rho_dim = std::make_shared<std::optional<int>>();
  auto rho_grid = std::make_shared<std::optional<int>>();
  auto rho_kind = std::make_shared<std::optional<std::string>>();
  {
    CLI::App* cmd = app.add_subcommand("rho", "projected-coordinate target density table");
    cmd->add_option("--dim", *rho_dim, "ambient dimension d");
    cmd->add_option("--grid", *rho_grid, "number of t grid midpoints");
    cmd->add_option("--kind", *rho_kind, "auto|exact|gaussian");
    add_common(cmd, *rho_common);
    cmd->callback([&action, rho_common, rho_dim, rho_grid, rho_kind] {
      action = [=] {
        Resolver r("rho", *rho_common);
        return cmd_rho(r, r(*rho_dim, "dim", -1), r(*rho_grid, "grid", 129),
                       r(*rho_kind, "kind", std::string("auto")));
      };
    });
  }

  // sample
  auto sm_common = std::make_shared<Common>();
  auto sm_dist = std::make_shared<std::optional<std::string>>();
  auto sm_dim = std::make_shared<std::optional<int>>();
  auto sm_n = std::make_shared<std::optional<int>>();
  auto sm_kappa = std::make_shared<std::optional<double>>();
  auto sm_mu = std::make_shared<std::optional<std::string>>();
  auto sm_components = std::make_shared<std::optional<std::string>>();
  auto sm_atoms = std::make_shared<std::optional<std::string>>();
  {
    CLI::App* cmd = app.add_subcommand("sample", "draw points from the supported distributions");
    cmd->add_option("--dist", *sm_dist, "uniform|vmf|vmf-mixture|radial");
    cmd->add_option("--dim", *sm_dim, "ambient dimension");
    cmd->add_option("--n", *sm_n, "number of points");
    cmd->add_option("--kappa", *sm_kappa, "vMF concentration");
    cmd->add_option("--mu", *sm_mu, "vMF mean direction, comma separated");
    cmd->add_option("--components", *sm_components, "'default3' or JSON mixture array");
    cmd->add_option("--atoms", *sm_atoms, "radial law radius:weight pairs");
    add_common(cmd, *sm_common);
    cmd->callback([&action, sm_common, sm_dist, sm_dim, sm_n, sm_kappa, sm_mu, sm_components,
                   sm_atoms] {
      action = [=] {
        Resolver r("sample", *sm_common);
        return cmd_sample(r, r(*sm_dist, "dist", std::string("uniform")), r(*sm_dim, "dim", 2),
                          r(*sm_n, "n", 100), r(*sm_kappa, "kappa", 10.0),
                          r(*sm_mu, "mu", std::string()),
                          r(*sm_components, "components", std::string("default3")),
                          r(*sm_atoms, "atoms", std::string("1:1")));
      };
    });
  }

  // ep-test
  auto ep_common = std::make_shared<Common>();
  auto ep_input = std::make_shared<std::optional<std::string>>();
  auto ep_dim = std::make_shared<std::optional<int>>();
  auto ep_null = std::make_shared<std::optional<int>>();
  auto ep_wv = std::make_shared<std::optional<double>>();
  auto ep_nodes = std::make_shared<std::optional<int>>();
  auto ep_hw = std::make_shared<std::optional<double>>();
  {
    CLI::App* cmd = app.add_subcommand("ep-test", "EP discrepancy of projected samples");
    cmd->add_option("--input", *ep_input, "CSV of projection samples (first column)");
    cmd->add_option("--dim", *ep_dim, "ambient dimension of the target law");
    cmd->add_option("--null-reps", *ep_null, "null replications for the calibration band");
    cmd->add_option("--weight-variance", *ep_wv, "variance of the frequency weight");
    cmd->add_option("--quad-nodes", *ep_nodes, "frequency grid nodes (odd)");
    cmd->add_option("--quad-halfwidth", *ep_hw, "frequency truncation, 0 = automatic");
    add_common(cmd, *ep_common);
    cmd->callback([&action, ep_common, ep_input, ep_dim, ep_null, ep_wv, ep_nodes, ep_hw] {
      action = [=] {
        Resolver r("ep-test", *ep_common);
        return cmd_ep_test(r, r(*ep_input, "input", std::string()), r(*ep_dim, "dim", -1),
                           r(*ep_null, "null_reps", 0), r(*ep_wv, "weight_variance", 1.0),
                           r(*ep_nodes, "quad_nodes", 129), r(*ep_hw, "quad_halfwidth", 0.0));
      };
    });
  }

  // train-toy
  auto tt_common = std::make_shared<Common>();
  auto tt_dim = std::make_shared<std::optional<int>>();
  auto tt_n = std::make_shared<std::optional<int>>();
  auto tt_slices = std::make_shared<std::optional<int>>();
  auto tt_lambda = std::make_shared<std::optional<double>>();
  auto tt_steps = std::make_shared<std::optional<int>>();
  auto tt_lr = std::make_shared<std::optional<double>>();
  auto tt_init = std::make_shared<std::optional<std::string>>();
  auto tt_kappa = std::make_shared<std::optional<double>>();
  auto tt_views = std::make_shared<std::optional<int>>();
  auto tt_vg = std::make_shared<std::optional<int>>();
  {
    CLI::App* cmd = app.add_subcommand("train-toy", "gradient descent under the combined loss");
    cmd->add_option("--dim", *tt_dim, "embedding dimension");
    cmd->add_option("--n", *tt_n, "points per view");
    cmd->add_option("--slices", *tt_slices, "slicing directions per step");
    cmd->add_option("--lambda", *tt_lambda, "uniformity weight in [0,1]");
    cmd->add_option("--steps", *tt_steps, "gradient steps");
    cmd->add_option("--lr", *tt_lr, "learning rate");
    cmd->add_option("--init", *tt_init, "uniform|vmf-mixture");
    cmd->add_option("--kappa", *tt_kappa, "concentration of the vmf-mixture init");
    cmd->add_option("--views", *tt_views, "number of views");
    cmd->add_option("--vg", *tt_vg, "number of global views");
    add_common(cmd, *tt_common);
    cmd->callback([&action, tt_common, tt_dim, tt_n, tt_slices, tt_lambda, tt_steps, tt_lr,
                   tt_init, tt_kappa, tt_views, tt_vg] {
      action = [=] {
        Resolver r("train-toy", *tt_common);
        return cmd_train_toy(r, r(*tt_dim, "dim", 16), r(*tt_n, "n", 1024),
                             r(*tt_slices, "slices", 1024), r(*tt_lambda, "lambda", 1.0),
                             r(*tt_steps, "steps", 200), r(*tt_lr, "learning_rate", 0.5),
                             r(*tt_init, "init", std::string("vmf-mixture")),
                             r(*tt_kappa, "kappa", 20.0), r(*tt_views, "views", 1),
                             r(*tt_vg, "v_g", 1));
      };
    });
  }

  // knn-bias
  auto kb_common = std::make_shared<Common>();
  auto kb_manifold = std::make_shared<std::optional<std::string>>();
  auto kb_density = std::make_shared<std::optional<std::string>>();
  auto kb_kappa = std::make_shared<std::optional<double>>();
  auto kb_mu_angle = std::make_shared<std::optional<double>>();
  auto kb_mu = std::make_shared<std::optional<std::string>>();
  auto kb_target = std::make_shared<std::optional<std::string>>();
  auto kb_theta = std::make_shared<std::optional<double>>();
  auto kb_query = std::make_shared<std::optional<std::string>>();
  auto kb_k = std::make_shared<std::optional<int>>();
  auto kb_n = std::make_shared<std::optional<int>>();
  auto kb_reps = std::make_shared<std::optional<int>>();
  auto kb_correction = std::make_shared<bool>(false);
  {
    CLI::App* cmd = app.add_subcommand("knn-bias", "pointwise k-NN bias, Monte Carlo vs leading");
    cmd->add_option("--manifold", *kb_manifold, "circle|sphere2");
    cmd->add_option("--density", *kb_density, "uniform|vmf");
    cmd->add_option("--kappa", *kb_kappa, "vMF concentration");
    cmd->add_option("--mu-angle", *kb_mu_angle, "vMF mean angle (circle)");
    cmd->add_option("--mu", *kb_mu, "vMF mean (sphere2)");
    cmd->add_option("--target", *kb_target, "cos|sin|y1|y2");
    cmd->add_option("--theta", *kb_theta, "query angle (circle)");
    cmd->add_option("--query", *kb_query, "query point (sphere2)");
    cmd->add_option("--k", *kb_k, "neighbors");
    cmd->add_option("--n", *kb_n, "sample size");
    cmd->add_option("--reps", *kb_reps, "replications");
    cmd->add_flag("--radius-correction", *kb_correction,
                  "apply the curvature/density radius correction to the prediction");
    add_common(cmd, *kb_common);
    cmd->callback([&action, kb_common, kb_manifold, kb_density, kb_kappa, kb_mu_angle, kb_mu,
                   kb_target, kb_theta, kb_query, kb_k, kb_n, kb_reps, kb_correction] {
      action = [=] {
        Resolver r("knn-bias", *kb_common);
        std::optional<bool> corr_flag = *kb_correction ? std::optional<bool>(true) : std::nullopt;
        return cmd_knn_bias(r, r(*kb_manifold, "manifold", std::string("circle")),
                            r(*kb_density, "density", std::string("uniform")),
                            r(*kb_kappa, "kappa", 1.0), r(*kb_mu_angle, "mu_angle", 0.0),
                            r(*kb_mu, "mu", std::string("0,0,1")),
                            r(*kb_target, "target", std::string("cos")),
                            r(*kb_theta, "theta", 0.0),
                            r(*kb_query, "query", std::string("0,0,1")), r(*kb_k, "k", 500),
                            r(*kb_n, "n", 200000), r(*kb_reps, "reps", 200),
                            r(corr_flag, "radius_correction", false));
      };
    });
  }

  // knn-isb
  auto ki_common = std::make_shared<Common>();
  auto ki_manifold = std::make_shared<std::optional<std::string>>();
  auto ki_density = std::make_shared<std::optional<std::string>>();
  auto ki_kappa = std::make_shared<std::optional<double>>();
  auto ki_mu_angle = std::make_shared<std::optional<double>>();
  auto ki_mu = std::make_shared<std::optional<std::string>>();
  auto ki_target = std::make_shared<std::optional<std::string>>();
  auto ki_k = std::make_shared<std::optional<int>>();
  auto ki_n = std::make_shared<std::optional<int>>();
  auto ki_reps = std::make_shared<std::optional<int>>();
  auto ki_grid = std::make_shared<std::optional<int>>();
  {
    CLI::App* cmd = app.add_subcommand("knn-isb", "integrated squared bias, Monte Carlo vs leading");
    cmd->add_option("--manifold", *ki_manifold, "circle|sphere2");
    cmd->add_option("--density", *ki_density, "uniform|vmf");
    cmd->add_option("--kappa", *ki_kappa, "vMF concentration");
    cmd->add_option("--mu-angle", *ki_mu_angle, "vMF mean angle (circle)");
    cmd->add_option("--mu", *ki_mu, "vMF mean (sphere2)");
    cmd->add_option("--target", *ki_target, "cos|sin|y1|y2");
    cmd->add_option("--k", *ki_k, "neighbors");
    cmd->add_option("--n", *ki_n, "sample size");
    cmd->add_option("--reps", *ki_reps, "replications");
    cmd->add_option("--grid", *ki_grid, "query grid size");
    add_common(cmd, *ki_common);
    cmd->callback([&action, ki_common, ki_manifold, ki_density, ki_kappa, ki_mu_angle, ki_mu,
                   ki_target, ki_k, ki_n, ki_reps, ki_grid] {
      action = [=] {
        Resolver r("knn-isb", *ki_common);
        return cmd_knn_isb(r, r(*ki_manifold, "manifold", std::string("circle")),
                           r(*ki_density, "density", std::string("uniform")),
                           r(*ki_kappa, "kappa", 1.0), r(*ki_mu_angle, "mu_angle", 0.0),
                           r(*ki_mu, "mu", std::string("0,0,1")),
                           r(*ki_target, "target", std::string("cos")), r(*ki_k, "k", 500),
                           r(*ki_n, "n", 200000), r(*ki_reps, "reps", 200),
                           r(*ki_grid, "grid", 1024));
      };
    });
  }

  // knn-minimax
  auto km_common = std::make_shared<Common>();
  auto km_c = std::make_shared<std::optional<double>>();
  auto km_slopes = std::make_shared<std::optional<std::string>>();
  auto km_kappas = std::make_shared<std::optional<std::string>>();
  auto km_k = std::make_shared<std::optional<int>>();
  auto km_n = std::make_shared<std::optional<int>>();
  auto km_reps = std::make_shared<std::optional<int>>();
  {
    CLI::App* cmd = app.add_subcommand("knn-minimax", "ramp-family sup-ISB table on the circle");
    cmd->add_option("--c", *km_c, "Laplacian budget");
    cmd->add_option("--slopes", *km_slopes, "comma list of ramp slopes R");
    cmd->add_option("--kappas", *km_kappas, "comma list of densities (0 = uniform)");
    cmd->add_option("--k", *km_k, "neighbors");
    cmd->add_option("--n", *km_n, "sample size");
    cmd->add_option("--reps", *km_reps, "replications");
    add_common(cmd, *km_common);
    cmd->callback([&action, km_common, km_c, km_slopes, km_kappas, km_k, km_n, km_reps] {
      action = [=] {
        Resolver r("knn-minimax", *km_common);
        return cmd_knn_minimax(r, r(*km_c, "c", 128.0),
                               r(*km_slopes, "slopes", std::string("1,4,16")),
                               r(*km_kappas, "kappas", std::string("0,2")), r(*km_k, "k", 400),
                               r(*km_n, "n", 400000), r(*km_reps, "reps", 300));
      };
    });
  }

  // knn-fig1
  auto kf_common = std::make_shared<Common>();
  auto kf_k = std::make_shared<std::optional<int>>();
  auto kf_n = std::make_shared<std::optional<int>>();
  auto kf_reps = std::make_shared<std::optional<int>>();
  auto kf_ring = std::make_shared<std::optional<int>>();
  auto kf_sigma2 = std::make_shared<std::optional<double>>();
  auto kf_queries = std::make_shared<std::optional<std::string>>();
  {
    CLI::App* cmd = app.add_subcommand("knn-fig1", "neighborhood centroid shift and eccentricity");
    cmd->add_option("--k", *kf_k, "neighbors");
    cmd->add_option("--n", *kf_n, "sample size");
    cmd->add_option("--reps", *kf_reps, "replications");
    cmd->add_option("--ring", *kf_ring, "rotated query copies (centered Gaussian only)");
    cmd->add_option("--sigma2", *kf_sigma2, "Gaussian variance per coordinate");
    cmd->add_option("--queries", *kf_queries, "semicolon list of x,y queries");
    add_common(cmd, *kf_common);
    cmd->callback([&action, kf_common, kf_k, kf_n, kf_reps, kf_ring, kf_sigma2, kf_queries] {
      action = [=] {
        Resolver r("knn-fig1", *kf_common);
        return cmd_knn_fig1(r, r(*kf_k, "k", 20), r(*kf_n, "n", 100000),
                            r(*kf_reps, "reps", 500), r(*kf_ring, "ring", 128),
                            r(*kf_sigma2, "sigma2", 1.0),
                            r(*kf_queries, "queries", std::string("1,0")));
      };
    });
  }

  // krr-spectrum
  auto ks_common = std::make_shared<Common>();
  auto ks_dist = std::make_shared<std::optional<std::string>>();
  auto ks_dim = std::make_shared<std::optional<int>>();
  auto ks_kappa = std::make_shared<std::optional<double>>();
  auto ks_batch = std::make_shared<std::optional<int>>();
  auto ks_reps = std::make_shared<std::optional<int>>();
  {
    CLI::App* cmd = app.add_subcommand("krr-spectrum", "Gram spectrum and worst-case ISB");
    cmd->add_option("--dist", *ks_dist, "uniform|vmf:KAPPA|radial:R:W,...");
    cmd->add_option("--dim", *ks_dim, "ambient dimension");
    cmd->add_option("--kappa", *ks_kappa, "exponential kernel concentration");
    cmd->add_option("--batch", *ks_batch, "batch size B");
    cmd->add_option("--reps", *ks_reps, "batches for the mu1 estimate");
    add_common(cmd, *ks_common);
    cmd->callback([&action, ks_common, ks_dist, ks_dim, ks_kappa, ks_batch, ks_reps] {
      action = [=] {
        Resolver r("krr-spectrum", *ks_common);
        return cmd_krr_spectrum(r, r(*ks_dist, "dist", std::string("uniform")),
                                r(*ks_dim, "dim", 2), r(*ks_kappa, "kappa", 1.0),
                                r(*ks_batch, "batch", 2000), r(*ks_reps, "reps", 8));
      };
    });
  }

  // retrieval-eval
  auto re_common = std::make_shared<Common>();
  auto re_embeddings = std::make_shared<std::optional<std::string>>();
  auto re_labels = std::make_shared<std::optional<std::string>>();
  auto re_batch = std::make_shared<std::optional<int>>();
  auto re_k = std::make_shared<std::optional<std::string>>();
  {
    CLI::App* cmd = app.add_subcommand("retrieval-eval", "batched Recall@K and mAP");
    cmd->add_option("--embeddings", *re_embeddings, "CSV of unit-row embeddings");
    cmd->add_option("--labels", *re_labels, "CSV of instance ids");
    cmd->add_option("--batch", *re_batch, "batch size");
    cmd->add_option("--k", *re_k, "comma list of K values");
    add_common(cmd, *re_common);
    cmd->callback([&action, re_common, re_embeddings, re_labels, re_batch, re_k] {
      action = [=] {
        Resolver r("retrieval-eval", *re_common);
        return cmd_retrieval_eval(r, r(*re_embeddings, "embeddings", std::string()),
                                  r(*re_labels, "labels", std::string()),
                                  r(*re_batch, "batch", 100),
                                  r(*re_k, "k", std::string("1,3,5")));
      };
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 2;
  } catch (const degenerate_input& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const training_failure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const numerical_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace spherelab
