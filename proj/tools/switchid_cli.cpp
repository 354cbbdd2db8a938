// Command-line front end: data simulation, identification, and parameter
// sweeps with CSV/JSON outputs. Exit codes: 0 success, 2 bad input or I/O,
// 3 identification ran but the consistency diagnostic failed.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <omp.h>

#include "switchid/dataset_io.hpp"
#include "switchid/identify.hpp"
#include "switchid/report_io.hpp"
#include "switchid/simulate.hpp"
#include "switchid/util.hpp"

using namespace switchid;

namespace {

SwitchedModel preset_model(const std::string& name) {
  if (name != "example1" && name != "ex2")
    throw CLI::ValidationError("--preset", "unknown preset " + name);
  SwitchedModel m;
  m.n = 2;
  m.n_a = 1;
  m.n_b = 1;
  m.modes.resize(2);
  m.modes[0].a = Eigen::VectorXd::Constant(1, 0.3);
  m.modes[0].b = Eigen::VectorXd::Constant(1, 1.0);
  m.modes[1].a = Eigen::VectorXd::Constant(1, -0.5);
  m.modes[1].b = Eigen::VectorXd::Constant(1, -1.0);
  return m;
}

struct SimulateArgs {
  std::string kind = "sar";
  std::string preset;
  bool random_model = false;
  int n = 2, na = 1, nb = 1;
  double sigma2 = 0.0;
  long N = 0;
  std::uint64_t seed = 1;
  std::string input = "uniform";
  double input_bound = 1.0;
  double input_sigma = 1.0;
  std::string switching = "iid";
  int dwell = 1;
  std::string out;
};

int run_simulate(const SimulateArgs& a) {
  const SystemKind kind = system_kind_from_string(a.kind);
  SwitchedModel model;
  std::string system_name;
  if (!a.preset.empty()) {
    model = preset_model(a.preset);
    system_name = a.preset;
  } else if (a.random_model) {
    model = random_stable_model(a.n, a.na, a.nb, a.seed);
    system_name = "random";
  } else {
    throw CLI::ValidationError("simulate", "need --preset or --random");
  }

  SwitchSpec sw;
  if (a.switching == "periodic") {
    sw.scheme = SwitchScheme::PeriodicDwell;
    sw.dwell = a.dwell;
  } else if (a.switching == "markov") {
    sw.scheme = SwitchScheme::MarkovChain;
    sw.transition = Eigen::MatrixXd::Constant(
        model.n, model.n, 1.0 / model.n);  // uniform chain
  } else if (a.switching != "iid") {
    throw CLI::ValidationError("--switch", "unknown scheme " + a.switching);
  }

  InputSpec in;
  in.bound = a.input_bound;
  in.sigma = a.input_sigma;
  if (a.input == "gaussian")
    in.kind = InputSpec::Kind::GaussianClipped;
  else if (a.input != "uniform")
    throw CLI::ValidationError("--input", "unknown input kind " + a.input);

  Dataset data = simulate(kind, model, sw, in, NoiseModel::gaussian(a.sigma2),
                          a.N, a.seed);
  data.generator = system_name + " " + data.generator;
  write_dataset(data, a.out);
  std::printf("wrote %s.csv and %s.json (N=%ld, gamma=%.4f)\n", a.out.c_str(),
              a.out.c_str(), data.N, gamma_ratio(data));
  return 0;
}

struct IdentifyArgs {
  std::string data;
  std::string sidecar;
  std::string kind;
  int n = 2;
  int na = 0, nb = 0;  // 0 = take from sidecar
  std::string noise = "known";
  double sigma2 = 0.0;
  std::string noise_json;
  double theta_max = 1.0;
  int grid = 200;
  double theta_threshold = 0.0;
  int jobs = 0;
  bool rescale = false;
  bool no_refine = false;
  long gpca_cap = 100000;
  std::string out;
  std::string theta_curve_out;
  std::string labels_out;
};

IdentifyConfig identify_config(const IdentifyArgs& a, const Dataset& data) {
  IdentifyConfig cfg;
  cfg.kind = a.kind.empty() ? data.kind : system_kind_from_string(a.kind);
  cfg.n = a.n;
  cfg.n_a = a.na > 0 ? a.na : data.n_a;
  cfg.n_b = a.nb > 0 ? a.nb : data.n_b;
  if (a.noise == "known") {
    NoiseModel model = NoiseModel::gaussian(a.sigma2);
    if (!a.noise_json.empty()) {
      std::ifstream in(a.noise_json);
      if (!in) throw std::runtime_error("cannot open " + a.noise_json);
      nlohmann::json j;
      in >> j;
      model = noise_from_json(j);
    }
    cfg.noise = NoiseSpec::known_model(std::move(model));
  } else if (a.noise == "unknown") {
    cfg.noise = NoiseSpec::unknown(a.theta_max);
  } else {
    throw CLI::ValidationError("--noise", "must be known or unknown");
  }
  cfg.theta_grid = a.grid;
  cfg.theta_sigma_abs = a.theta_threshold;
  cfg.jobs = a.jobs;
  cfg.rescale = a.rescale;
  cfg.refine_modes = !a.no_refine;
  cfg.gpca_max_candidates = a.gpca_cap;
  return cfg;
}

int run_identify(const IdentifyArgs& a) {
  const Dataset data = load_dataset(a.data, a.sidecar, a.na, a.nb);
  const IdentifyConfig cfg = identify_config(a, data);
  const IdentifyReport report = identify(data, cfg);

  if (!a.out.empty()) write_report(report, a.out);
  if (!a.theta_curve_out.empty())
    write_theta_curve(report.theta_curve, a.theta_curve_out);
  if (!a.labels_out.empty())
    write_labels(report, 1 + data.usable_offset, a.labels_out);

  std::printf("c_hat:");
  for (long i = 0; i < report.c_hat.coeffs.size(); ++i)
    std::printf(" %.4f", report.c_hat.coeffs[i]);
  std::printf("\ngap_ratio: %.3g (%s)\n", report.gap_ratio,
              report.gap_ok ? "ok" : "LOW");
  if (report.theta_estimated)
    std::printf("theta_hat: %.6g%s\n", report.theta_hat,
                report.theta_threshold_hit ? "" : " (threshold not hit)");
  for (int i = 0; i < report.model.n; ++i) {
    std::printf("mode %d: a =", i + 1);
    for (long j = 0; j < report.model.modes[i].a.size(); ++j)
      std::printf(" %.4f", report.model.modes[i].a[j]);
    std::printf(", b =");
    for (long j = 0; j < report.model.modes[i].b.size(); ++j)
      std::printf(" %.4f", report.model.modes[i].b[j]);
    std::printf("\n");
  }
  if (report.has_eval)
    std::printf("beta: %.6g  mode_accuracy: %.4f  gamma: %.4f\n",
                report.eval.beta, report.eval.mode_accuracy, report.eval.gamma);
  std::printf("elapsed: %.2fs\n", report.elapsed_seconds);
  return report.gap_ok ? 0 : 3;
}

struct SweepArgs {
  std::string kind = "sar";
  std::string preset = "example1";
  int random_systems = 0;
  std::vector<long> n_list;
  std::vector<double> sigma2_list;
  std::vector<std::uint64_t> seeds = {1};
  std::string noise = "known";
  double theta_max = 1.0;
  int grid = 200;
  int jobs = 0;
  std::uint64_t base_seed = 1;
  std::string out;
};

struct SweepCell {
  std::string system;
  SwitchedModel model;
  long N;
  double sigma2;
  std::uint64_t seed;
};

int run_sweep(const SweepArgs& a) {
  if (a.n_list.empty() || a.sigma2_list.empty())
    throw CLI::ValidationError("sweep", "need --N-list and --sigma2-list");
  const SystemKind kind = system_kind_from_string(a.kind);

  std::vector<SweepCell> cells;
  if (a.random_systems > 0) {
    for (int sys = 0; sys < a.random_systems; ++sys) {
      const SwitchedModel model =
          random_stable_model(2, 1, 1, derive_seed(a.base_seed, 1000 + sys));
      for (long N : a.n_list)
        for (double s2 : a.sigma2_list)
          cells.push_back({"random" + std::to_string(sys), model, N, s2,
                           derive_seed(a.base_seed, cells.size())});
    }
  } else {
    const SwitchedModel model = preset_model(a.preset);
    for (long N : a.n_list)
      for (double s2 : a.sigma2_list)
        for (std::uint64_t seed : a.seeds)
          cells.push_back({a.preset, model, N, s2, seed});
  }

  struct Row {
    SweepCell cell;
    IdentifyReport report;
  };
  std::vector<Row> rows(cells.size());
  const int cell_jobs = a.jobs > 0 ? a.jobs : omp_get_max_threads();
#pragma omp parallel for num_threads(cell_jobs) schedule(dynamic)
  for (size_t i = 0; i < cells.size(); ++i) {
    const SweepCell& c = cells[i];
    const Dataset data =
        simulate(kind, c.model, SwitchSpec{}, InputSpec{},
                 NoiseModel::gaussian(c.sigma2), c.N, c.seed);
    IdentifyConfig cfg;
    cfg.kind = kind;
    cfg.n = c.model.n;
    cfg.n_a = c.model.n_a;
    cfg.n_b = c.model.n_b;
    cfg.noise = a.noise == "unknown"
                    ? NoiseSpec::unknown(a.theta_max)
                    : NoiseSpec::known_model(NoiseModel::gaussian(c.sigma2));
    cfg.theta_grid = a.grid;
    cfg.jobs = 1;  // cells already run concurrently
    rows[i] = {c, identify(data, cfg)};
  }

  std::ofstream csv(a.out);
  if (!csv) throw std::runtime_error("cannot write " + a.out);
  csv << "kind,system,N,sigma2,seed,beta,sigma_min,gap_ratio,theta_hat,gamma,"
         "mode_accuracy,elapsed_s\n";
  char buf[256];
  for (const Row& r : rows) {
    const Eigen::VectorXd& sv = r.report.singular_values;
    std::snprintf(buf, sizeof(buf),
                  "%s,%s,%ld,%g,%llu,%.8g,%.8g,%.6g,%s,%.6g,%.6g,%.3f\n",
                  to_string(kind).c_str(), r.cell.system.c_str(), r.cell.N,
                  r.cell.sigma2,
                  static_cast<unsigned long long>(r.cell.seed),
                  r.report.eval.beta, sv[sv.size() - 1], r.report.gap_ratio,
                  r.report.theta_estimated
                      ? std::to_string(r.report.theta_hat).c_str()
                      : "",
                  r.report.eval.gamma, r.report.eval.mode_accuracy,
                  r.report.elapsed_seconds);
    csv << buf;
  }
  csv.close();

  // Per-variance aggregates, one row per sigma2 level.
  std::string agg_path = a.out;
  const auto dot = agg_path.rfind(".csv");
  if (dot != std::string::npos) agg_path = agg_path.substr(0, dot);
  agg_path += ".aggregate.csv";
  std::ofstream agg(agg_path);
  agg << "sigma2,cells,mean_beta,var_beta,mean_gamma,mean_elapsed_s\n";
  for (double s2 : a.sigma2_list) {
    double sum_b = 0, sum_b2 = 0, sum_g = 0, sum_t = 0;
    long count = 0;
    for (const Row& r : rows) {
      if (r.cell.sigma2 != s2) continue;
      sum_b += r.report.eval.beta;
      sum_b2 += r.report.eval.beta * r.report.eval.beta;
      sum_g += r.report.eval.gamma;
      sum_t += r.report.elapsed_seconds;
      ++count;
    }
    if (count == 0) continue;
    const double mean_b = sum_b / count;
    std::snprintf(buf, sizeof(buf), "%g,%ld,%.8g,%.8g,%.6g,%.3f\n", s2, count,
                  mean_b, sum_b2 / count - mean_b * mean_b, sum_g / count,
                  sum_t / count);
    agg << buf;
  }
  std::printf("wrote %s and %s (%zu cells)\n", a.out.c_str(), agg_path.c_str(),
              rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"switchid: switched AR/ARX identification from large noisy records"};
  app.require_subcommand(1);

  SimulateArgs sim;
  CLI::App* c_sim = app.add_subcommand("simulate", "generate a dataset");
  c_sim->add_option("--kind", sim.kind, "sar or sarx")->required();
  c_sim->add_option("--preset", sim.preset, "example1 or ex2");
  c_sim->add_flag("--random", sim.random_model, "draw a random stable model");
  c_sim->add_option("--n", sim.n, "mode count (with --random)");
  c_sim->add_option("--na", sim.na, "output order");
  c_sim->add_option("--nb", sim.nb, "input order");
  c_sim->add_option("--sigma2", sim.sigma2, "noise variance");
  c_sim->add_option("--N", sim.N, "sample count")->required();
  c_sim->add_option("--seed", sim.seed, "RNG seed");
  c_sim->add_option("--input", sim.input, "uniform or gaussian");
  c_sim->add_option("--input-bound", sim.input_bound, "|u| bound");
  c_sim->add_option("--input-sigma", sim.input_sigma, "gaussian input sigma");
  c_sim->add_option("--switch", sim.switching, "iid, periodic or markov");
  c_sim->add_option("--dwell", sim.dwell, "periodic dwell length");
  c_sim->add_option("--out", sim.out, "output basepath")->required();

  IdentifyArgs idn;
  CLI::App* c_idn = app.add_subcommand("identify", "identify from a dataset");
  c_idn->add_option("--data", idn.data, "dataset CSV path")->required();
  c_idn->add_option("--sidecar", idn.sidecar, "sidecar JSON path");
  c_idn->add_option("--kind", idn.kind, "sar or sarx (default: sidecar)");
  c_idn->add_option("--n", idn.n, "mode count");
  c_idn->add_option("--na", idn.na, "output order (default: sidecar)");
  c_idn->add_option("--nb", idn.nb, "input order (default: sidecar)");
  c_idn->add_option("--noise", idn.noise, "known or unknown");
  c_idn->add_option("--sigma2", idn.sigma2, "known Gaussian variance");
  c_idn->add_option("--noise-json", idn.noise_json, "known noise model JSON");
  c_idn->add_option("--theta-max", idn.theta_max, "search bound for unknown noise");
  c_idn->add_option("--grid", idn.grid, "theta grid points");
  c_idn->add_option("--theta-threshold", idn.theta_threshold,
                    "absolute sigma_min threshold (default: relative rule)");
  c_idn->add_option("--jobs", idn.jobs, "worker threads (0 = all)");
  c_idn->add_flag("--rescale", idn.rescale, "pre-scale data before embedding");
  c_idn->add_flag("--no-refine", idn.no_refine, "skip least-squares refit");
  c_idn->add_option("--gpca-cap", idn.gpca_cap, "max regressors scanned");
  c_idn->add_option("--out", idn.out, "report JSON path");
  c_idn->add_option("--theta-curve", idn.theta_curve_out, "theta curve CSV path");
  c_idn->add_option("--labels", idn.labels_out, "per-sample labels CSV path");

  SweepArgs swp;
  CLI::App* c_swp = app.add_subcommand("sweep", "run a parameter sweep");
  c_swp->add_option("--kind", swp.kind, "sar or sarx")->required();
  c_swp->add_option("--preset", swp.preset, "example1 or ex2");
  c_swp->add_option("--random-systems", swp.random_systems,
                    "number of random stable systems instead of a preset");
  c_swp->add_option("--N-list", swp.n_list, "sample counts")->delimiter(',');
  c_swp->add_option("--sigma2-list", swp.sigma2_list, "noise variances")
      ->delimiter(',');
  c_swp->add_option("--seeds", swp.seeds, "dataset seeds")->delimiter(',');
  c_swp->add_option("--noise", swp.noise, "known or unknown");
  c_swp->add_option("--theta-max", swp.theta_max, "search bound");
  c_swp->add_option("--grid", swp.grid, "theta grid points");
  c_swp->add_option("--jobs", swp.jobs, "concurrent cells (0 = all)");
  c_swp->add_option("--seed", swp.base_seed, "base seed for random systems");
  c_swp->add_option("--out", swp.out, "sweep CSV path")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (c_sim->parsed()) return run_simulate(sim);
    if (c_idn->parsed()) return run_identify(idn);
    if (c_swp->parsed()) return run_sweep(swp);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
