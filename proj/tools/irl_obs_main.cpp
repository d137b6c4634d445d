// irl-obs: run observer experiments and validate configurations.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "irlobs/config_io.hpp"
#include "irlobs/harness.hpp"
#include "irlobs/linalg.hpp"

namespace fs = std::filesystem;
using namespace irlobs;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kDiverged = 2;

struct RunFlags {
  std::string config;
  std::string observer;
  std::optional<double> noise_sd;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> horizon;
  std::optional<double> dt;
  unsigned threads = 0;
  bool trial_csv = false;
};

std::string trial_file_name(const ExperimentConfig& c, const TrialResult& r) {
  std::ostringstream os;
  os << "trial_" << to_string(c.variant) << "_sd" << c.noise_sd_y << "_seed" << r.seed << ".csv";
  return os.str();
}

int run_command(const RunFlags& f) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(f.config);
    if (!f.observer.empty()) {
      cfg.variant = parse_variant(f.observer);
      cfg.variants.clear();
    }
    if (f.noise_sd) {
      cfg.noise_sd_y = cfg.noise_sd_u = *f.noise_sd;
      cfg.noise_levels.clear();
    }
    if (f.trials) cfg.trials = *f.trials;
    if (f.seed) cfg.seed = *f.seed;
    if (f.horizon) cfg.horizon = *f.horizon;
    if (f.dt) cfg.dt = *f.dt;
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.trial_csv) cfg.write_trial_csv = true;
    cfg.validate();
    for (const auto& c : expand_sweep(cfg)) prepare_experiment(c);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }

  const fs::path out_dir = cfg.output_dir.empty() ? fs::path(".") : fs::path(cfg.output_dir);
  fs::create_directories(out_dir);

  MonteCarloOptions opts;
  opts.threads = f.threads;
  if (cfg.write_trial_csv) {
    opts.on_trial = [&](const ExperimentConfig& c, const TrialResult& r) {
      write_trial_csv(r, (out_dir / trial_file_name(c, r)).string());
    };
  }
  const auto rows = run_monte_carlo(cfg, cfg.trials, cfg.seed, opts);
  const fs::path summary = out_dir / "summary.csv";
  write_summary_csv(rows, summary.string());
  std::cout << format_summary_csv(rows);
  std::cout << "summary written to " << summary.string() << "\n";

  int diverged = 0;
  for (const auto& r : rows) diverged += r.diverged;
  if (diverged > 0) {
    std::cerr << diverged << " trial(s) diverged\n";
    return kDiverged;
  }
  return kOk;
}

int validate_command(const std::string& path) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  bool ok = true;
  auto report = [&](const std::string& what, bool pass, const std::string& detail = "") {
    std::cout << (pass ? "[ok]   " : "[FAIL] ") << what;
    if (!detail.empty()) std::cout << ": " << detail;
    std::cout << "\n";
    ok = ok && pass;
  };
  Eigen::IOFormat row_fmt(6, 0, ", ", "; ", "", "", "[", "]");

  const LtiSystem sys = cfg.system();
  const CostParameterization param = cfg.param();
  std::cout << "config: " << cfg.name << "  (n=" << sys.n() << ", m=" << sys.m()
            << ", L=" << sys.L() << ", weights=" << param.weight_dim() << ")\n";
  const int obs_rank = numerical_rank(observability_matrix(sys.A(), sys.C()));
  report("observability of (A, C)", sys.observable(),
         "rank " + std::to_string(obs_rank) + " of " + std::to_string(sys.n()) +
             ", rank(C) = " + std::to_string(numerical_rank(sys.C())));

  try {
    const QuadraticCost cost = with_care_solution(sys, cfg.cost());
    const Eigen::MatrixXd K = lqr_gain(sys, cost);
    std::ostringstream s;
    s << "residual " << care_residual(sys, cost, *cost.S());
    report("Riccati equation", true, s.str());
    std::ostringstream k;
    k << K.format(row_fmt);
    report("closed loop A - B K* Hurwitz", is_hurwitz(sys.A() - sys.B() * K), "K* = " + k.str());
  } catch (const std::exception& e) {
    report("Riccati equation", false, e.what());
  }

  for (const auto& c : expand_sweep(cfg)) {
    try {
      const ExperimentSetup setup = prepare_experiment(c);
      std::ostringstream s;
      s << "K1 = " << setup.gains.K1.format(row_fmt);
      report("gain hypotheses for " + to_string(c.variant), true, s.str());
    } catch (const std::exception& e) {
      report("gain hypotheses for " + to_string(c.variant), false, e.what());
    }
  }
  const int rows = cfg.stack_capacity * (1 + sys.m());
  if (cfg.variant != ObserverVariant::kMlo || !cfg.variants.empty())
    report("stack can reach full rank", rows >= param.weight_dim(),
           std::to_string(rows) + " rows for " + std::to_string(param.weight_dim()) +
               " weights");
  return ok ? kOk : kConfigError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observer-based inverse reinforcement learning experiments"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "simulate trials and write summary.csv");
  run->add_option("--config", rf.config, "experiment JSON")->required();
  run->add_option("--observer", rf.observer, "mlo | hso | hso-kf");
  run->add_option("--noise-sd", rf.noise_sd, "noise SD on y' and u");
  run->add_option("--trials", rf.trials, "Monte-Carlo trial count");
  run->add_option("--seed", rf.seed, "base seed");
  run->add_option("--out", rf.out, "output directory");
  run->add_option("--horizon", rf.horizon, "simulated seconds");
  run->add_option("--dt", rf.dt, "integration step");
  run->add_option("--threads", rf.threads, "worker threads (also capped by IRL_OBS_THREADS)");
  run->add_flag("--trial-csv", rf.trial_csv, "write one CSV per trial");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a configuration");
  validate->add_option("--config", validate_path, "experiment JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  try {
    if (*run) return run_command(rf);
    if (*validate) return validate_command(validate_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
