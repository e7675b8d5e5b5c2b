// statsamp: probability-preserving sampling experiments over analytic
// Gaussian-mixture targets. Subcommands mirror the reproducible experiment
// set: compare-ula, ablate-dmala, ablate-pc, train, sample, plot.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "statsamp/bridge.hpp"
#include "statsamp/config.hpp"
#include "statsamp/csv.hpp"
#include "statsamp/errors.hpp"
#include "statsamp/losses.hpp"
#include "statsamp/metrics.hpp"
#include "statsamp/mixture.hpp"
#include "statsamp/mlp.hpp"
#include "statsamp/samplers.hpp"
#include "statsamp/svg.hpp"

namespace fs = std::filesystem;
using namespace statsamp;

namespace {

struct GlobalOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

int resolve_threads(const ExperimentConfig& cfg, const GlobalOpts& global) {
  if (global.threads) return *global.threads;
  if (cfg.run.threads > 0) return cfg.run.threads;
  if (const char* env = std::getenv("STATSAMP_THREADS")) {
    try {
      return std::max(0, std::stoi(env));
    } catch (const std::exception&) {
      throw ConfigError("STATSAMP_THREADS: not an integer");
    }
  }
  return 0;
}

ExperimentConfig load_config(const GlobalOpts& global, const std::string& command) {
  if (global.config_path.empty())
    throw ConfigError("--config is required for " + command);
  ExperimentConfig cfg = parse_config_file(global.config_path);
  if (global.seed) cfg.run.seed = *global.seed;
  if (global.out_dir) cfg.output.dir = *global.out_dir;
  if (global.threads) cfg.run.threads = *global.threads;
  validate_config(cfg, command);
  return cfg;
}

/// Derived per-sweep master seed; keeps sweep entries on disjoint streams
/// while staying a pure function of the configured seed.
std::uint64_t sweep_seed(std::uint64_t base, std::size_t index) {
  return base + 1000003ull * (index + 1);
}

Mlp obtain_model(const ExperimentConfig& cfg, const IsotropicGaussianMixture& gm,
                 ModelKind wanted) {
  if (!cfg.oracle.model_file.empty()) {
    LoadedMlp loaded = load_mlp(cfg.oracle.model_file);
    if (loaded.kind != wanted)
      throw ConfigError("oracle.model_file: model kind does not match this command");
    if (loaded.net.x_dim() != gm.dim())
      throw ConfigError("oracle.model_file: model dimension does not match the target");
    return std::move(loaded.net);
  }
  // train in-process from the [train] section
  TrainConfig tc = cfg.train.cfg;
  tc.seed = cfg.run.seed;
  const Objective objective = wanted == ModelKind::Velocity
                                  ? Objective::FlowMatch
                                  : objective_by_name(cfg.train.objective);
  if (wanted == ModelKind::Denoiser && objective == Objective::FlowMatch)
    throw ConfigError("train.objective: flow_match model cannot serve as a denoiser");
  Mlp net = Mlp::random_init(gm.dim(), cfg.train.hidden, gm.dim(), true,
                             cfg.run.seed ^ 0x5eed5eedull);
  std::cout << "training " << objective_name(objective) << " model in-process ("
            << tc.n_steps << " steps)\n";
  TrainResult result =
      train(std::move(net), objective, gm, BridgeSchedule::by_name(cfg.kernel.schedule),
            tc);
  return std::move(result.net);
}

DenoiserField obtain_denoiser(const ExperimentConfig& cfg,
                              const IsotropicGaussianMixture& gm, double sigma) {
  if (cfg.oracle.mode == "analytic") return exact_denoiser_field(gm, sigma);
  auto net = std::make_shared<Mlp>(obtain_model(cfg, gm, ModelKind::Denoiser));
  return mlp_denoiser_field(net, sigma);
}

VelocityField obtain_velocity(const ExperimentConfig& cfg,
                              const IsotropicGaussianMixture& gm,
                              const BridgeSchedule& sched) {
  if (cfg.oracle.mode == "analytic") return exact_velocity_field(gm, sched);
  auto net = std::make_shared<Mlp>(obtain_model(cfg, gm, ModelKind::Velocity));
  return mlp_velocity_field(net, cfg.train.cfg.tau_min, 1.0);
}

std::string trajectory_csv(const RunResult& run, int thin) {
  CsvTable table;
  table.comments.push_back("thin=" + std::to_string(thin));
  table.header = {"chain", "step", "accepted"};
  for (int j = 0; j < run.dim; ++j) table.header.push_back("x" + std::to_string(j));
  const std::size_t n_rec = run.recorded_steps.size();
  for (int c = 0; c < run.n_chains; ++c) {
    for (std::size_t r = 0; r < n_rec; ++r) {
      std::vector<std::string> row = {
          std::to_string(c), std::to_string(run.recorded_steps[r]),
          std::to_string(static_cast<int>(run.trajectory_accepted[c * n_rec + r]))};
      for (int j = 0; j < run.dim; ++j)
        row.push_back(fmt_g17(run.trajectory[(c * n_rec + r) * run.dim + j]));
      table.rows.push_back(std::move(row));
    }
  }
  return table.to_string();
}

void emit_final_scatter(const std::string& path, const RunResult& run,
                        const std::string& title) {
  std::vector<double> pts;
  pts.reserve(static_cast<std::size_t>(run.n_chains) * 2);
  for (int c = 0; c < run.n_chains; ++c) {
    const std::span<const double> p = run.final_position(c);
    pts.push_back(p[0]);
    pts.push_back(run.dim > 1 ? p[1] : 0.0);
  }
  SvgPlotOptions options;
  options.title = title;
  write_scatter_svg(path, pts, {}, options);
}

int effective_thin(const ExperimentConfig& cfg) {
  if (cfg.run.thin > 0) return cfg.run.thin;
  return std::max(1, cfg.run.n_steps / 50);
}

MetricReport report_against(const IsotropicGaussianMixture& law, const RunResult& run,
                            std::span<const double> fresh, double parameter,
                            const std::string& label, int n_threads) {
  MetricReport r;
  r.label = label;
  r.parameter = parameter;
  r.n_steps = static_cast<std::size_t>(run.n_steps);
  r.n_samples = static_cast<std::size_t>(run.n_chains);
  r.nll = nll(law, run.finals);
  r.mmd = mmd_rbf(run.finals, fresh, run.dim, Bandwidth::median(), n_threads);
  r.acceptance_rate = run.pooled.acceptance_rate;
  r.mean_move = run.pooled.mean_move;
  return r;
}

std::string metrics_csv(const std::vector<MetricReport>& reports,
                        const std::string& law_tag) {
  CsvTable table;
  table.header = {"label",        "parameter", "steps",    "acc_rate",
                  "nll_to_" + law_tag, "mmd_to_" + law_tag, "mean_move"};
  for (const MetricReport& r : reports)
    table.rows.push_back({r.label, fmt_g6(r.parameter), std::to_string(r.n_steps),
                          r.acceptance_rate ? fmt_g6(*r.acceptance_rate) : "",
                          fmt_g6(r.nll), fmt_g6(r.mmd), fmt_g6(r.mean_move)});
  return table.to_string();
}

void write_artifact(const fs::path& path, const std::string& content) {
  write_text_file(path.string(), content);
  std::cout << "wrote " << path.string() << "\n";
}

// ---------------------------------------------------------------------------

int cmd_compare_ula(const GlobalOpts& global) {
  const ExperimentConfig cfg = load_config(global, "compare-ula");
  const int n_threads = resolve_threads(cfg, global);
  const IsotropicGaussianMixture gm = cfg.target.build();
  const double h = *cfg.kernel.h;
  const double sigma = *cfg.kernel.sigma;
  const IsotropicGaussianMixture p_sigma = smooth(gm, sigma);

  Rng init_rng(cfg.run.seed);
  const std::vector<double> init = sample(p_sigma, init_rng, cfg.run.n_chains);
  const std::vector<double> fresh = sample(p_sigma, init_rng, cfg.run.n_chains);

  const int thin = effective_thin(cfg);
  RecordConfig record{thin};

  UlaKernel ula{[gm](std::span<const double> x, std::span<double> out) { gm.score(x, out); },
                h};
  const RunResult ula_run = run_chains(ula, init, gm.dim(), cfg.run.n_steps,
                                       cfg.run.seed, record, n_threads);

  DmalaKernel dmala{obtain_denoiser(cfg, gm, sigma), sigma, cfg.kernel.quadrature_nodes};
  const RunResult dmala_run = run_chains(dmala, init, gm.dim(), cfg.run.n_steps,
                                         cfg.run.seed, record, n_threads);

  std::vector<MetricReport> reports;
  reports.push_back(report_against(p_sigma, ula_run, fresh, h, "ula", n_threads));
  reports.push_back(report_against(p_sigma, dmala_run, fresh, sigma, "dmala", n_threads));

  const fs::path out(cfg.output.dir);
  fs::create_directories(out);
  write_artifact(out / "ula_trajectory.csv", trajectory_csv(ula_run, thin));
  write_artifact(out / "dmala_trajectory.csv", trajectory_csv(dmala_run, thin));
  write_artifact(out / "compare_ula_metrics.csv", metrics_csv(reports, "p_sigma"));
  if (cfg.output.emit_plots) {
    emit_final_scatter((out / "ula_final.svg").string(), ula_run, "ULA final states");
    emit_final_scatter((out / "dmala_final.svg").string(), dmala_run,
                       "dMALA final states");
    std::cout << "wrote " << (out / "ula_final.svg").string() << "\n";
    std::cout << "wrote " << (out / "dmala_final.svg").string() << "\n";
  }
  return 0;
}

int cmd_ablate_dmala(const GlobalOpts& global, std::vector<double> t_noise_cli) {
  ExperimentConfig cfg = load_config(global, "ablate-dmala");
  if (!t_noise_cli.empty()) {
    cfg.sweep.t_noise = std::move(t_noise_cli);
    validate_config(cfg, "ablate-dmala");
  }
  const int n_threads = resolve_threads(cfg, global);
  const IsotropicGaussianMixture gm = cfg.target.build();

  std::vector<MetricReport> reports;
  Rng init_rng(cfg.run.seed);
  const fs::path out(cfg.output.dir);
  fs::create_directories(out);
  for (std::size_t i = 0; i < cfg.sweep.t_noise.size(); ++i) {
    const double t_noise = cfg.sweep.t_noise[i];
    const double sigma = (1.0 - t_noise) / t_noise;
    const IsotropicGaussianMixture p_sigma = smooth(gm, sigma);
    const std::vector<double> init = sample(p_sigma, init_rng, cfg.run.n_chains);
    const std::vector<double> fresh = sample(p_sigma, init_rng, cfg.run.n_chains);

    DmalaKernel kernel{obtain_denoiser(cfg, gm, sigma), sigma, cfg.kernel.quadrature_nodes};
    const RunResult run = run_chains(kernel, init, gm.dim(), cfg.run.n_steps,
                                     sweep_seed(cfg.run.seed, i), {}, n_threads);
    reports.push_back(report_against(p_sigma, run, fresh, sigma,
                                     "dmala@" + fmt_g6(t_noise), n_threads));
    if (cfg.output.emit_plots) {
      const fs::path plot = out / ("dmala_final_tnoise_" + fmt_g6(t_noise) + ".svg");
      emit_final_scatter(plot.string(), run, "dMALA, t_noise " + fmt_g6(t_noise));
      std::cout << "wrote " << plot.string() << "\n";
    }
  }

  write_artifact(out / "ablate_dmala.csv",
                 ablation_table(reports, AblationLayout::DenoiserMala));
  return 0;
}

int cmd_ablate_pc(const GlobalOpts& global, std::vector<double> tau_cli) {
  ExperimentConfig cfg = load_config(global, "ablate-pc");
  if (!tau_cli.empty()) {
    cfg.sweep.tau = std::move(tau_cli);
    validate_config(cfg, "ablate-pc");
  }
  const int n_threads = resolve_threads(cfg, global);
  const IsotropicGaussianMixture gm = cfg.target.build();
  const BridgeSchedule sched = BridgeSchedule::by_name(cfg.kernel.schedule);

  PcKernel base;
  base.n_steps = cfg.kernel.pc_steps;
  if (cfg.kernel.pc_integrator == "solution_map") {
    base.use_map = true;
    if (cfg.oracle.mode == "analytic" && gm.n_components() == 1) {
      base.map = gaussian_exact_solution_map(gm, sched);
    } else {
      base.map = solution_map_from_velocity(obtain_velocity(cfg, gm, sched),
                                            Integrator::Rk2, cfg.kernel.pc_steps);
    }
  } else {
    base.velocity = obtain_velocity(cfg, gm, sched);
    base.method = integrator_by_name(cfg.kernel.pc_integrator);
  }

  std::vector<MetricReport> reports;
  Rng init_rng(cfg.run.seed);
  const fs::path out(cfg.output.dir);
  fs::create_directories(out);
  for (std::size_t i = 0; i < cfg.sweep.tau.size(); ++i) {
    PcKernel kernel = base;
    kernel.tau = cfg.sweep.tau[i];
    const std::vector<double> init = sample(gm, init_rng, cfg.run.n_chains);
    const std::vector<double> fresh = sample(gm, init_rng, cfg.run.n_chains);
    const RunResult run = run_chains(kernel, init, gm.dim(), cfg.run.n_steps,
                                     sweep_seed(cfg.run.seed, i), {}, n_threads);
    reports.push_back(report_against(gm, run, fresh, kernel.tau,
                                     "pc@" + fmt_g6(kernel.tau), n_threads));
    if (cfg.output.emit_plots) {
      const fs::path plot = out / ("pc_final_tau_" + fmt_g6(kernel.tau) + ".svg");
      emit_final_scatter(plot.string(), run, "PC, tau " + fmt_g6(kernel.tau));
      std::cout << "wrote " << plot.string() << "\n";
    }
  }

  write_artifact(out / "ablate_pc.csv",
                 ablation_table(reports, AblationLayout::PredictorCorrector));
  return 0;
}

int cmd_train(const GlobalOpts& global) {
  const ExperimentConfig cfg = load_config(global, "train");
  const IsotropicGaussianMixture gm = cfg.target.build();
  const Objective objective = objective_by_name(cfg.train.objective);

  TrainConfig tc = cfg.train.cfg;
  tc.seed = cfg.run.seed;
  Mlp net = Mlp::random_init(gm.dim(), cfg.train.hidden, gm.dim(), true,
                             cfg.run.seed ^ 0x5eed5eedull);
  TrainResult result = train(std::move(net), objective, gm,
                             BridgeSchedule::by_name(cfg.kernel.schedule), tc);

  const fs::path out(cfg.output.dir);
  fs::create_directories(out);
  const fs::path model_path = out / "model.bin";
  result.net.save(model_path.string(), objective == Objective::FlowMatch
                                           ? ModelKind::Velocity
                                           : ModelKind::Denoiser);
  std::cout << "wrote " << model_path.string() << "\n";

  CsvTable trace;
  trace.header = {"step", "loss"};
  for (std::size_t k = 0; k < result.loss_trace.size(); ++k)
    trace.rows.push_back({std::to_string(k + 1), fmt_g17(result.loss_trace[k])});
  write_artifact(out / "train_loss.csv", trace.to_string());
  // resolved target alongside the model, so a run can be replayed from the
  // output directory alone
  write_artifact(out / "target.ini", target_config_text(cfg.target));
  return 0;
}

int cmd_sample(const GlobalOpts& global, int n_override) {
  ExperimentConfig cfg = load_config(global, "sample");
  if (n_override > 0) cfg.run.n_samples = n_override;
  const IsotropicGaussianMixture gm = cfg.target.build();
  Rng rng(cfg.run.seed);
  const std::vector<double> draws = sample(gm, rng, cfg.run.n_samples);

  CsvTable table;
  for (int j = 0; j < gm.dim(); ++j) table.header.push_back("x" + std::to_string(j));
  for (int i = 0; i < cfg.run.n_samples; ++i) {
    std::vector<std::string> row;
    for (int j = 0; j < gm.dim(); ++j)
      row.push_back(fmt_g17(draws[static_cast<std::size_t>(i) * gm.dim() + j]));
    table.rows.push_back(std::move(row));
  }

  const fs::path out(cfg.output.dir);
  fs::create_directories(out);
  write_artifact(out / "samples.csv", table.to_string());
  if (cfg.output.emit_plots && gm.dim() >= 2) {
    std::vector<double> pts;
    for (int i = 0; i < cfg.run.n_samples; ++i) {
      pts.push_back(draws[static_cast<std::size_t>(i) * gm.dim()]);
      pts.push_back(draws[static_cast<std::size_t>(i) * gm.dim() + 1]);
    }
    SvgPlotOptions options;
    options.title = "target samples";
    write_scatter_svg((out / "samples.svg").string(), pts, {}, options);
    std::cout << "wrote " << (out / "samples.svg").string() << "\n";
  }
  return 0;
}

int cmd_plot(const std::string& input, std::string output, bool lines) {
  ParsedCsv parsed;
  try {
    parsed = read_csv(input);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  const int cx = parsed.column("x0");
  const int cy = parsed.column("x1");
  if (cx < 0) throw ConfigError(input + ": no x0 column");
  const int cchain = parsed.column("chain");

  std::vector<double> pts;
  std::vector<int> chain_of;
  try {
    for (std::size_t r = 0; r < parsed.rows.size(); ++r) {
      pts.push_back(parsed.number(r, cx));
      pts.push_back(cy >= 0 ? parsed.number(r, cy) : 0.0);
      if (cchain >= 0) chain_of.push_back(static_cast<int>(parsed.number(r, cchain)));
    }
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }

  if (output.empty()) output = fs::path(input).replace_extension(".svg").string();
  SvgPlotOptions options;
  options.title = fs::path(input).filename().string();
  options.draw_lines = lines;
  write_scatter_svg(output, pts, chain_of, options);
  std::cout << "wrote " << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"probability-preserving sampling experiments on analytic targets"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalOpts global;
  app.add_option("--config", global.config_path, "experiment config file");
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "master seed override");
  std::string out_value;
  auto* out_opt = app.add_option("--out", out_value, "output directory override");
  int threads_value = 0;
  auto* threads_opt =
      app.add_option("--threads", threads_value,
                     "worker threads (default: STATSAMP_THREADS or all cores)");

  auto* compare = app.add_subcommand("compare-ula",
                                     "run ULA and dMALA side by side from identical "
                                     "smoothed-law initializations");
  auto* ablate_dmala =
      app.add_subcommand("ablate-dmala", "denoiser-MALA sweep over t_noise");
  std::vector<double> t_noise_cli;
  ablate_dmala->add_option("--t-noise", t_noise_cli, "t_noise values")->delimiter(',');
  auto* ablate_pc = app.add_subcommand("ablate-pc", "predictor-corrector sweep over tau");
  std::vector<double> tau_cli;
  ablate_pc->add_option("--tau", tau_cli, "tau values")->delimiter(',');
  auto* train_cmd = app.add_subcommand("train", "train the configured network");
  auto* sample_cmd = app.add_subcommand("sample", "draw samples from the target");
  int n_samples_cli = 0;
  sample_cmd->add_option("--n", n_samples_cli, "number of samples");
  auto* plot_cmd = app.add_subcommand("plot", "render a trajectory CSV as an SVG");
  std::string plot_input, plot_output;
  bool plot_lines = false;
  plot_cmd->add_option("input", plot_input, "trajectory or sample CSV")->required();
  plot_cmd->add_option("--output", plot_output, "output SVG path");
  plot_cmd->add_flag("--lines", plot_lines, "draw per-chain polylines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (*seed_opt) global.seed = seed_value;
  if (*out_opt) global.out_dir = out_value;
  if (*threads_opt) global.threads = threads_value;

  try {
    if (*compare) return cmd_compare_ula(global);
    if (*ablate_dmala) return cmd_ablate_dmala(global, t_noise_cli);
    if (*ablate_pc) return cmd_ablate_pc(global, tau_cli);
    if (*train_cmd) return cmd_train(global);
    if (*sample_cmd) return cmd_sample(global, n_samples_cli);
    if (*plot_cmd) return cmd_plot(plot_input, plot_output, plot_lines);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
