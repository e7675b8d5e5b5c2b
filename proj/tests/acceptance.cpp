// Acceptance suite: one pass/fail line per criterion, nonzero exit if any
// fails. Each criterion carries its own scale, tolerance and runtime budget.
//
// Usage: acceptance <path-to-statsamp-cli>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "statsamp/bridge.hpp"
#include "statsamp/losses.hpp"
#include "statsamp/metrics.hpp"
#include "statsamp/mixture.hpp"
#include "statsamp/mlp.hpp"
#include "statsamp/samplers.hpp"
#include "statsamp/vec.hpp"

namespace fs = std::filesystem;
using namespace statsamp;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli_path;
int g_failures = 0;

struct Outcome {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

void run_criterion(int id, const std::string& name, double budget_seconds,
                   const std::function<void(Outcome&)>& body) {
  Outcome out;
  const auto t0 = Clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.require(false, std::string("exception: ") + e.what());
  }
  const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_seconds > 0.0 && elapsed >= budget_seconds)
    out.require(false, "runtime budget exceeded");
  std::printf("%s criterion %d: %s (%.1fs)%s%s\n", out.ok ? "PASS" : "FAIL", id,
              name.c_str(), elapsed, out.detail.empty() ? "" : " -- ",
              out.detail.c_str());
  std::fflush(stdout);
  if (!out.ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

IsotropicGaussianMixture bimodal1d() {
  return IsotropicGaussianMixture(1, {0.5, 0.5}, {-1.0, 1.0}, {1.0, 1.0});
}

IsotropicGaussianMixture trimodal2d() {
  return IsotropicGaussianMixture(2, {0.3, 0.4, 0.3}, {-1.5, 0.0, 0.5, 1.0, 1.0, -1.0},
                                  {0.8, 0.6, 1.0});
}

ScoreFn score_of(const IsotropicGaussianMixture& gm) {
  return [gm](std::span<const double> x, std::span<double> out) { gm.score(x, out); };
}

double exact_mala_log_ratio(const IsotropicGaussianMixture& gm, double h,
                            std::span<const double> x, std::span<const double> y) {
  const std::vector<double> sx = gm.score(x);
  const std::vector<double> sy = gm.score(y);
  double forward = 0.0, backward = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double fw = y[j] - x[j] - h * sx[j];
    const double bw = x[j] - y[j] - h * sy[j];
    forward += fw * fw;
    backward += bw * bw;
  }
  return gm.log_density(y) - gm.log_density(x) + (forward - backward) / (4.0 * h);
}

// --------------------------------------------------------------------------

void criterion_1_ula_drift(Outcome& out) {
  // one step from exact N(0, I) samples at h = 0.3
  auto gm2 = IsotropicGaussianMixture::standard(2);
  const double h = 0.3;
  Rng rng(101);
  const std::vector<double> init = sample(gm2, rng, 100000);
  const RunResult one = run_chains(UlaKernel{score_of(gm2), h}, init, 2, 1, 102);
  for (int coord = 0; coord < 2; ++coord) {
    double mean = 0.0;
    for (int i = 0; i < 100000; ++i) mean += one.finals[2 * i + coord];
    mean /= 100000.0;
    double var = 0.0;
    for (int i = 0; i < 100000; ++i) {
      const double d = one.finals[2 * i + coord] - mean;
      var += d * d;
    }
    var /= 99999.0;
    out.require(std::abs(var - 1.09) < 0.02,
                "one-step variance " + fmt(var) + " vs 1.09 +- 0.02");
  }

  // long-run variance reaches 1 / (1 - h/2)
  auto gm1 = IsotropicGaussianMixture::standard(1);
  const std::vector<double> init1 = sample(gm1, rng, 1000);
  RecordConfig record{10};
  const RunResult run = run_chains(UlaKernel{score_of(gm1), h}, init1, 1, 20000, 103,
                                   record);
  const std::size_t n_rec = run.recorded_steps.size();
  double acc = 0.0;
  std::size_t n = 0;
  for (int c = 0; c < run.n_chains; ++c)
    for (std::size_t r = 0; r < n_rec; ++r)
      if (run.recorded_steps[r] >= 1000) {
        const double v = run.trajectory[c * n_rec + r];
        acc += v * v;
        ++n;
      }
  const double var = acc / static_cast<double>(n);
  const double expected = 1.0 / (1.0 - h / 2.0);
  out.require(std::abs(var - expected) < 0.01,
              "long-run variance " + fmt(var) + " vs " + fmt(expected) + " +- 0.01");
}

void criterion_2_dmala_invariance(Outcome& out) {
  const IsotropicGaussianMixture mixtures[] = {IsotropicGaussianMixture::standard(1),
                                               bimodal1d(), trimodal2d()};
  const char* names[] = {"gaussian", "bimodal", "trimodal"};
  for (int m = 0; m < 3; ++m) {
    for (double sigma : {0.1, 0.3, 0.5}) {
      const auto& gm = mixtures[m];
      const IsotropicGaussianMixture p_sigma = smooth(gm, sigma);
      Rng rng(1000 + m);
      const std::vector<double> init = sample(p_sigma, rng, 10000);
      const std::vector<double> fresh = sample(p_sigma, rng, 10000);
      DmalaKernel kernel{exact_denoiser_field(gm, sigma), sigma};
      const RunResult run = run_chains(kernel, init, gm.dim(), 500, 42 + m);

      const double mmd = mmd_rbf(run.finals, fresh, gm.dim());
      const NllEstimate pooled = nll_with_se(p_sigma, run.finals);
      const NllEstimate base = nll_with_se(p_sigma, fresh);
      const double se = std::sqrt(pooled.std_error * pooled.std_error +
                                  base.std_error * base.std_error);
      const std::string tag = std::string(names[m]) + " sigma=" + fmt(sigma);
      out.require(mmd < 0.02, tag + ": mmd " + fmt(mmd) + " >= 0.02");
      out.require(std::abs(pooled.value - base.value) <= 2.0 * se,
                  tag + ": nll off baseline by " +
                      fmt(std::abs(pooled.value - base.value) / se) + " se");
    }
  }
}

void criterion_3_trapezoid_identity(Outcome& out) {
  Rng rng(301);
  double worst_pair = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    const int pick = rep % 3;
    const IsotropicGaussianMixture gm = pick == 0 ? IsotropicGaussianMixture::standard(1)
                                        : pick == 1 ? bimodal1d()
                                                    : trimodal2d();
    const double sigma = rng.uniform(0.1, 1.0);
    DenoiserField D = exact_denoiser_field(gm, sigma);
    std::vector<double> x(gm.dim()), y(gm.dim());
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    for (double& v : y) v = rng.uniform(-2.0, 2.0);
    worst_pair = std::max(worst_pair,
                          std::abs(acceptance_log_ratio_full(D, sigma, x, y, 2) -
                                   acceptance_log_ratio_trapezoid(D, sigma, x, y)));
  }
  out.require(worst_pair <= 1e-12,
              "max |full(2 nodes) - trapezoid| = " + fmt(worst_pair));

  double worst_mala = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    const int dim = 1 + rep % 3;
    std::vector<double> mean(dim);
    for (double& v : mean) v = rng.uniform(-2.0, 2.0);
    auto gm = IsotropicGaussianMixture::single(mean, rng.uniform(0.3, 2.0));
    const double sigma = rng.uniform(0.1, 0.8);
    DenoiserField D = exact_denoiser_field(gm, sigma);
    const IsotropicGaussianMixture p_sigma = smooth(gm, sigma);
    std::vector<double> x(dim), y(dim);
    for (double& v : x) v = rng.uniform(-2.0, 2.0);
    for (double& v : y) v = rng.uniform(-2.0, 2.0);
    const double trap = acceptance_log_ratio_trapezoid(D, sigma, x, y);
    const double full = acceptance_log_ratio_full(D, sigma, x, y, 2);
    const double exact = exact_mala_log_ratio(p_sigma, sigma * sigma, x, y);
    worst_mala = std::max({worst_mala, std::abs(trap - exact), std::abs(full - exact)});
  }
  out.require(worst_mala <= 1e-10,
              "max |dMALA ratio - exact p_sigma MALA ratio| = " + fmt(worst_mala));
}

void criterion_4_dmala_trends(Outcome& out) {
  auto gm = swiss_roll_target(SwissRollSpec{});
  Rng rng(401);
  double prev_acc = -1.0, prev_move = 1e300;
  for (double t_noise : {0.90, 0.95, 0.98}) {
    const double sigma = (1.0 - t_noise) / t_noise;
    const IsotropicGaussianMixture p_sigma = smooth(gm, sigma);
    const std::vector<double> init = sample(p_sigma, rng, 2048);
    DmalaKernel kernel{exact_denoiser_field(gm, sigma), sigma};
    const RunResult run = run_chains(kernel, init, 2, 200, 402);
    const double acc = *run.pooled.acceptance_rate;
    const double move = run.pooled.mean_move;
    out.require(acc > prev_acc, "acceptance not increasing at t_noise " + fmt(t_noise) +
                                    " (" + fmt(prev_acc) + " -> " + fmt(acc) + ")");
    out.require(move < prev_move, "mean move not decreasing at t_noise " +
                                      fmt(t_noise) + " (" + fmt(prev_move) + " -> " +
                                      fmt(move) + ")");
    prev_acc = acc;
    prev_move = move;
  }
}

void criterion_5_pc_invariance_and_trends(Outcome& out) {
  auto lin = BridgeSchedule::linear();

  // invariance at tau = 0.95 on a mixture with exact-oracle everything
  {
    auto gm = trimodal2d();
    PcKernel kernel;
    kernel.tau = 0.95;
    kernel.velocity = exact_velocity_field(gm, lin);
    kernel.method = Integrator::Rk2;
    kernel.n_steps = 200;
    Rng rng(501);
    const std::vector<double> init = sample(gm, rng, 10000);
    const std::vector<double> fresh = sample(gm, rng, 10000);
    const RunResult run = run_chains(kernel, init, 2, 200, 502);
    const double mmd = mmd_rbf(run.finals, fresh, 2);
    const NllEstimate pooled = nll_with_se(gm, run.finals);
    const NllEstimate base = nll_with_se(gm, fresh);
    const double se = std::sqrt(pooled.std_error * pooled.std_error +
                                base.std_error * base.std_error);
    out.require(mmd < 0.02, "invariance mmd " + fmt(mmd) + " >= 0.02");
    out.require(std::abs(pooled.value - base.value) <= 2.0 * se,
                "invariance nll off baseline by " +
                    fmt(std::abs(pooled.value - base.value) / se) + " se");
  }

  // Sweep trends on the Swiss roll. With exact oracles the kernel is
  // p-invariant at every tau, so the NLL column is flat up to estimator
  // noise (trend separations of that size only appear with approximate
  // learned flows) and the (0.70, 0.85) move pair saturates at the mean
  // pairwise distance of p. The trend assertions therefore work in standard
  // errors: no pair may move against the expected direction by a
  // statistically resolvable margin, the large (0.85 -> 0.95) displacement
  // drop must appear strictly, and the law itself must stay invariant at
  // every tau.
  {
    auto gm = swiss_roll_target(SwissRollSpec{});
    VelocityField vf = exact_velocity_field(gm, lin);
    const int n_chains = 1024;
    Rng rng(503);
    const std::vector<double> fresh = sample(gm, rng, n_chains);
    const NllEstimate base = nll_with_se(gm, fresh);

    struct TauRow {
      double tau = 0.0;
      NllEstimate nll;
      double move = 0.0;
      double move_se = 0.0;
    };
    std::vector<TauRow> rows;
    for (double tau : {0.70, 0.85, 0.95}) {
      PcKernel kernel;
      kernel.tau = tau;
      kernel.velocity = vf;
      kernel.method = Integrator::Rk2;
      kernel.n_steps = 200;
      const std::vector<double> init = sample(gm, rng, n_chains);
      const RunResult run = run_chains(kernel, init, 2, 200, 504 + (int)(tau * 100));

      TauRow row;
      row.tau = tau;
      row.nll = nll_with_se(gm, run.finals);
      row.move = run.pooled.mean_move;
      double spread = 0.0;
      for (const ChainStats& s : run.per_chain) {
        const double d = s.displacement_from_start - row.move;
        spread += d * d;
      }
      row.move_se = std::sqrt(spread / (n_chains - 1.0) / n_chains);
      rows.push_back(row);

      std::printf("    tau %.2f: nll %.4f +- %.4f, mean move %.4f +- %.4f\n", tau,
                  row.nll.value, row.nll.std_error, row.move, row.move_se);

      const double se_vs_base = std::sqrt(row.nll.std_error * row.nll.std_error +
                                          base.std_error * base.std_error);
      out.require(std::abs(row.nll.value - base.value) <= 3.0 * se_vs_base,
                  "law not preserved at tau " + fmt(tau) + " (nll off baseline by " +
                      fmt(std::abs(row.nll.value - base.value) / se_vs_base) + " se)");
    }

    for (std::size_t i = 1; i < rows.size(); ++i) {
      const TauRow& lo = rows[i - 1];
      const TauRow& hi = rows[i];
      const double nll_se = std::sqrt(lo.nll.std_error * lo.nll.std_error +
                                      hi.nll.std_error * hi.nll.std_error);
      out.require(hi.nll.value <= lo.nll.value + 3.0 * nll_se,
                  "nll rises resolvably from tau " + fmt(lo.tau) + " to " +
                      fmt(hi.tau) + " (" + fmt(lo.nll.value) + " -> " +
                      fmt(hi.nll.value) + ", " +
                      fmt((hi.nll.value - lo.nll.value) / nll_se) + " se)");
      const double move_se =
          std::sqrt(lo.move_se * lo.move_se + hi.move_se * hi.move_se);
      out.require(hi.move <= lo.move + 3.0 * move_se,
                  "mean move rises resolvably from tau " + fmt(lo.tau) + " to " +
                      fmt(hi.tau) + " (" + fmt(lo.move) + " -> " + fmt(hi.move) + ")");
    }
    // the un-saturated pair carries a real, many-sigma displacement drop
    out.require(rows[2].move < rows[1].move,
                "move at tau 0.95 (" + fmt(rows[2].move) +
                    ") not below move at tau 0.85 (" + fmt(rows[1].move) + ")");
  }
}

void criterion_6_flow_to_denoiser(Outcome& out) {
  const IsotropicGaussianMixture mixtures[] = {IsotropicGaussianMixture::standard(1),
                                               bimodal1d(), trimodal2d()};
  Rng rng(601);
  for (const auto* sched_name : {"linear", "cosine"}) {
    const BridgeSchedule sched = BridgeSchedule::by_name(sched_name);
    for (const auto& gm : mixtures) {
      VelocityField vf = exact_velocity_field(gm, sched);
      SolutionMap predictor = exact_bridge_predictor_map(gm, sched);
      SolutionMap integrated = predictor_map_from_velocity(vf, sched, 200);
      double worst_vel = 0.0, worst_map = 0.0, worst_int = 0.0;
      for (double eta : {0.05, 0.1, 0.3, 0.5}) {
        for (int rep = 0; rep < 8; ++rep) {
          std::vector<double> y(gm.dim());
          for (double& v : y) v = rng.uniform(-1.5, 1.5);
          const std::vector<double> reference = tweedie_denoiser(gm, eta, y);
          const std::vector<double> via_vel = denoiser_from_velocity(vf, sched, eta, y);
          const std::vector<double> via_map =
              denoiser_from_solution_map(predictor, sched, eta, y);
          const std::vector<double> via_int =
              denoiser_from_solution_map(integrated, sched, eta, y);
          for (int j = 0; j < gm.dim(); ++j) {
            worst_vel = std::max(worst_vel, std::abs(via_vel[j] - reference[j]));
            worst_map = std::max(worst_map, std::abs(via_map[j] - reference[j]));
            worst_int = std::max(worst_int, std::abs(via_int[j] - reference[j]));
          }
        }
      }
      out.require(worst_vel <= 1e-6, std::string(sched_name) +
                                         ": velocity route off by " + fmt(worst_vel));
      out.require(worst_map <= 1e-6, std::string(sched_name) +
                                         ": solution-map route off by " +
                                         fmt(worst_map));
      out.require(worst_int <= 1e-4, std::string(sched_name) +
                                         ": integrated-map route off by " +
                                         fmt(worst_int));
    }
  }
}

void criterion_7_learning_objectives(Outcome& out) {
  // (a) parameter gradients match finite differences for all three losses
  {
    auto gm = trimodal2d();
    Rng rng(701);
    Mlp net = Mlp::random_init(2, 8, 2, true, 702);
    const DenoiseBatch dbatch = make_denoise_batch(gm, 0.1, 0.4, 16, rng);
    const FlowBatch fbatch =
        make_flow_batch(gm, BridgeSchedule::linear(), 0.5, 16, rng);
    std::vector<double> probes(3 * 2);
    rng.fill_normal(probes);
    const std::vector<double> x0 = {0.3, -0.5};

    std::vector<double> g_den(net.n_params(), 0.0), g_flow(net.n_params(), 0.0),
        g_sym(net.n_params(), 0.0);
    denoise_loss_grad(net, dbatch, g_den);
    flow_matching_loss_grad(net, fbatch, g_flow);
    symmetry_penalty_grad_accum(net, x0, 0.2, probes, 3, g_sym);

    Rng pick(703);
    double worst = 0.0;
    for (int probe = 0; probe < 20; ++probe) {
      const std::size_t idx =
          static_cast<std::size_t>(pick.uniform() * net.n_params());
      auto fd_of = [&](const std::function<double()>& value) {
        std::span<double> params = net.params();
        const double orig = params[idx];
        params[idx] = orig + 1e-4;
        const double up = value();
        params[idx] = orig - 1e-4;
        const double down = value();
        params[idx] = orig;
        return (up - down) / 2e-4;
      };
      auto rel = [](double a, double b) {
        return std::abs(a - b) / std::max({1e-3, std::abs(a), std::abs(b)});
      };
      worst = std::max(worst, rel(g_den[idx], fd_of([&] {
                         std::vector<double> s(net.n_params(), 0.0);
                         return denoise_loss_grad(net, dbatch, s);
                       })));
      worst = std::max(worst, rel(g_flow[idx], fd_of([&] {
                         std::vector<double> s(net.n_params(), 0.0);
                         return flow_matching_loss_grad(net, fbatch, s);
                       })));
      worst = std::max(worst, rel(g_sym[idx], fd_of([&] {
                         return symmetry_penalty_value(net, x0, 0.2, probes, 3);
                       })));
    }
    out.require(worst <= 1e-4, "gradient/fd relative gap " + fmt(worst));
  }

  // (b) trained Gaussian denoiser reaches the Bayes risk within 10%
  {
    auto gm = IsotropicGaussianMixture::standard(1);
    TrainConfig cfg;
    cfg.n_steps = 5000;
    cfg.batch_size = 256;
    cfg.sigma_lo = cfg.sigma_hi = 0.5;
    cfg.seed = 704;
    Mlp init = Mlp::random_init(1, 64, 1, true, 705);
    const TrainResult result =
        train(init, Objective::Denoise, gm, BridgeSchedule::linear(), cfg);
    Rng rng(706);
    const DenoiseBatch held_out = make_denoise_batch(gm, 0.5, 0.5, 100000, rng);
    const Mlp& net = result.net;
    const double loss = denoise_loss_value(
        [&](std::span<const double> y, double sigma, std::span<double> o) {
          net.forward(y, sigma, o);
          for (std::size_t j = 0; j < y.size(); ++j) o[j] += y[j];
        },
        held_out);
    out.require(std::abs(loss - 0.2) <= 0.02,
                "trained denoiser loss " + fmt(loss) + " vs Bayes risk 0.2 +- 10%");
  }

  // (c) symmetry penalty vanishes on a gradient-field network
  {
    const int d = 3, h = 5;
    Mlp net(d, h, d, false);
    Rng rng(707);
    std::span<double> w1 = net.w1();
    for (double& v : w1) v = rng.normal();
    std::span<double> w2 = net.w2();
    for (int i = 0; i < h; ++i) w2[static_cast<std::size_t>(i) * h + i] = 1.0;
    std::span<double> w3 = net.w3();
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < h; ++j)
        w3[static_cast<std::size_t>(i) * h + j] = w1[static_cast<std::size_t>(j) * d + i];
    const std::vector<double> x = {0.4, -0.2, 0.9};
    std::vector<double> probes(8 * d);
    rng.fill_normal(probes);
    const double penalty = symmetry_penalty_value(net, x, 0.0, probes, 8);
    out.require(penalty <= 1e-12,
                "gradient-field penalty " + fmt(penalty) + " > 1e-12");
  }

  // (d) antisymmetric linear map matches the closed-form expectation 8
  {
    JvpFn jvp = [](std::span<const double>, std::span<const double> v,
                   std::span<double> o) {
      o[0] = v[1];
      o[1] = -v[0];
    };
    JvpFn vjp = [](std::span<const double>, std::span<const double> u,
                   std::span<double> o) {
      o[0] = -u[1];
      o[1] = u[0];
    };
    Rng rng(708);
    const int n_probes = 4000;
    std::vector<double> probes(static_cast<std::size_t>(n_probes) * 2);
    rng.fill_normal(probes);
    const std::vector<double> x = {0.0, 0.0};
    const double penalty = symmetry_penalty_value_generic(jvp, vjp, x, probes, n_probes);
    out.require(std::abs(penalty - 8.0) < 0.5,
                "antisymmetric-map penalty " + fmt(penalty) + " vs 8 +- 0.5");
  }
}

void criterion_8_cost_accounting(Outcome& out) {
  auto gm = trimodal2d();
  auto lin = BridgeSchedule::linear();
  const int n_chains = 7, K = 13;
  const std::vector<double> init(2 * n_chains, 0.2);

  DenoiserField D = exact_denoiser_field(gm, 0.3);
  D.attach_counter();
  run_chains(DmalaKernel{D, 0.3}, init, 2, K, 801);
  out.require(D.eval_count() == 2ull * n_chains * K,
              "dmala denoiser calls " + std::to_string(D.eval_count()) + " vs " +
                  std::to_string(2 * n_chains * K));

  VelocityField vf = exact_velocity_field(gm, lin);
  vf.attach_counter();
  PcKernel euler;
  euler.tau = 0.9;
  euler.velocity = vf;
  euler.method = Integrator::Euler;
  euler.n_steps = 31;
  run_chains(euler, init, 2, K, 802);
  out.require(vf.eval_count() == 31ull * n_chains * K,
              "pc euler velocity calls " + std::to_string(vf.eval_count()) + " vs " +
                  std::to_string(31 * n_chains * K));

  SolutionMap map = solution_map_from_velocity(exact_velocity_field(gm, lin),
                                               Integrator::Rk2, 16);
  map.attach_counter();
  PcKernel direct;
  direct.tau = 0.9;
  direct.use_map = true;
  direct.map = map;
  run_chains(direct, init, 2, K, 803);
  out.require(map.eval_count() == 1ull * n_chains * K,
              "pc solution-map calls " + std::to_string(map.eval_count()) + " vs " +
                  std::to_string(n_chains * K));
}

int run_cli(const std::string& args) {
  const std::string cmd = g_cli_path + " " + args + " > /dev/null 2>&1";
  return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string read_bytes(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

void criterion_9_cli_determinism(Outcome& out) {
  const fs::path scratch = "acceptance_scratch";
  fs::remove_all(scratch);
  fs::create_directories(scratch);

  const std::string swiss_cfg = R"(
[target]
kind = swiss_roll
[kernel]
kind = dmala
h = 0.3
sigma = 0.1
pc_steps = 40
[run]
n_chains = 128
n_steps = 50
seed = 9
[train]
objective = denoise
hidden = 16
n_steps = 150
batch_size = 64
sigma_lo = 0.1
sigma_hi = 0.12
[output]
dir = unused
emit_plots = false
)";
  const fs::path cfg = scratch / "cfg.ini";
  {
    std::ofstream os(cfg);
    os << swiss_cfg;
  }

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"compare-ula", "compare-ula --config " + cfg.string()},
      {"ablate-dmala", "ablate-dmala --config " + cfg.string()},
      {"ablate-pc", "ablate-pc --config " + cfg.string()},
      {"train", "train --config " + cfg.string()},
      {"sample", "sample --config " + cfg.string()},
  };

  for (const auto& [name, base] : commands) {
    const fs::path a = scratch / (name + "_a");
    const fs::path b = scratch / (name + "_b");
    const int rc_a = run_cli(base + " --seed 777 --out " + a.string());
    const int rc_b = run_cli(base + " --seed 777 --out " + b.string());
    out.require(rc_a == 0 && rc_b == 0, name + ": nonzero exit");
    if (rc_a != 0 || rc_b != 0) continue;
    int compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      const fs::path other = b / entry.path().filename();
      const bool same = fs::exists(other) &&
                        read_bytes(entry.path()) == read_bytes(other);
      out.require(same, name + ": " + entry.path().filename().string() + " differs");
      ++compared;
    }
    out.require(compared > 0, name + ": produced no CSV output");
  }

  // plot: byte-identical SVG from the sampled CSV
  const fs::path samples = scratch / "sample_a" / "samples.csv";
  const fs::path svg_a = scratch / "plot_a.svg";
  const fs::path svg_b = scratch / "plot_b.svg";
  out.require(run_cli("plot " + samples.string() + " --output " + svg_a.string()) == 0,
              "plot: nonzero exit");
  out.require(run_cli("plot " + samples.string() + " --output " + svg_b.string()) == 0,
              "plot: nonzero exit");
  if (fs::exists(svg_a) && fs::exists(svg_b))
    out.require(read_bytes(svg_a) == read_bytes(svg_b), "plot: SVG bytes differ");
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance <path-to-statsamp-cli>\n");
    return 2;
  }
  g_cli_path = argv[1];

  run_criterion(1, "ULA drift (one-step law and AR(1) fixed point)", 10.0,
                criterion_1_ula_drift);
  run_criterion(2, "dMALA invariance of the smoothed law", 120.0,
                criterion_2_dmala_invariance);
  run_criterion(3, "trapezoid cancellation identity and Gaussian MALA equivalence",
                5.0, criterion_3_trapezoid_identity);
  run_criterion(4, "denoiser-MALA ablation trends", 60.0, criterion_4_dmala_trends);
  run_criterion(5, "predictor-corrector invariance and ablation trends", 300.0,
                criterion_5_pc_invariance_and_trends);
  run_criterion(6, "flow-to-denoiser conversion equivalence", 30.0,
                criterion_6_flow_to_denoiser);
  run_criterion(7, "learning objectives (gradients, Bayes risk, symmetry)", 300.0,
                criterion_7_learning_objectives);
  run_criterion(8, "evaluation-count accounting", 10.0, criterion_8_cost_accounting);
  run_criterion(9, "CLI determinism under a fixed seed", 0.0,
                criterion_9_cli_determinism);

  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
