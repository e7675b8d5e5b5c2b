#include "statsamp/samplers.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "statsamp/errors.hpp"
#include "statsamp/vec.hpp"

namespace statsamp {

namespace {

struct StepScratch {
  std::vector<double> a, b, c, d;
  void resize(std::size_t n) {
    a.resize(n);
    b.resize(n);
    c.resize(n);
    d.resize(n);
  }
};

void check_finite_position(std::span<const double> x, const char* who) {
  if (!all_finite(x))
    throw NumericError(std::string(who) + ": non-finite position");
}

void ula_step_impl(const ScoreFn& score, double h, ChainState& state,
                   StepScratch& ws) {
  const std::size_t d = state.position.size();
  ws.resize(d);
  score(state.position, ws.a);
  const double noise_scale = std::sqrt(2.0 * h);
  for (std::size_t j = 0; j < d; ++j)
    state.position[j] += h * ws.a[j] + noise_scale * state.rng.normal();
  check_finite_position(state.position, "ula_step");
}

bool mala_step_impl(const LogDensityFn& log_density, const ScoreFn& score, double h,
                    ChainState& state, StepScratch& ws) {
  const std::size_t d = state.position.size();
  ws.resize(d);
  std::vector<double>& sx = ws.a;
  std::vector<double>& y = ws.b;
  std::vector<double>& sy = ws.c;

  score(state.position, sx);
  const double noise_scale = std::sqrt(2.0 * h);
  for (std::size_t j = 0; j < d; ++j)
    y[j] = state.position[j] + h * sx[j] + noise_scale * state.rng.normal();
  check_finite_position(y, "mala_step");

  score(y, sy);
  // log q(x|y) - log q(y|x) with q(y|x) = N(y; x + h s(x), 2h I)
  double forward = 0.0, backward = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double fw = y[j] - state.position[j] - h * sx[j];
    const double bw = state.position[j] - y[j] - h * sy[j];
    forward += fw * fw;
    backward += bw * bw;
  }
  const double log_ratio = log_density(y) - log_density(state.position) +
                           (forward - backward) / (4.0 * h);
  const double u = state.rng.uniform();
  const bool accepted = u <= std::exp(log_ratio);
  if (accepted) state.position = y;
  return accepted;
}

bool dmala_step_impl(const DenoiserField& D, double sigma, ChainState& state,
                     StepScratch& ws) {
  const std::size_t d = state.position.size();
  ws.resize(d);
  std::vector<double>& dx = ws.a;
  std::vector<double>& y = ws.b;
  std::vector<double>& dy = ws.c;

  D.eval(state.position, dx);
  const double noise_scale = std::sqrt(2.0) * sigma;
  for (std::size_t j = 0; j < d; ++j)
    y[j] = dx[j] + noise_scale * state.rng.normal();
  check_finite_position(y, "dmala_step");

  D.eval(y, dy);
  double rx2 = 0.0, ry2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double rx = dx[j] - state.position[j];
    const double ry = dy[j] - y[j];
    rx2 += rx * rx;
    ry2 += ry * ry;
  }
  const double log_ratio = (rx2 - ry2) / (4.0 * sigma * sigma);
  const double u = state.rng.uniform();
  const bool accepted = u <= std::exp(log_ratio);
  if (accepted) state.position = y;
  return accepted;
}

// Line-integral diagnostic: n_nodes denoiser evaluations per step, with the
// endpoint evaluations shared between the quadrature and the proposal ratio.
bool dmala_quadrature_step_impl(const DenoiserField& D, double sigma, int n_nodes,
                                ChainState& state, StepScratch& ws) {
  const std::size_t d = state.position.size();
  ws.resize(d);
  std::vector<double>& dx = ws.a;
  std::vector<double>& y = ws.b;
  std::vector<double>& dy = ws.c;
  std::vector<double>& node = ws.d;

  const std::vector<double>& x = state.position;
  D.eval(x, dx);
  const double noise_scale = std::sqrt(2.0) * sigma;
  for (std::size_t j = 0; j < d; ++j)
    y[j] = dx[j] + noise_scale * state.rng.normal();
  check_finite_position(y, "dmala_step");
  D.eval(y, dy);

  const double sigma2 = sigma * sigma;
  const double dt = 1.0 / (n_nodes - 1);
  double gx = 0.0, gy = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    gx += (dx[j] - x[j]) * (y[j] - x[j]);
    gy += (dy[j] - y[j]) * (y[j] - x[j]);
  }
  double quad = 0.5 * (gx + gy);
  std::vector<double> denoised(d);
  for (int i = 1; i < n_nodes - 1; ++i) {
    const double t = dt * i;
    for (std::size_t j = 0; j < d; ++j) node[j] = x[j] + t * (y[j] - x[j]);
    D.eval(node, denoised);
    double g = 0.0;
    for (std::size_t j = 0; j < d; ++j) g += (denoised[j] - node[j]) * (y[j] - x[j]);
    quad += g;
  }
  const double delta = quad * dt / sigma2;

  double forward = 0.0, backward = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double fw = y[j] - dx[j];
    const double bw = x[j] - dy[j];
    forward += fw * fw;
    backward += bw * bw;
  }
  const double log_ratio = delta + (forward - backward) / (4.0 * sigma2);
  const double u = state.rng.uniform();
  const bool accepted = u <= std::exp(log_ratio);
  if (accepted) state.position = y;
  return accepted;
}

void pc_predict(double tau, ChainState& state, std::vector<double>& xhat) {
  const std::size_t d = state.position.size();
  xhat.resize(d);
  for (std::size_t j = 0; j < d; ++j)
    xhat[j] = tau * state.position[j] + (1.0 - tau) * state.rng.normal();
}

void pc_step_map_impl(const SolutionMap& flow, double tau, ChainState& state,
                      StepScratch& ws) {
  pc_predict(tau, state, ws.a);
  ws.b.resize(state.position.size());
  flow.eval(ws.a, tau, 1.0, ws.b);
  check_finite_position(ws.b, "pc_step");
  state.position = ws.b;
}

void pc_step_velocity_impl(const VelocityField& velocity, Integrator method,
                           int n_steps, double tau, ChainState& state,
                           StepScratch& ws) {
  pc_predict(tau, state, ws.a);
  state.position = integrate_flow(velocity, ws.a, tau, 1.0, n_steps, method);
}

void require_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("pc_step: tau must lie in (0, 1)");
}

}  // namespace

void ula_step(const ScoreFn& score, double h, ChainState& state) {
  if (!(h > 0.0)) throw std::invalid_argument("ula_step: h must be > 0");
  StepScratch ws;
  ula_step_impl(score, h, state, ws);
}

bool mala_step(const LogDensityFn& log_density, const ScoreFn& score, double h,
               ChainState& state) {
  if (!(h > 0.0)) throw std::invalid_argument("mala_step: h must be > 0");
  StepScratch ws;
  return mala_step_impl(log_density, score, h, state, ws);
}

bool dmala_step(const DenoiserField& D, double sigma, ChainState& state) {
  if (!(sigma > 0.0)) throw std::invalid_argument("dmala_step: sigma must be > 0");
  StepScratch ws;
  return dmala_step_impl(D, sigma, state, ws);
}

bool dmala_step_quadrature(const DenoiserField& D, double sigma, int n_nodes,
                           ChainState& state) {
  if (!(sigma > 0.0)) throw std::invalid_argument("dmala_step: sigma must be > 0");
  if (n_nodes < 2)
    throw std::invalid_argument("dmala_step_quadrature: n_nodes must be >= 2");
  StepScratch ws;
  return dmala_quadrature_step_impl(D, sigma, n_nodes, state, ws);
}

void pc_step(const SolutionMap& flow, double tau, ChainState& state) {
  require_tau(tau);
  StepScratch ws;
  pc_step_map_impl(flow, tau, state, ws);
}

void pc_step(const VelocityField& velocity, Integrator method, int n_steps, double tau,
             ChainState& state) {
  require_tau(tau);
  StepScratch ws;
  pc_step_velocity_impl(velocity, method, n_steps, tau, state, ws);
}

double line_integral_delta(const DenoiserField& D, double h, std::span<const double> x,
                           std::span<const double> y, int n_nodes) {
  if (n_nodes < 2) throw std::invalid_argument("line_integral_delta: n_nodes must be >= 2");
  const std::size_t d = x.size();
  std::vector<double> node(d), denoised(d), diff(d);
  for (std::size_t j = 0; j < d; ++j) diff[j] = y[j] - x[j];

  const double dt = 1.0 / (n_nodes - 1);
  double sum = 0.0;
  for (int i = 0; i < n_nodes; ++i) {
    const double t = dt * i;
    std::span<const double> point;
    if (i == 0) {
      point = x;
    } else if (i == n_nodes - 1) {
      point = y;
    } else {
      for (std::size_t j = 0; j < d; ++j) node[j] = x[j] + t * diff[j];
      point = node;
    }
    D.eval(point, denoised);
    double g = 0.0;
    for (std::size_t j = 0; j < d; ++j) g += (denoised[j] - point[j]) * diff[j];
    sum += (i == 0 || i == n_nodes - 1) ? 0.5 * g : g;
  }
  return sum * dt / h;
}

double acceptance_log_ratio_full(const DenoiserField& D, double sigma,
                                 std::span<const double> x, std::span<const double> y,
                                 int n_nodes) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("acceptance_log_ratio_full: sigma must be > 0");
  const double delta = line_integral_delta(D, sigma * sigma, x, y, n_nodes);

  const std::size_t d = x.size();
  std::vector<double> dx(d), dy(d);
  D.eval(x, dx);
  D.eval(y, dy);
  double forward = 0.0, backward = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double fw = y[j] - dx[j];
    const double bw = x[j] - dy[j];
    forward += fw * fw;
    backward += bw * bw;
  }
  return delta + (forward - backward) / (4.0 * sigma * sigma);
}

double acceptance_log_ratio_trapezoid(const DenoiserField& D, double sigma,
                                      std::span<const double> x,
                                      std::span<const double> y) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("acceptance_log_ratio_trapezoid: sigma must be > 0");
  const std::size_t d = x.size();
  std::vector<double> dx(d), dy(d);
  D.eval(x, dx);
  D.eval(y, dy);
  double rx2 = 0.0, ry2 = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const double rx = dx[j] - x[j];
    const double ry = dy[j] - y[j];
    rx2 += rx * rx;
    ry2 += ry * ry;
  }
  return (rx2 - ry2) / (4.0 * sigma * sigma);
}

namespace {

struct RecordPlan {
  std::vector<std::uint32_t> steps;

  static RecordPlan build(int n_steps, int thin) {
    RecordPlan plan;
    if (thin <= 0) return plan;
    for (int k = 0; k <= n_steps; k += thin) plan.steps.push_back(k);
    if (plan.steps.back() != static_cast<std::uint32_t>(n_steps))
      plan.steps.push_back(n_steps);
    return plan;
  }
};

/// Runs one chain start to finish. `step` applies the kernel once and
/// reports (proposed, accepted).
template <typename StepFn>
void run_single_chain(StepFn&& step, std::span<const double> init, int dim, int n_steps,
                      std::uint64_t master_seed, int chain, const RecordPlan& plan,
                      RunResult& out) {
  ChainState state(std::vector<double>(init.begin(), init.end()),
                   Rng::for_chain(master_seed, static_cast<std::uint64_t>(chain)));
  ChainStats stats;

  const std::size_t n_rec = plan.steps.size();
  std::size_t rec_cursor = 0;
  auto record = [&](int k, bool accepted) {
    if (rec_cursor < n_rec && plan.steps[rec_cursor] == static_cast<std::uint32_t>(k)) {
      const std::size_t row = static_cast<std::size_t>(chain) * n_rec + rec_cursor;
      std::copy(state.position.begin(), state.position.end(),
                out.trajectory.begin() + row * dim);
      out.trajectory_accepted[row] = accepted ? 1 : 0;
      ++rec_cursor;
    }
  };

  record(0, true);
  for (int k = 1; k <= n_steps; ++k) {
    bool proposed = false, accepted = true;
    step(state, proposed, accepted);
    state.step_index = static_cast<std::uint64_t>(k);
    if (proposed) {
      ++stats.n_proposed;
      if (accepted) ++stats.n_accepted;
    }
    record(k, accepted);
  }

  stats.acceptance_running_mean =
      stats.n_proposed > 0
          ? static_cast<double>(stats.n_accepted) / static_cast<double>(stats.n_proposed)
          : 0.0;
  stats.displacement_from_start = distance(init, state.position);

  std::copy(state.position.begin(), state.position.end(),
            out.finals.begin() + static_cast<std::size_t>(chain) * dim);
  out.per_chain[chain] = stats;
}

RunResult run_chains_impl(const Kernel& kernel, std::span<const double> init, int dim,
                          int n_steps, std::uint64_t master_seed,
                          const RecordConfig& record, bool parallel, int n_threads) {
  if (dim <= 0) throw std::invalid_argument("run_chains: dim must be positive");
  if (init.empty() || init.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument("run_chains: init must be a nonempty multiple of dim");
  if (n_steps < 1) throw std::invalid_argument("run_chains: n_steps must be >= 1");

  const int n_chains = static_cast<int>(init.size() / static_cast<std::size_t>(dim));
  const RecordPlan plan = RecordPlan::build(n_steps, record.thin);

  RunResult out;
  out.dim = dim;
  out.n_chains = n_chains;
  out.n_steps = n_steps;
  out.finals.resize(init.size());
  out.per_chain.resize(n_chains);
  out.recorded_steps = plan.steps;
  out.trajectory.resize(static_cast<std::size_t>(n_chains) * plan.steps.size() * dim);
  out.trajectory_accepted.resize(static_cast<std::size_t>(n_chains) * plan.steps.size());

  auto chain_init = [&](int c) {
    return init.subspan(static_cast<std::size_t>(c) * dim, dim);
  };

  auto run_chain = [&](int c) {
    std::visit(
        [&](const auto& k) {
          using K = std::decay_t<decltype(k)>;
          StepScratch ws;
          if constexpr (std::is_same_v<K, UlaKernel>) {
            run_single_chain(
                [&](ChainState& st, bool& proposed, bool& accepted) {
                  ula_step_impl(k.score, k.h, st, ws);
                  proposed = false;
                  accepted = true;
                },
                chain_init(c), dim, n_steps, master_seed, c, plan, out);
          } else if constexpr (std::is_same_v<K, MalaKernel>) {
            run_single_chain(
                [&](ChainState& st, bool& proposed, bool& accepted) {
                  accepted = mala_step_impl(k.log_density, k.score, k.h, st, ws);
                  proposed = true;
                },
                chain_init(c), dim, n_steps, master_seed, c, plan, out);
          } else if constexpr (std::is_same_v<K, DmalaKernel>) {
            run_single_chain(
                [&](ChainState& st, bool& proposed, bool& accepted) {
                  accepted = k.quadrature_nodes > 2
                                 ? dmala_quadrature_step_impl(
                                       k.denoiser, k.sigma, k.quadrature_nodes, st, ws)
                                 : dmala_step_impl(k.denoiser, k.sigma, st, ws);
                  proposed = true;
                },
                chain_init(c), dim, n_steps, master_seed, c, plan, out);
          } else {
            static_assert(std::is_same_v<K, PcKernel>);
            require_tau(k.tau);
            run_single_chain(
                [&](ChainState& st, bool& proposed, bool& accepted) {
                  if (k.use_map)
                    pc_step_map_impl(k.map, k.tau, st, ws);
                  else
                    pc_step_velocity_impl(k.velocity, k.method, k.n_steps, k.tau, st, ws);
                  proposed = false;
                  accepted = true;
                },
                chain_init(c), dim, n_steps, master_seed, c, plan, out);
          }
        },
        kernel);
  };

  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto guarded = [&](int c) {
    try {
      run_chain(c);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) {
        try {
          std::throw_with_nested(NumericError("chain " + std::to_string(c) + " failed"));
        } catch (...) {
          first_error = std::current_exception();
        }
      }
    }
  };

#ifdef _OPENMP
  if (parallel) {
    const int nt = n_threads > 0 ? n_threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int c = 0; c < n_chains; ++c) guarded(c);
  } else {
    for (int c = 0; c < n_chains; ++c) guarded(c);
  }
#else
  (void)parallel;
  (void)n_threads;
  for (int c = 0; c < n_chains; ++c) guarded(c);
#endif

  if (first_error) std::rethrow_exception(first_error);

  std::uint64_t total_accepted = 0, total_proposed = 0;
  std::vector<double> displacements(n_chains);
  for (int c = 0; c < n_chains; ++c) {
    total_accepted += out.per_chain[c].n_accepted;
    total_proposed += out.per_chain[c].n_proposed;
    displacements[c] = out.per_chain[c].displacement_from_start;
  }
  out.pooled.n_accepted = total_accepted;
  out.pooled.n_proposed = total_proposed;
  if (total_proposed > 0)
    out.pooled.acceptance_rate =
        static_cast<double>(total_accepted) / static_cast<double>(total_proposed);
  out.pooled.mean_move = pairwise_sum(displacements) / n_chains;
  return out;
}

}  // namespace

RunResult run_chains(const Kernel& kernel, std::span<const double> init, int dim,
                     int n_steps, std::uint64_t master_seed, const RecordConfig& record,
                     int n_threads) {
  return run_chains_impl(kernel, init, dim, n_steps, master_seed, record, true,
                         n_threads);
}

RunResult run_chains_serial(const Kernel& kernel, std::span<const double> init, int dim,
                            int n_steps, std::uint64_t master_seed,
                            const RecordConfig& record) {
  return run_chains_impl(kernel, init, dim, n_steps, master_seed, record, false, 0);
}

}  // namespace statsamp
