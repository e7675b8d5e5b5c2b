#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "statsamp/bridge.hpp"
#include "statsamp/fields.hpp"
#include "statsamp/rng.hpp"

namespace statsamp {

using ScoreFn = std::function<void(std::span<const double>, std::span<double>)>;
using LogDensityFn = std::function<double(std::span<const double>)>;

/// Position, step count and private generator stream of one chain.
struct ChainState {
  std::vector<double> position;
  std::uint64_t step_index = 0;
  Rng rng;

  ChainState(std::vector<double> pos, Rng stream)
      : position(std::move(pos)), rng(stream) {}
};

struct ChainStats {
  double acceptance_running_mean = 0.0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_proposed = 0;
  double displacement_from_start = 0.0;
};

struct PooledStats {
  /// Empty for kernels without a Metropolis step.
  std::optional<double> acceptance_rate;
  double mean_move = 0.0;
  std::uint64_t n_accepted = 0;
  std::uint64_t n_proposed = 0;
};

/// One unadjusted Langevin step x' = x + h s(x) + sqrt(2h) z. Does not
/// preserve the target for finite h; kept as the drift baseline.
void ula_step(const ScoreFn& score, double h, ChainState& state);

/// Langevin proposal with the exact Metropolis correction for a known
/// log-density. Returns whether the proposal was accepted; the position is
/// untouched on rejection.
bool mala_step(const LogDensityFn& log_density, const ScoreFn& score, double h,
               ChainState& state);

/// Composite trapezoidal approximation, over n_nodes equispaced nodes, of
///   (1/h) * integral_0^1 <D(x + t(y-x)) - (x + t(y-x)), y - x> dt.
/// Evaluates the denoiser exactly n_nodes times (endpoints land on x and y
/// exactly).
double line_integral_delta(const DenoiserField& D, double h,
                           std::span<const double> x, std::span<const double> y,
                           int n_nodes);

/// Line-integral acceptance ratio plus the Gaussian proposal log-ratio,
///   delta + (1/(4 sigma^2)) (||y - D(x)||^2 - ||x - D(y)||^2).
/// With n_nodes = 2 this equals acceptance_log_ratio_trapezoid up to
/// cancellation round-off; larger node counts are a quadrature diagnostic.
double acceptance_log_ratio_full(const DenoiserField& D, double sigma,
                                 std::span<const double> x, std::span<const double> y,
                                 int n_nodes);

/// Simplified two-evaluation form
///   (1/(4 sigma^2)) (||D(x) - x||^2 - ||D(y) - y||^2).
double acceptance_log_ratio_trapezoid(const DenoiserField& D, double sigma,
                                      std::span<const double> x,
                                      std::span<const double> y);

/// One denoiser-Metropolis step: propose y = D(x) + sqrt(2) sigma z, accept
/// with probability min{1, exp(trapezoid log-ratio)}. Exactly two denoiser
/// evaluations per step. The chain stream is consumed in a fixed order:
/// dim normals for z, then one uniform for the accept draw.
bool dmala_step(const DenoiserField& D, double sigma, ChainState& state);

/// Diagnostic variant driven by the full line-integral ratio over n_nodes
/// quadrature nodes (n_nodes denoiser evaluations per step; reduces to the
/// standard step at n_nodes = 2 up to cancellation round-off).
bool dmala_step_quadrature(const DenoiserField& D, double sigma, int n_nodes,
                           ChainState& state);

/// One predictor-corrector step: xhat = tau x + (1 - tau) z, then the flow
/// from tau back to the data end. One model call with a direct solution map.
void pc_step(const SolutionMap& flow, double tau, ChainState& state);
/// Velocity-field variant; costs n_steps (Euler) or 2 n_steps (Rk2) field
/// evaluations.
void pc_step(const VelocityField& velocity, Integrator method, int n_steps, double tau,
             ChainState& state);

struct UlaKernel {
  ScoreFn score;
  double h = 0.0;
};

struct MalaKernel {
  LogDensityFn log_density;
  ScoreFn score;
  double h = 0.0;
};

struct DmalaKernel {
  DenoiserField denoiser;
  double sigma = 0.0;
  /// 2 runs the two-evaluation trapezoid acceptance; larger values opt into
  /// the line-integral diagnostic.
  int quadrature_nodes = 2;
};

struct PcKernel {
  double tau = 0.0;
  bool use_map = false;
  SolutionMap map;         // used when use_map
  VelocityField velocity;  // used otherwise
  Integrator method = Integrator::Rk2;
  int n_steps = 200;
};

using Kernel = std::variant<UlaKernel, MalaKernel, DmalaKernel, PcKernel>;

struct RecordConfig {
  /// Record positions every `thin` steps (plus step 0 and the final step);
  /// 0 disables trajectory recording.
  int thin = 0;
};

struct RunResult {
  int dim = 0;
  int n_chains = 0;
  int n_steps = 0;
  std::vector<double> finals;  // n_chains x dim
  std::vector<ChainStats> per_chain;
  PooledStats pooled;
  /// Steps at which positions were recorded; shared by all chains.
  std::vector<std::uint32_t> recorded_steps;
  /// n_chains x recorded_steps.size() x dim, chain-major.
  std::vector<double> trajectory;
  /// Accept flag of the step at which each row was recorded (1 for step 0
  /// and for kernels without a Metropolis step).
  std::vector<std::uint8_t> trajectory_accepted;

  std::span<const double> final_position(int chain) const {
    return {finals.data() + static_cast<std::size_t>(chain) * dim,
            static_cast<std::size_t>(dim)};
  }
};

/// Applies the kernel K times to each chain. Chains run on independent
/// generator substreams derived from the master seed and the chain index, so
/// the result is bit-identical for any thread count. Kernel errors are
/// rethrown with the failing chain index.
RunResult run_chains(const Kernel& kernel, std::span<const double> init, int dim,
                     int n_steps, std::uint64_t master_seed,
                     const RecordConfig& record = {}, int n_threads = 0);

/// Serial reference implementation; same contract and bitwise-identical
/// output.
RunResult run_chains_serial(const Kernel& kernel, std::span<const double> init, int dim,
                            int n_steps, std::uint64_t master_seed,
                            const RecordConfig& record = {});

}  // namespace statsamp
