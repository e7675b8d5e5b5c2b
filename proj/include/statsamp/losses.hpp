#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "statsamp/bridge.hpp"
#include "statsamp/fields.hpp"
#include "statsamp/mixture.hpp"
#include "statsamp/mlp.hpp"
#include "statsamp/rng.hpp"

namespace statsamp {

/// Denoiser built from a trained network with a skip connection:
/// D(y) = y + net(y, sigma). The zero network is the identity denoiser.
DenoiserField mlp_denoiser_field(std::shared_ptr<const Mlp> net, double sigma);

/// Velocity field v(x, t) = net(x, t).
VelocityField mlp_velocity_field(std::shared_ptr<const Mlp> net, double t_min = 0.0,
                                 double t_max = 1.0);

/// Fixed batch for the denoising objective; losses over a fixed batch are
/// pure functions of the parameters, which is what the finite-difference
/// oracles check.
struct DenoiseBatch {
  int dim = 0;
  std::vector<double> clean;  // batch x dim
  std::vector<double> noisy;  // batch x dim
  std::vector<double> sigma;  // batch
  std::size_t size() const { return sigma.size(); }
};

DenoiseBatch make_denoise_batch(const IsotropicGaussianMixture& gm, double sigma_lo,
                                double sigma_hi, int batch, Rng& rng);

/// Any denoiser evaluated as (y, sigma) -> denoised; lets exact oracles stand
/// in for the network when checking Bayes risk.
using DenoiserEvalFn =
    std::function<void(std::span<const double>, double, std::span<double>)>;

/// Mean over the batch of ||D(y) - x||^2.
double denoise_loss_value(const DenoiserEvalFn& denoiser, const DenoiseBatch& batch);
/// Same loss for the skip-connected network; accumulates the parameter
/// gradient into grad (grad must be zeroed by the caller).
double denoise_loss_grad(const Mlp& net, const DenoiseBatch& batch,
                         std::span<double> grad);

using JvpFn = std::function<void(std::span<const double>, std::span<const double>,
                                 std::span<double>)>;

/// Mean over probes of ||J v - J^T v||^2 for a generic field given its
/// jvp/vjp oracles; probes is n_probes x dim.
double symmetry_penalty_value_generic(const JvpFn& jvp, const JvpFn& vjp,
                                      std::span<const double> x,
                                      std::span<const double> probes, int n_probes);

/// Network version (Jacobian of net(., c) with respect to the x block).
/// Requires out_dim == x_dim.
double symmetry_penalty_value(const Mlp& net, std::span<const double> x, double c,
                              std::span<const double> probes, int n_probes);

/// Value plus exact parameter gradient of the probe-contracted penalty,
/// obtained by applying reverse mode to the combined forward/jvp/vjp pass.
/// Accumulates into grad.
double symmetry_penalty_grad_accum(const Mlp& net, std::span<const double> x, double c,
                                   std::span<const double> probes, int n_probes,
                                   std::span<double> grad);

struct FlowBatch {
  int dim = 0;
  std::vector<double> x_t;     // batch x dim, bridge points
  std::vector<double> t;      // batch
  std::vector<double> target;  // batch x dim, conditional velocities
  std::size_t size() const { return t.size(); }
};

/// Conditional flow-matching batch: t ~ U[tau_min, 1], x_t = kappa x +
/// sigma_b z, target kappa' x + sigma_b' z.
FlowBatch make_flow_batch(const IsotropicGaussianMixture& gm,
                          const BridgeSchedule& sched, double tau_min, int batch,
                          Rng& rng);

using VelocityEvalFn =
    std::function<void(std::span<const double>, double, std::span<double>)>;

double flow_matching_loss_value(const VelocityEvalFn& velocity, const FlowBatch& batch);
double flow_matching_loss_grad(const Mlp& net, const FlowBatch& batch,
                               std::span<double> grad);

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 256;
  int n_steps = 5000;
  double sigma_lo = 0.02;  // denoising noise range, Eq-style "small interval"
  double sigma_hi = 0.3;
  double lambda_sym = 0.0;
  double tau_min = 0.5;  // lower training time for flow matching
  int n_sym_probes = 4;
  std::uint64_t seed = 0;
};

enum class Objective { Denoise, DenoiseSym, FlowMatch };
Objective objective_by_name(const std::string& name);
std::string objective_name(Objective o);

struct TrainResult {
  Mlp net;
  std::vector<double> loss_trace;  // per-step batch loss
};

/// Adam (beta 0.9/0.999, eps 1e-8) over the chosen objective. Deterministic
/// given cfg.seed; throws NumericError naming the step on divergence.
/// The symmetry penalty, when enabled, is evaluated at the noised inputs.
TrainResult train(Mlp net, Objective objective, const IsotropicGaussianMixture& target,
                  const BridgeSchedule& sched, const TrainConfig& cfg);

}  // namespace statsamp
