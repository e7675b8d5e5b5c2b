#pragma once

#include <span>
#include <string>
#include <vector>

#include "statsamp/fields.hpp"
#include "statsamp/mixture.hpp"

namespace statsamp {

/// Interpolation schedule x_t = kappa(t) x + sigma_b(t) z between noise
/// (t = 0) and data (t = 1). Both built-in schedules satisfy kappa(1) = 1 and
/// sigma_b(1) = 0, checked at construction.
///
/// The cosine schedule is expressed in the same convention (t = 1 is data);
/// see the noise_for_time/time_for_noise pair for the induced noise level
/// eta(t) = sigma_b(t) / kappa(t).
class BridgeSchedule {
 public:
  enum class Kind { Linear, Cosine };

  static BridgeSchedule linear();
  static BridgeSchedule cosine();
  static BridgeSchedule by_name(const std::string& name);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }

  double kappa(double t) const;
  double sigma_b(double t) const;
  double kappa_dot(double t) const;
  double sigma_b_dot(double t) const;

  /// eta(t) = sigma_b(t) / kappa(t); strictly decreasing on (0, 1].
  double noise_for_time(double t) const;
  /// Inverse of noise_for_time. Closed form for the linear schedule,
  /// bisection to 1e-12 otherwise. Throws if eta < 0.
  double time_for_noise(double eta) const;

 private:
  BridgeSchedule(Kind kind, std::string name);
  Kind kind_;
  std::string name_;
};

/// Law of kappa(t) x + sigma_b(t) z for x ~ gm: means scaled by kappa(t),
/// variances kappa(t)^2 s_k^2 + sigma_b(t)^2, same weights. t must lie in
/// [0, 1].
IsotropicGaussianMixture bridge_marginal(const IsotropicGaussianMixture& gm,
                                         const BridgeSchedule& sched, double t);

/// Exact bridge velocity v(x, t) = kappa'(t) E[x0 | x_t = x] +
/// sigma_b'(t) E[z | x_t = x], with the posterior means combined from
/// per-component Gaussian conditionals in log space.
void exact_velocity(const IsotropicGaussianMixture& gm, const BridgeSchedule& sched,
                    std::span<const double> x, double t, std::span<double> out);
std::vector<double> exact_velocity(const IsotropicGaussianMixture& gm,
                                   const BridgeSchedule& sched,
                                   std::span<const double> x, double t);

/// Velocity field wrapper around exact_velocity; shares one mixture copy.
VelocityField exact_velocity_field(const IsotropicGaussianMixture& gm,
                                   const BridgeSchedule& sched);

/// Exact denoiser wrapper around tweedie_denoiser with the smoothed mixture
/// precomputed once.
DenoiserField exact_denoiser_field(const IsotropicGaussianMixture& gm, double sigma);

/// Posterior means of the clean sample and the noise given the bridge state:
/// x_mean = E[x0 | x_t = x], z_mean = E[z | x_t = x].
void bridge_posterior_means(const IsotropicGaussianMixture& gm,
                            const BridgeSchedule& sched, std::span<const double> x,
                            double t, std::span<double> x_mean,
                            std::span<double> z_mean);

/// Exact pushforward flow map for a single-component Gaussian target (the
/// probability-flow map is affine in that case): transports p_t to p_s.
/// Throws for mixtures. This is the object the predictor-corrector kernel
/// needs; it is not the conditional-mean predictor below.
SolutionMap gaussian_exact_solution_map(const IsotropicGaussianMixture& gaussian,
                                        const BridgeSchedule& sched);

/// Direct solution operator at its optimum as a regression model:
/// f(x, t, s) = E[x_s | x_t = x]. At s = 1 this is the posterior mean
/// E[x0 | x_t], the object the flow->denoiser conversion assumes. It does
/// not push p_t forward to p_s (conditional means contract), so it is not a
/// substitute for the flow map in the predictor-corrector kernel.
SolutionMap exact_bridge_predictor_map(const IsotropicGaussianMixture& gm,
                                       const BridgeSchedule& sched);

/// The same conditional-mean operator realized from a velocity field alone:
/// one field evaluation at (x, t) recovers E[x0 | x_t] and E[z | x_t] by the
/// 2x2 bridge solve, and E[x_s | x_t] = kappa(s) E[x0|x_t] + sigma_b(s)
/// E[z|x_t] is then advanced from t to s by fixed-step midpoint integration
/// in s. Exact for the linear schedule; O(n_steps^-2) schedule-curvature
/// error otherwise.
SolutionMap predictor_map_from_velocity(VelocityField v, const BridgeSchedule& sched,
                                        int n_steps);

/// Denoiser at noise level eta recovered from a velocity field:
///   D_eta(y) = [sigma_b'(t) kappa(t) y - sigma_b(t) v(kappa(t) y, t)]
///              / [kappa(t) sigma_b'(t) - kappa'(t) sigma_b(t)],
/// with t solved from eta = sigma_b(t) / kappa(t). The model is evaluated at
/// the scaled point kappa(t) y.
std::vector<double> denoiser_from_velocity(const VelocityField& v,
                                           const BridgeSchedule& sched, double eta,
                                           std::span<const double> y);

/// Denoiser at noise level eta recovered from a direct solution map:
///   D_eta(y) = f(kappa(t) y, t, 1).
std::vector<double> denoiser_from_solution_map(const SolutionMap& f,
                                               const BridgeSchedule& sched, double eta,
                                               std::span<const double> y);

enum class Integrator { Euler, Rk2 };

Integrator integrator_by_name(const std::string& name);
std::string integrator_name(Integrator method);

/// Fixed-step integration of xdot = v(x, t) from t0 to t1 with
/// (t1 - t0) / n_steps steps. Rk2 is the midpoint rule (two field
/// evaluations per step). Throws if the state becomes non-finite, naming the
/// step index.
std::vector<double> integrate_flow(const VelocityField& v, std::span<const double> x,
                                   double t0, double t1, int n_steps,
                                   Integrator method);

/// Solution map realized by integrating a velocity field; costs n_steps
/// (Euler) or 2 n_steps (Rk2) field evaluations per call.
SolutionMap solution_map_from_velocity(VelocityField v, Integrator method, int n_steps);

}  // namespace statsamp
