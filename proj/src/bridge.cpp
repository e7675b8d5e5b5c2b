#include "statsamp/bridge.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "statsamp/errors.hpp"
#include "statsamp/vec.hpp"

namespace statsamp {

namespace {
constexpr double kHalfPi = 1.5707963267948966192;
}  // namespace

BridgeSchedule::BridgeSchedule(Kind kind, std::string name)
    : kind_(kind), name_(std::move(name)) {
  if (std::abs(kappa(1.0) - 1.0) > 1e-12 || std::abs(sigma_b(1.0)) > 1e-12)
    throw std::invalid_argument("bridge schedule must satisfy kappa(1)=1, sigma_b(1)=0");
}

BridgeSchedule BridgeSchedule::linear() { return BridgeSchedule(Kind::Linear, "linear"); }
BridgeSchedule BridgeSchedule::cosine() { return BridgeSchedule(Kind::Cosine, "cosine"); }

BridgeSchedule BridgeSchedule::by_name(const std::string& name) {
  if (name == "linear") return linear();
  if (name == "cosine") return cosine();
  throw std::invalid_argument("unknown bridge schedule: " + name);
}

double BridgeSchedule::kappa(double t) const {
  return kind_ == Kind::Linear ? t : std::sin(kHalfPi * t);
}

double BridgeSchedule::sigma_b(double t) const {
  return kind_ == Kind::Linear ? 1.0 - t : std::cos(kHalfPi * t);
}

double BridgeSchedule::kappa_dot(double t) const {
  return kind_ == Kind::Linear ? 1.0 : kHalfPi * std::cos(kHalfPi * t);
}

double BridgeSchedule::sigma_b_dot(double t) const {
  return kind_ == Kind::Linear ? -1.0 : -kHalfPi * std::sin(kHalfPi * t);
}

double BridgeSchedule::noise_for_time(double t) const {
  if (!(t > 0.0) || t > 1.0)
    throw std::invalid_argument("noise_for_time: t must lie in (0, 1]");
  return sigma_b(t) / kappa(t);
}

double BridgeSchedule::time_for_noise(double eta) const {
  if (!(eta >= 0.0) || !std::isfinite(eta))
    throw std::invalid_argument("time_for_noise: eta must be finite and >= 0");
  if (eta == 0.0) return 1.0;
  if (kind_ == Kind::Linear) return 1.0 / (1.0 + eta);
  // eta(t) is strictly decreasing on (0, 1]; bisect to 1e-12.
  double lo = 1e-15, hi = 1.0;
  while (hi - lo > 1e-13) {
    const double mid = 0.5 * (lo + hi);
    if (noise_for_time(mid) > eta)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

IsotropicGaussianMixture bridge_marginal(const IsotropicGaussianMixture& gm,
                                         const BridgeSchedule& sched, double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("bridge_marginal: t must lie in [0, 1]");
  const double k = sched.kappa(t);
  const double sb = sched.sigma_b(t);
  const int d = gm.dim();
  const int n = gm.n_components();
  std::vector<double> means(static_cast<std::size_t>(n) * d);
  std::vector<double> variances(n);
  for (int i = 0; i < n; ++i) {
    const std::span<const double> mu = gm.mean(i);
    for (int j = 0; j < d; ++j) means[static_cast<std::size_t>(i) * d + j] = k * mu[j];
    variances[i] = k * k * gm.variances()[i] + sb * sb;
  }
  return IsotropicGaussianMixture(d, gm.weights(), std::move(means), std::move(variances));
}

void bridge_posterior_means(const IsotropicGaussianMixture& gm,
                            const BridgeSchedule& sched, std::span<const double> x,
                            double t, std::span<double> x_mean,
                            std::span<double> z_mean) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("bridge_posterior_means: t must lie in [0, 1]");
  const int d = gm.dim();
  require_dim(x, d, "bridge posterior input");
  require_dim(x_mean, d, "bridge posterior x_mean");
  require_dim(z_mean, d, "bridge posterior z_mean");

  const double kap = sched.kappa(t);
  const double sb = sched.sigma_b(t);
  const int n = gm.n_components();

  // Posterior log-weights over components, constants dropped where they
  // cancel in the responsibilities (uniform-variance mixtures pay only the
  // squared distance per component).
  thread_local std::vector<double> log_terms;
  log_terms.resize(n);
  double max_term = -INFINITY;
  const bool uniform = gm.uniform_variance();
  const double var_uniform = kap * kap * gm.variances()[0] + sb * sb;
  if (uniform && !(var_uniform > 1e-300))
    throw NumericError("bridge posterior: degenerate marginal at t=" +
                       std::to_string(t));
  for (int i = 0; i < n; ++i) {
    double sq = 0.0;
    const std::span<const double> mu = gm.mean(i);
    for (int j = 0; j < d; ++j) {
      const double diff = x[j] - kap * mu[j];
      sq += diff * diff;
    }
    if (uniform) {
      log_terms[i] = gm.log_weights()[i] - 0.5 * sq / var_uniform;
    } else {
      const double var_t = kap * kap * gm.variances()[i] + sb * sb;
      if (!(var_t > 1e-300))
        throw NumericError("bridge posterior: degenerate marginal at t=" +
                           std::to_string(t));
      log_terms[i] =
          gm.log_weights()[i] - 0.5 * d * std::log(var_t) - 0.5 * sq / var_t;
    }
    max_term = std::max(max_term, log_terms[i]);
  }
  // Components below e^-30 (~1e-13 relative) are dropped; everything fed by
  // this path is checked at 1e-8 or looser.
  constexpr double kCutoff = 30.0;
  double norm = 0.0;
  for (int i = 0; i < n; ++i) {
    const double diff = log_terms[i] - max_term;
    norm += diff > -kCutoff ? std::exp(diff) : 0.0;
  }

  std::fill(x_mean.begin(), x_mean.end(), 0.0);
  std::fill(z_mean.begin(), z_mean.end(), 0.0);
  for (int i = 0; i < n; ++i) {
    const double diff = log_terms[i] - max_term;
    if (diff <= -kCutoff) continue;
    const double r = std::exp(diff) / norm;
    const double var_t = uniform ? var_uniform : kap * kap * gm.variances()[i] + sb * sb;
    // E[x0 | x_t, k] = mu + kap s^2 (x - kap mu) / var_t
    // E[z  | x_t, k] = sb (x - kap mu) / var_t
    const double cx = kap * gm.variances()[i] / var_t;
    const double cz = sb / var_t;
    const std::span<const double> mu = gm.mean(i);
    for (int j = 0; j < d; ++j) {
      const double centered = x[j] - kap * mu[j];
      x_mean[j] += r * (mu[j] + cx * centered);
      z_mean[j] += r * cz * centered;
    }
  }
}

void exact_velocity(const IsotropicGaussianMixture& gm, const BridgeSchedule& sched,
                    std::span<const double> x, double t, std::span<double> out) {
  const int d = gm.dim();
  require_dim(out, d, "exact_velocity output");
  thread_local std::vector<double> x_mean, z_mean;
  x_mean.resize(d);
  z_mean.resize(d);
  bridge_posterior_means(gm, sched, x, t, x_mean, z_mean);
  const double kd = sched.kappa_dot(t);
  const double sd = sched.sigma_b_dot(t);
  for (int j = 0; j < d; ++j) out[j] = kd * x_mean[j] + sd * z_mean[j];
}

std::vector<double> exact_velocity(const IsotropicGaussianMixture& gm,
                                   const BridgeSchedule& sched,
                                   std::span<const double> x, double t) {
  std::vector<double> out(gm.dim());
  exact_velocity(gm, sched, x, t, out);
  return out;
}

VelocityField exact_velocity_field(const IsotropicGaussianMixture& gm,
                                   const BridgeSchedule& sched) {
  auto shared = std::make_shared<const IsotropicGaussianMixture>(gm);
  VelocityField field;
  field.fn = [shared, sched](std::span<const double> x, double t, std::span<double> out) {
    exact_velocity(*shared, sched, x, t, out);
  };
  return field;
}

DenoiserField exact_denoiser_field(const IsotropicGaussianMixture& gm, double sigma) {
  auto smoothed = std::make_shared<const IsotropicGaussianMixture>(smooth(gm, sigma));
  DenoiserField field;
  field.eta = sigma;
  const double sigma2 = sigma * sigma;
  field.fn = [smoothed, sigma2](std::span<const double> y, std::span<double> out) {
    thread_local IsotropicGaussianMixture::Workspace ws;
    smoothed->score(y, out, ws);
    for (std::size_t j = 0; j < y.size(); ++j) out[j] = y[j] + sigma2 * out[j];
  };
  return field;
}

SolutionMap gaussian_exact_solution_map(const IsotropicGaussianMixture& gaussian,
                                        const BridgeSchedule& sched) {
  if (gaussian.n_components() != 1)
    throw std::invalid_argument("gaussian_exact_solution_map: single-component targets only");
  std::vector<double> mu(gaussian.mean(0).begin(), gaussian.mean(0).end());
  const double var = gaussian.variances()[0];
  SolutionMap map;
  map.fn = [mu = std::move(mu), var, sched](std::span<const double> x, double t,
                                            double s, std::span<double> out) {
    const double kt = sched.kappa(t), ks = sched.kappa(s);
    const double bt = std::sqrt(kt * kt * var + sched.sigma_b(t) * sched.sigma_b(t));
    const double bs = std::sqrt(ks * ks * var + sched.sigma_b(s) * sched.sigma_b(s));
    const double scale = bs / bt;
    for (std::size_t j = 0; j < x.size(); ++j)
      out[j] = ks * mu[j] + scale * (x[j] - kt * mu[j]);
  };
  return map;
}

SolutionMap exact_bridge_predictor_map(const IsotropicGaussianMixture& gm,
                                       const BridgeSchedule& sched) {
  auto shared = std::make_shared<const IsotropicGaussianMixture>(gm);
  SolutionMap map;
  map.fn = [shared, sched](std::span<const double> x, double t, double s,
                           std::span<double> out) {
    if (!(s >= t)) throw std::invalid_argument("predictor map: need s >= t");
    const std::size_t d = x.size();
    thread_local std::vector<double> x_mean, z_mean;
    x_mean.resize(d);
    z_mean.resize(d);
    bridge_posterior_means(*shared, sched, x, t, x_mean, z_mean);
    const double ks = sched.kappa(s), ss = sched.sigma_b(s);
    for (std::size_t j = 0; j < d; ++j) out[j] = ks * x_mean[j] + ss * z_mean[j];
  };
  return map;
}

SolutionMap predictor_map_from_velocity(VelocityField v, const BridgeSchedule& sched,
                                        int n_steps) {
  if (n_steps < 1)
    throw std::invalid_argument("predictor_map_from_velocity: n_steps must be >= 1");
  SolutionMap map;
  map.fn = [v = std::move(v), sched, n_steps](std::span<const double> x, double t,
                                              double s, std::span<double> out) {
    if (!(s >= t)) throw std::invalid_argument("predictor map: need s >= t");
    const std::size_t d = x.size();
    const double kap = sched.kappa(t), sb = sched.sigma_b(t);
    const double kd = sched.kappa_dot(t), sd = sched.sigma_b_dot(t);
    const double det = kap * sd - kd * sb;
    if (std::abs(det) < 1e-12)
      throw NumericError("predictor_map_from_velocity: degenerate schedule point");
    thread_local std::vector<double> vel, x_mean, z_mean;
    vel.resize(d);
    x_mean.resize(d);
    z_mean.resize(d);
    v.eval(x, t, vel);
    for (std::size_t j = 0; j < d; ++j) {
      x_mean[j] = (sd * x[j] - sb * vel[j]) / det;
      z_mean[j] = (kap * vel[j] - kd * x[j]) / det;
    }
    // advance m(u) = kappa(u) E[x0|x_t] + sigma_b(u) E[z|x_t] by midpoint steps
    std::copy(x.begin(), x.end(), out.begin());
    const double h = (s - t) / n_steps;
    for (int i = 0; i < n_steps; ++i) {
      const double mid = t + h * (i + 0.5);
      const double slope_k = sched.kappa_dot(mid), slope_s = sched.sigma_b_dot(mid);
      for (std::size_t j = 0; j < d; ++j)
        out[j] += h * (slope_k * x_mean[j] + slope_s * z_mean[j]);
    }
  };
  return map;
}

std::vector<double> denoiser_from_velocity(const VelocityField& v,
                                           const BridgeSchedule& sched, double eta,
                                           std::span<const double> y) {
  if (!(eta > 0.0)) throw std::invalid_argument("denoiser_from_velocity: eta must be > 0");
  const double t = sched.time_for_noise(eta);
  if (t < v.t_min || t > v.t_max)
    throw std::invalid_argument("denoiser_from_velocity: t outside field validity interval");
  const double kap = sched.kappa(t);
  const double sb = sched.sigma_b(t);
  const double kd = sched.kappa_dot(t);
  const double sd = sched.sigma_b_dot(t);
  const double denom = kap * sd - kd * sb;
  if (std::abs(denom) < 1e-12)
    throw NumericError("denoiser_from_velocity: degenerate schedule denominator");

  std::vector<double> scaled(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) scaled[j] = kap * y[j];
  std::vector<double> vel(y.size());
  v.eval(scaled, t, vel);
  std::vector<double> out(y.size());
  for (std::size_t j = 0; j < y.size(); ++j)
    out[j] = (sd * kap * y[j] - sb * vel[j]) / denom;
  return out;
}

std::vector<double> denoiser_from_solution_map(const SolutionMap& f,
                                               const BridgeSchedule& sched, double eta,
                                               std::span<const double> y) {
  if (!(eta > 0.0))
    throw std::invalid_argument("denoiser_from_solution_map: eta must be > 0");
  const double t = sched.time_for_noise(eta);
  const double kap = sched.kappa(t);
  std::vector<double> scaled(y.size());
  for (std::size_t j = 0; j < y.size(); ++j) scaled[j] = kap * y[j];
  std::vector<double> out(y.size());
  f.eval(scaled, t, 1.0, out);
  return out;
}

Integrator integrator_by_name(const std::string& name) {
  if (name == "euler") return Integrator::Euler;
  if (name == "rk2") return Integrator::Rk2;
  throw std::invalid_argument("unknown integrator: " + name);
}

std::string integrator_name(Integrator method) {
  return method == Integrator::Euler ? "euler" : "rk2";
}

std::vector<double> integrate_flow(const VelocityField& v, std::span<const double> x,
                                   double t0, double t1, int n_steps,
                                   Integrator method) {
  if (!(t0 >= 0.0 && t0 <= t1 && t1 <= 1.0))
    throw std::invalid_argument("integrate_flow: need 0 <= t0 <= t1 <= 1");
  if (n_steps < 1) throw std::invalid_argument("integrate_flow: n_steps must be >= 1");

  const std::size_t d = x.size();
  std::vector<double> state(x.begin(), x.end());
  std::vector<double> k1(d), mid(d), k2(d);
  const double h = (t1 - t0) / n_steps;
  for (int i = 0; i < n_steps; ++i) {
    const double t = t0 + h * i;
    v.eval(state, t, k1);
    if (method == Integrator::Euler) {
      for (std::size_t j = 0; j < d; ++j) state[j] += h * k1[j];
    } else {
      for (std::size_t j = 0; j < d; ++j) mid[j] = state[j] + 0.5 * h * k1[j];
      v.eval(mid, t + 0.5 * h, k2);
      for (std::size_t j = 0; j < d; ++j) state[j] += h * k2[j];
    }
    if (!all_finite(state))
      throw NumericError("integrate_flow: non-finite state at step " + std::to_string(i));
  }
  return state;
}

SolutionMap solution_map_from_velocity(VelocityField v, Integrator method, int n_steps) {
  if (n_steps < 1)
    throw std::invalid_argument("solution_map_from_velocity: n_steps must be >= 1");
  SolutionMap map;
  map.fn = [v = std::move(v), method, n_steps](std::span<const double> x, double t,
                                               double s, std::span<double> out) {
    const std::vector<double> result = integrate_flow(v, x, t, s, n_steps, method);
    std::copy(result.begin(), result.end(), out.begin());
  };
  return map;
}

}  // namespace statsamp
