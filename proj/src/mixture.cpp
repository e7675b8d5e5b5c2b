#include "statsamp/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "statsamp/vec.hpp"

namespace statsamp {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
// Components whose posterior log-weight falls this far below the maximum
// contribute < 3e-20 relatively and are skipped.
constexpr double kLogTermCutoff = 45.0;

}  // namespace

IsotropicGaussianMixture::IsotropicGaussianMixture(int dim,
                                                   std::vector<double> weights,
                                                   std::vector<double> means_flat,
                                                   std::vector<double> variances)
    : dim_(dim),
      weights_(std::move(weights)),
      means_(std::move(means_flat)),
      variances_(std::move(variances)) {
  if (dim_ <= 0) throw std::invalid_argument("mixture: dim must be positive");
  const std::size_t k = weights_.size();
  if (k == 0) throw std::invalid_argument("mixture: needs at least one component");
  if (variances_.size() != k)
    throw std::invalid_argument("mixture: weights/variances size mismatch");
  if (means_.size() != k * static_cast<std::size_t>(dim_))
    throw std::invalid_argument("mixture: means size must be n_components * dim");

  double wsum = 0.0;
  for (double w : weights_) {
    if (!(w > 0.0) || w > 1.0)
      throw std::invalid_argument("mixture: weights must lie in (0, 1]");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-12)
    throw std::invalid_argument("mixture: weights must sum to 1 within 1e-12");
  for (double v : variances_)
    if (!(v > 0.0)) throw std::invalid_argument("mixture: variances must be positive");

  log_norms_.resize(k);
  log_weights_.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    log_weights_[i] = std::log(weights_[i]);
    log_norms_[i] = log_weights_[i] - 0.5 * dim_ * (kLog2Pi + std::log(variances_[i]));
  }
  uniform_variance_ = true;
  for (double v : variances_)
    if (v != variances_[0]) uniform_variance_ = false;
}

IsotropicGaussianMixture IsotropicGaussianMixture::single(std::vector<double> mean,
                                                          double variance) {
  const int d = static_cast<int>(mean.size());
  return IsotropicGaussianMixture(d, {1.0}, std::move(mean), {variance});
}

IsotropicGaussianMixture IsotropicGaussianMixture::standard(int dim) {
  return IsotropicGaussianMixture(dim, {1.0}, std::vector<double>(dim, 0.0), {1.0});
}

double IsotropicGaussianMixture::posterior_pass(std::span<const double> x,
                                                Workspace& ws) const {
  require_dim(x, dim_, "mixture input");
  const int k = n_components();
  ws.log_terms.resize(k);
  double max_term = -INFINITY;
  for (int i = 0; i < k; ++i) {
    const double sq = squared_distance(x, mean(i));
    const double t = log_norms_[i] - 0.5 * sq / variances_[i];
    ws.log_terms[i] = t;
    max_term = std::max(max_term, t);
  }
  double acc = 0.0;
  for (int i = 0; i < k; ++i) {
    const double diff = ws.log_terms[i] - max_term;
    acc += diff > -kLogTermCutoff ? std::exp(diff) : 0.0;
  }
  return max_term + std::log(acc);
}

double IsotropicGaussianMixture::log_density(std::span<const double> x,
                                             Workspace& ws) const {
  return posterior_pass(x, ws);
}

double IsotropicGaussianMixture::log_density(std::span<const double> x) const {
  Workspace ws;
  return log_density(x, ws);
}

void IsotropicGaussianMixture::score(std::span<const double> x, std::span<double> out,
                                     Workspace& ws) const {
  require_dim(out, dim_, "score output");
  const double lse = posterior_pass(x, ws);
  std::fill(out.begin(), out.end(), 0.0);
  const int k = n_components();
  for (int i = 0; i < k; ++i) {
    const double diff = ws.log_terms[i] - lse;
    if (diff <= -kLogTermCutoff) continue;
    const double r_over_var = std::exp(diff) / variances_[i];
    const std::span<const double> mu = mean(i);
    for (int j = 0; j < dim_; ++j) out[j] += r_over_var * (mu[j] - x[j]);
  }
}

void IsotropicGaussianMixture::score(std::span<const double> x,
                                     std::span<double> out) const {
  Workspace ws;
  score(x, out, ws);
}

std::vector<double> IsotropicGaussianMixture::score(std::span<const double> x) const {
  std::vector<double> out(dim_);
  score(x, out);
  return out;
}

double log_density(const IsotropicGaussianMixture& gm, std::span<const double> x) {
  return gm.log_density(x);
}

std::vector<double> score(const IsotropicGaussianMixture& gm, std::span<const double> x) {
  return gm.score(x);
}

IsotropicGaussianMixture smooth(const IsotropicGaussianMixture& gm, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("smooth: sigma must be positive");
  std::vector<double> variances = gm.variances_;
  for (double& v : variances) v += sigma * sigma;
  return IsotropicGaussianMixture(gm.dim_, gm.weights_, gm.means_, std::move(variances));
}

std::vector<double> tweedie_denoiser(const IsotropicGaussianMixture& gm, double sigma,
                                     std::span<const double> y) {
  const IsotropicGaussianMixture smoothed = smooth(gm, sigma);
  std::vector<double> out = smoothed.score(y);
  for (int j = 0; j < gm.dim(); ++j) out[j] = y[j] + sigma * sigma * out[j];
  return out;
}

std::vector<double> sample(const IsotropicGaussianMixture& gm, Rng& rng, int n) {
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  const int d = gm.dim();
  const int k = gm.n_components();
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    int chosen = k - 1;
    double cum = 0.0;
    for (int c = 0; c < k; ++c) {
      cum += gm.weights()[c];
      if (u < cum) {
        chosen = c;
        break;
      }
    }
    const double std_dev = std::sqrt(gm.variances()[chosen]);
    const std::span<const double> mu = gm.mean(chosen);
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(i) * d + j] = mu[j] + std_dev * rng.normal();
  }
  return out;
}

IsotropicGaussianMixture swiss_roll_target(const SwissRollSpec& spec) {
  if (spec.n_components < 2)
    throw std::invalid_argument("swiss_roll: n_components must be >= 2");
  if (!(spec.theta_max > spec.theta_min))
    throw std::invalid_argument("swiss_roll: theta_max must exceed theta_min");
  if (!(spec.radius_scale > 0.0))
    throw std::invalid_argument("swiss_roll: radius_scale must be positive");
  if (!(spec.component_std > 0.0))
    throw std::invalid_argument("swiss_roll: component_std must be positive");

  const int k = spec.n_components;
  std::vector<double> weights(k, 1.0 / k);
  // Exact renormalization; 1/k rounding may leave the sum off by an ulp.
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;

  std::vector<double> means(static_cast<std::size_t>(k) * 2);
  const double step = (spec.theta_max - spec.theta_min) / (k - 1);
  for (int i = 0; i < k; ++i) {
    const double theta = spec.theta_min + step * i;
    means[2 * i] = spec.radius_scale * theta * std::cos(theta);
    means[2 * i + 1] = spec.radius_scale * theta * std::sin(theta);
  }
  std::vector<double> variances(k, spec.component_std * spec.component_std);
  return IsotropicGaussianMixture(2, std::move(weights), std::move(means),
                                  std::move(variances));
}

}  // namespace statsamp
