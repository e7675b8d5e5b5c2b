#pragma once

#include <span>
#include <string>
#include <vector>

#include "statsamp/rng.hpp"

namespace statsamp {

/// Finite mixture of isotropic Gaussians on R^d. Components are
/// (weight, mean, variance) with covariance variance * I.
///
/// Immutable after construction and safe to share across threads. Every
/// density, score, smoothing and denoising oracle in the library derives
/// from this family, which is what keeps them in closed form.
class IsotropicGaussianMixture {
 public:
  /// weights.size() == variances.size() == K, means_flat.size() == K * dim.
  /// Weights must sum to 1 within 1e-12 and variances must be positive.
  IsotropicGaussianMixture(int dim, std::vector<double> weights,
                           std::vector<double> means_flat,
                           std::vector<double> variances);

  static IsotropicGaussianMixture single(std::vector<double> mean, double variance);
  /// N(0, I) in the given dimension.
  static IsotropicGaussianMixture standard(int dim);

  int dim() const { return dim_; }
  int n_components() const { return static_cast<int>(weights_.size()); }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& log_weights() const { return log_weights_; }
  const std::vector<double>& variances() const { return variances_; }
  /// All components share one variance (and the posterior normalizer drops
  /// out of responsibility computations).
  bool uniform_variance() const { return uniform_variance_; }
  std::span<const double> mean(int k) const {
    return {means_.data() + static_cast<std::size_t>(k) * dim_, static_cast<std::size_t>(dim_)};
  }

  /// Scratch space for the per-component posterior pass; reuse across calls
  /// to avoid per-evaluation allocation in hot loops.
  struct Workspace {
    std::vector<double> log_terms;
  };

  double log_density(std::span<const double> x) const;
  double log_density(std::span<const double> x, Workspace& ws) const;

  /// score(x) = grad log p(x), accumulated from posterior responsibilities
  /// in log space.
  void score(std::span<const double> x, std::span<double> out) const;
  void score(std::span<const double> x, std::span<double> out, Workspace& ws) const;
  std::vector<double> score(std::span<const double> x) const;

 private:
  friend IsotropicGaussianMixture smooth(const IsotropicGaussianMixture&, double);

  int dim_;
  std::vector<double> weights_;
  std::vector<double> means_;  // K x dim, row-major
  std::vector<double> variances_;
  // cached: log w_k - (d/2) log(2 pi s_k^2)
  std::vector<double> log_norms_;
  std::vector<double> log_weights_;
  bool uniform_variance_ = false;

  double posterior_pass(std::span<const double> x, Workspace& ws) const;
};

double log_density(const IsotropicGaussianMixture& gm, std::span<const double> x);
std::vector<double> score(const IsotropicGaussianMixture& gm, std::span<const double> x);

/// Exact convolution with N(0, sigma^2 I): same weights and means, variances
/// shifted by sigma^2.
IsotropicGaussianMixture smooth(const IsotropicGaussianMixture& gm, double sigma);

/// Exact posterior mean E[x | x + sigma * eps = y] via Tweedie's identity,
/// D_sigma(y) = y + sigma^2 * score_{p_sigma}(y).
std::vector<double> tweedie_denoiser(const IsotropicGaussianMixture& gm, double sigma,
                                     std::span<const double> y);

/// n independent draws, flattened n x dim. Categorical over weights, then a
/// Gaussian around the chosen mean; bit-reproducible for a fixed generator
/// state.
std::vector<double> sample(const IsotropicGaussianMixture& gm, Rng& rng, int n);

/// Gaussian mixture supported along the spiral
/// mu_k = radius_scale * theta_k * (cos theta_k, sin theta_k).
struct SwissRollSpec {
  int n_components = 64;
  double theta_min = 4.71238898038468986;   // 1.5 pi
  double theta_max = 14.13716694115406957;  // 4.5 pi
  double radius_scale = 0.1;
  double component_std = 0.15;
};

/// Equal-weight 2-d mixture with component means at equally spaced angles in
/// [theta_min, theta_max] (endpoints included) and variance component_std^2.
IsotropicGaussianMixture swiss_roll_target(const SwissRollSpec& spec);

}  // namespace statsamp
