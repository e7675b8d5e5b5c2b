#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "statsamp/mixture.hpp"

namespace statsamp {

/// Mean negative log-density of the samples (flattened n x gm.dim()) under
/// gm. Throws on an empty set.
double nll(const IsotropicGaussianMixture& gm, std::span<const double> samples);

/// nll together with its standard error across samples.
struct NllEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};
NllEstimate nll_with_se(const IsotropicGaussianMixture& gm, std::span<const double> samples);

struct Bandwidth {
  /// Fixed length scale when > 0; otherwise the median heuristic: the median
  /// pairwise distance over the pooled set (an evenly strided subsample of at
  /// most 2048 points when the pool is larger, so the heuristic stays
  /// deterministic and quadratic cost stays bounded).
  double value = 0.0;
  static Bandwidth median() { return Bandwidth{0.0}; }
  static Bandwidth fixed(double v) { return Bandwidth{v}; }
};

/// Biased V-statistic MMD with Gaussian kernel exp(-||a-b||^2 / (2 l^2)),
/// reported as sqrt(max(0, MMD^2)). Row sums are computed independently
/// (parallelizable) and combined by a fixed pairwise-tree reduction, so the
/// result does not depend on thread count.
double mmd_rbf(std::span<const double> x, std::span<const double> y, int dim,
               Bandwidth bandwidth = Bandwidth::median(), int n_threads = 0);

/// Serial reference implementation; bitwise-identical result.
double mmd_rbf_serial(std::span<const double> x, std::span<const double> y, int dim,
                      Bandwidth bandwidth = Bandwidth::median());

/// Average Euclidean displacement between matched sample lists.
double mean_move(std::span<const double> initial, std::span<const double> final_pos,
                 int dim);

/// One ablation row: the quantities the sweep commands tabulate per setting.
struct MetricReport {
  std::string label;
  double nll = 0.0;
  double mmd = 0.0;
  std::optional<double> acceptance_rate;
  double mean_move = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_steps = 0;
  /// Swept parameter echo (sigma for denoiser-MALA rows, tau for
  /// predictor-corrector rows).
  double parameter = 0.0;
};

enum class AblationLayout { DenoiserMala, PredictorCorrector };

/// CSV with the column set of the chosen layout, rows sorted by the swept
/// parameter ascending, values at 6 significant digits.
std::string ablation_table(const std::vector<MetricReport>& reports,
                           AblationLayout layout);

}  // namespace statsamp
