#include "statsamp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "statsamp/csv.hpp"
#include "statsamp/vec.hpp"

namespace statsamp {

namespace {

std::size_t sample_count(std::span<const double> samples, int dim, const char* who) {
  if (dim <= 0) throw std::invalid_argument(std::string(who) + ": dim must be positive");
  if (samples.empty() || samples.size() % static_cast<std::size_t>(dim) != 0)
    throw std::invalid_argument(std::string(who) +
                                ": samples must be a nonempty multiple of dim");
  return samples.size() / static_cast<std::size_t>(dim);
}

std::span<const double> row(std::span<const double> flat, int dim, std::size_t i) {
  return flat.subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
}

double median_heuristic(std::span<const double> x, std::span<const double> y, int dim) {
  const std::size_t nx = x.size() / dim;
  const std::size_t ny = y.size() / dim;
  const std::size_t pooled = nx + ny;
  constexpr std::size_t kMaxPoints = 2048;

  auto pooled_row = [&](std::size_t i) {
    return i < nx ? row(x, dim, i) : row(y, dim, i - nx);
  };

  std::vector<std::size_t> idx;
  if (pooled <= kMaxPoints) {
    idx.resize(pooled);
    for (std::size_t i = 0; i < pooled; ++i) idx[i] = i;
  } else {
    idx.resize(kMaxPoints);
    for (std::size_t i = 0; i < kMaxPoints; ++i) idx[i] = i * pooled / kMaxPoints;
  }

  const std::size_t m = idx.size();
  std::vector<double> dists;
  dists.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j)
      dists.push_back(distance(pooled_row(idx[i]), pooled_row(idx[j])));
  if (dists.empty()) return 1.0;
  std::nth_element(dists.begin(), dists.begin() + dists.size() / 2, dists.end());
  const double med = dists[dists.size() / 2];
  return med > 0.0 ? med : 1.0;
}

/// Sum over a of sum over b of k(a_i, b_j), computed as per-row sums combined
/// by the pairwise tree.
double kernel_double_sum(std::span<const double> a, std::span<const double> b, int dim,
                         double inv_two_l2, bool parallel, int n_threads) {
  const std::size_t na = a.size() / dim;
  const std::size_t nb = b.size() / dim;
  std::vector<double> row_sums(na);

  auto fill_row = [&](std::size_t i) {
    const std::span<const double> ai = row(a, dim, i);
    double s = 0.0;
    for (std::size_t j = 0; j < nb; ++j)
      s += std::exp(-squared_distance(ai, row(b, dim, j)) * inv_two_l2);
    row_sums[i] = s;
  };

#ifdef _OPENMP
  if (parallel) {
    const int nt = n_threads > 0 ? n_threads : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(na); ++i)
      fill_row(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < na; ++i) fill_row(i);
  }
#else
  (void)parallel;
  (void)n_threads;
  for (std::size_t i = 0; i < na; ++i) fill_row(i);
#endif

  return pairwise_sum(row_sums);
}

double mmd_rbf_impl(std::span<const double> x, std::span<const double> y, int dim,
                    Bandwidth bandwidth, bool parallel, int n_threads) {
  const std::size_t m = sample_count(x, dim, "mmd_rbf");
  const std::size_t n = sample_count(y, dim, "mmd_rbf");

  const double l = bandwidth.value > 0.0 ? bandwidth.value : median_heuristic(x, y, dim);
  const double inv_two_l2 = 1.0 / (2.0 * l * l);

  const double sxx = kernel_double_sum(x, x, dim, inv_two_l2, parallel, n_threads);
  const double syy = kernel_double_sum(y, y, dim, inv_two_l2, parallel, n_threads);
  const double sxy = kernel_double_sum(x, y, dim, inv_two_l2, parallel, n_threads);

  const double mmd2 = sxx / (static_cast<double>(m) * m) +
                      syy / (static_cast<double>(n) * n) -
                      2.0 * sxy / (static_cast<double>(m) * n);
  return std::sqrt(std::max(0.0, mmd2));
}

}  // namespace

double nll(const IsotropicGaussianMixture& gm, std::span<const double> samples) {
  return nll_with_se(gm, samples).value;
}

NllEstimate nll_with_se(const IsotropicGaussianMixture& gm,
                        std::span<const double> samples) {
  const std::size_t n = sample_count(samples, gm.dim(), "nll");
  IsotropicGaussianMixture::Workspace ws;
  std::vector<double> neg_logs(n);
  for (std::size_t i = 0; i < n; ++i)
    neg_logs[i] = -gm.log_density(row(samples, gm.dim(), i), ws);

  NllEstimate est;
  est.n = n;
  est.value = pairwise_sum(neg_logs) / static_cast<double>(n);
  double var_acc = 0.0;
  for (double v : neg_logs) {
    const double d = v - est.value;
    var_acc += d * d;
  }
  est.std_error = n > 1 ? std::sqrt(var_acc / (static_cast<double>(n) * (n - 1))) : 0.0;
  return est;
}

double mmd_rbf(std::span<const double> x, std::span<const double> y, int dim,
               Bandwidth bandwidth, int n_threads) {
  return mmd_rbf_impl(x, y, dim, bandwidth, true, n_threads);
}

double mmd_rbf_serial(std::span<const double> x, std::span<const double> y, int dim,
                      Bandwidth bandwidth) {
  return mmd_rbf_impl(x, y, dim, bandwidth, false, 0);
}

double mean_move(std::span<const double> initial, std::span<const double> final_pos,
                 int dim) {
  if (initial.size() != final_pos.size())
    throw std::invalid_argument("mean_move: matched lists must have equal length");
  const std::size_t n = sample_count(initial, dim, "mean_move");
  std::vector<double> moves(n);
  for (std::size_t i = 0; i < n; ++i)
    moves[i] = distance(row(initial, dim, i), row(final_pos, dim, i));
  return pairwise_sum(moves) / static_cast<double>(n);
}

std::string ablation_table(const std::vector<MetricReport>& reports,
                           AblationLayout layout) {
  if (reports.empty()) throw std::invalid_argument("ablation_table: no reports");

  std::vector<MetricReport> sorted = reports;
  if (layout == AblationLayout::DenoiserMala) {
    // Swept parameter is t_noise = 1 / (1 + sigma), ascending: sigma descending.
    std::sort(sorted.begin(), sorted.end(),
              [](const MetricReport& a, const MetricReport& b) {
                return a.parameter > b.parameter;
              });
  } else {
    std::sort(sorted.begin(), sorted.end(),
              [](const MetricReport& a, const MetricReport& b) {
                return a.parameter < b.parameter;
              });
  }

  CsvTable table;
  if (layout == AblationLayout::DenoiserMala) {
    table.header = {"t_noise", "sigma",          "steps",    "acc_rate",
                    "nll_to_p_sigma", "mmd_to_p_sigma", "mean_move"};
    for (const MetricReport& r : sorted) {
      const double t_noise = 1.0 / (1.0 + r.parameter);
      table.rows.push_back({fmt_g6(t_noise), fmt_g6(r.parameter),
                            std::to_string(r.n_steps),
                            fmt_g6(r.acceptance_rate.value_or(0.0)), fmt_g6(r.nll),
                            fmt_g6(r.mmd), fmt_g6(r.mean_move)});
    }
  } else {
    table.header = {"tau", "steps", "nll_to_p", "mmd_to_p", "mean_move"};
    for (const MetricReport& r : sorted)
      table.rows.push_back({fmt_g6(r.parameter), std::to_string(r.n_steps),
                            fmt_g6(r.nll), fmt_g6(r.mmd), fmt_g6(r.mean_move)});
  }
  return table.to_string();
}

}  // namespace statsamp
