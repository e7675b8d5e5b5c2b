#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "statsamp/csv.hpp"
#include "statsamp/metrics.hpp"
#include "test_support.hpp"

using namespace statsamp;
using namespace statsamp::test;

TEST_CASE("nll: fresh Gaussian samples sit at the differential entropy") {
  auto gm = gaussian1d();
  Rng rng(1);
  const std::vector<double> draws = sample(gm, rng, 100000);
  const double expected = 0.5 * std::log(2.0 * 3.141592653589793 * std::exp(1.0));
  CHECK(std::abs(nll(gm, draws) - expected) < 0.01);
}

TEST_CASE("nll: single sample at the mode is the exact negative log-density") {
  auto gm = IsotropicGaussianMixture::single({1.3, -0.2}, 0.49);
  const std::vector<double> x = {1.3, -0.2};
  CHECK(nll(gm, x) == doctest::Approx(-log_density(gm, x)).epsilon(1e-15));
}

TEST_CASE("nll: samples from a broader law score strictly worse") {
  auto gm = gaussian1d();
  auto broad = IsotropicGaussianMixture::single({0.0}, 2.0);
  Rng rng(2);
  const std::vector<double> fresh = sample(gm, rng, 20000);
  const std::vector<double> broad_draws = sample(broad, rng, 20000);
  const NllEstimate base = nll_with_se(gm, fresh);
  const NllEstimate off = nll_with_se(gm, broad_draws);
  const double se = std::sqrt(base.std_error * base.std_error +
                              off.std_error * off.std_error);
  CHECK(off.value - base.value > 3.0 * se);
}

TEST_CASE("nll: empty sample set is rejected") {
  auto gm = gaussian1d();
  CHECK_THROWS_AS(nll(gm, {}), std::invalid_argument);
}

TEST_CASE("mmd: identical sets score zero") {
  Rng rng(3);
  const std::vector<double> x = sample(trimodal2d(), rng, 500);
  CHECK(mmd_rbf(x, x, 2) <= 1e-12);
}

TEST_CASE("mmd: independent draws of one law stay under the null threshold") {
  auto gm = IsotropicGaussianMixture::standard(2);
  Rng rng(4);
  const std::vector<double> x = sample(gm, rng, 10000);
  const std::vector<double> y = sample(gm, rng, 10000);
  CHECK(mmd_rbf(x, y, 2) < 0.02);
}

TEST_CASE("mmd: separated means are loudly detected") {
  auto p = IsotropicGaussianMixture::standard(2);
  auto q = IsotropicGaussianMixture::single({3.0, 0.0}, 1.0);
  Rng rng(5);
  const std::vector<double> x = sample(p, rng, 10000);
  const std::vector<double> y = sample(q, rng, 10000);
  CHECK(mmd_rbf(x, y, 2) > 0.2);
}

TEST_CASE("mmd: symmetric in its arguments and permutation invariant") {
  auto gm = trimodal2d();
  Rng rng(6);
  const std::vector<double> x = sample(gm, rng, 600);
  const std::vector<double> y = sample(gm, rng, 400);
  CHECK(std::abs(mmd_rbf(x, y, 2) - mmd_rbf(y, x, 2)) <= 1e-12);

  std::vector<double> shuffled = x;
  // reverse the row order
  const std::size_t n = x.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    shuffled[2 * i] = x[2 * (n - 1 - i)];
    shuffled[2 * i + 1] = x[2 * (n - 1 - i) + 1];
  }
  CHECK(std::abs(mmd_rbf(x, y, 2) - mmd_rbf(shuffled, y, 2)) <= 1e-12);
}

TEST_CASE("mmd: parallel result equals the serial reference bitwise") {
  auto gm = trimodal2d();
  Rng rng(7);
  const std::vector<double> x = sample(gm, rng, 3000);
  const std::vector<double> y = sample(smooth(gm, 0.2), rng, 2500);
  const double serial = mmd_rbf_serial(x, y, 2);
  for (int threads : {0, 1, 2, 3})
    CHECK(mmd_rbf(x, y, 2, Bandwidth::median(), threads) == serial);
}

TEST_CASE("mmd: deterministic bandwidth heuristic above the subsample cutoff") {
  auto gm = trimodal2d();
  Rng rng(8);
  const std::vector<double> x = sample(gm, rng, 6000);
  const std::vector<double> y = sample(gm, rng, 6000);
  CHECK(mmd_rbf(x, y, 2) == mmd_rbf(x, y, 2));
  // fixed bandwidth path
  CHECK(mmd_rbf(x, y, 2, Bandwidth::fixed(0.7)) ==
        mmd_rbf(x, y, 2, Bandwidth::fixed(0.7)));
  CHECK_THROWS_AS(mmd_rbf({}, y, 2), std::invalid_argument);
}

TEST_CASE("mean_move: exact cases") {
  const std::vector<double> a = {0.0, 0.0, 1.0, 1.0};
  CHECK(mean_move(a, a, 2) == 0.0);
  std::vector<double> b = a;
  for (std::size_t i = 0; i < b.size(); i += 2) {
    b[i] += 3.0;
    b[i + 1] += 4.0;
  }
  CHECK(mean_move(a, b, 2) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(mean_move(a, std::span<const double>(b).subspan(0, 2), 2),
                  std::invalid_argument);
}

TEST_CASE("ablation_table: denoiser-MALA layout with the sigma mapping") {
  std::vector<MetricReport> reports;
  for (double t_noise : {0.98, 0.90, 0.95}) {  // deliberately unsorted
    MetricReport r;
    r.parameter = (1.0 - t_noise) / t_noise;
    r.nll = 2.0;
    r.mmd = 0.01;
    r.acceptance_rate = 0.9;
    r.mean_move = 1.0;
    r.n_steps = 200;
    r.n_samples = 512;
    reports.push_back(r);
  }
  const std::string csv = ablation_table(reports, AblationLayout::DenoiserMala);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "t_noise,sigma,steps,acc_rate,nll_to_p_sigma,mmd_to_p_sigma,mean_move");
  std::getline(is, line);
  CHECK(line.substr(0, 13) == "0.9,0.111111,");
  std::getline(is, line);
  CHECK(line.substr(0, 15) == "0.95,0.0526316,");
  std::getline(is, line);
  CHECK(line.substr(0, 15) == "0.98,0.0204082,");
}

TEST_CASE("ablation_table: predictor-corrector layout sorted by tau") {
  std::vector<MetricReport> reports;
  for (double tau : {0.95, 0.70, 0.85}) {
    MetricReport r;
    r.parameter = tau;
    r.nll = 1.0;
    r.mmd = 0.02;
    r.mean_move = 0.5;
    r.n_steps = 200;
    reports.push_back(r);
  }
  const std::string csv = ablation_table(reports, AblationLayout::PredictorCorrector);
  std::istringstream is(csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == "tau,steps,nll_to_p,mmd_to_p,mean_move");
  std::getline(is, line);
  CHECK(line.substr(0, 4) == "0.7,");
  std::getline(is, line);
  CHECK(line.substr(0, 5) == "0.85,");
  std::getline(is, line);
  CHECK(line.substr(0, 5) == "0.95,");
  CHECK_THROWS_AS(ablation_table({}, AblationLayout::PredictorCorrector),
                  std::invalid_argument);
}

TEST_CASE("csv helpers: parse errors carry line numbers") {
  write_text_file("metrics_test_bad.csv", "a,b\n1,2\n3\n");
  try {
    read_csv("metrics_test_bad.csv");
    FAIL("expected parse error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  write_text_file("metrics_test_ok.csv", "# comment\na,b\n1,oops\n");
  const ParsedCsv parsed = read_csv("metrics_test_ok.csv");
  CHECK(parsed.header.size() == 2);
  CHECK(parsed.rows.size() == 1);
  CHECK(parsed.column("b") == 1);
  CHECK(parsed.column("zz") == -1);
  CHECK(parsed.number(0, 0) == 1.0);
  try {
    parsed.number(0, 1);
    FAIL("expected conversion error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::remove("metrics_test_bad.csv");
  std::remove("metrics_test_ok.csv");
}
