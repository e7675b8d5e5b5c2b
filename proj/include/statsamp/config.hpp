#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "statsamp/losses.hpp"
#include "statsamp/mixture.hpp"

namespace statsamp {

/// [target] section: the analytic law an experiment runs against.
struct TargetConfig {
  std::string kind = "swiss_roll";  // swiss_roll | gaussian | mixture

  SwissRollSpec swiss;

  std::vector<double> gaussian_mean = {0.0, 0.0};
  double gaussian_variance = 1.0;

  struct Component {
    double weight = 1.0;
    double variance = 1.0;
    std::vector<double> mean;
  };
  int mixture_dim = 0;
  std::vector<Component> components;

  IsotropicGaussianMixture build() const;
};

/// [kernel] section. Exactly the fields required by `kind` may be set; the
/// dMALA step size is tied to sigma^2 and has no independent field.
struct KernelSection {
  std::string kind = "dmala";  // ula | mala | dmala | pc
  std::optional<double> h;
  std::optional<double> sigma;
  std::optional<double> tau;
  int quadrature_nodes = 2;
  std::string schedule = "linear";
  std::string pc_integrator = "rk2";  // euler | rk2 | solution_map
  int pc_steps = 200;
};

struct OracleSection {
  std::string mode = "analytic";  // analytic | learned
  std::string model_file;
};

struct TrainSection {
  std::string objective = "denoise";
  int hidden = 64;
  TrainConfig cfg;
};

struct RunSection {
  int n_chains = 32;
  int n_steps = 200;
  int thin = 0;
  std::uint64_t seed = 1234;
  int threads = 0;
  int n_samples = 1000;
};

struct OutputSection {
  std::string dir = "out";
  bool emit_plots = true;
};

struct SweepSection {
  std::vector<double> t_noise = {0.90, 0.95, 0.98};
  std::vector<double> tau = {0.70, 0.85, 0.95};
};

struct ExperimentConfig {
  TargetConfig target;
  KernelSection kernel;
  OracleSection oracle;
  TrainSection train;
  RunSection run;
  OutputSection output;
  SweepSection sweep;
  bool has_train_section = false;
};

/// Parses the sectioned key = value format. Unknown sections or keys raise
/// ConfigError with the offending [section].key path.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);
ExperimentConfig parse_config_file(const std::string& path);

/// [target] section text that parses back to the same target.
std::string target_config_text(const TargetConfig& target);

/// Full cross-field validation for one CLI command; runs before any
/// computation so a bad config produces no partial output.
void validate_config(const ExperimentConfig& cfg, const std::string& command);

}  // namespace statsamp
