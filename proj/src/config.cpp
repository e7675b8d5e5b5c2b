#include "statsamp/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "statsamp/errors.hpp"

namespace statsamp {

IsotropicGaussianMixture TargetConfig::build() const {
  if (kind == "swiss_roll") return swiss_roll_target(swiss);
  if (kind == "gaussian")
    return IsotropicGaussianMixture::single(gaussian_mean, gaussian_variance);
  if (kind == "mixture") {
    const int d = mixture_dim;
    std::vector<double> weights, means, variances;
    for (const Component& c : components) {
      weights.push_back(c.weight);
      variances.push_back(c.variance);
      means.insert(means.end(), c.mean.begin(), c.mean.end());
    }
    return IsotropicGaussianMixture(d, std::move(weights), std::move(means),
                                    std::move(variances));
  }
  throw ConfigError("target.kind: unknown kind '" + kind + "'");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

struct Entry {
  std::string key;
  std::string value;
};

using Sections = std::map<std::string, std::vector<Entry>>;

Sections parse_ini(const std::string& text, const std::string& origin) {
  Sections out;
  std::istringstream is(text);
  std::string line, section;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string where = origin + ":" + std::to_string(line_no);
    std::string stripped = line;
    const std::size_t hash = stripped.find_first_of("#;");
    if (hash != std::string::npos) stripped = stripped.substr(0, hash);
    stripped = trim(stripped);
    if (stripped.empty()) continue;
    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        throw ConfigError(where + ": malformed section header");
      section = trim(stripped.substr(1, stripped.size() - 2));
      if (section.empty()) throw ConfigError(where + ": empty section name");
      out[section];
      continue;
    }
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + ": expected key = value");
    if (section.empty())
      throw ConfigError(where + ": key outside any [section]");
    Entry e{trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1))};
    if (e.key.empty()) throw ConfigError(where + ": empty key");
    out[section].push_back(std::move(e));
  }
  return out;
}

double parse_double(const std::string& path, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("junk");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(path + ": expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& path, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("junk");
    return x;
  } catch (const std::exception&) {
    throw ConfigError(path + ": expected an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& path, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("junk");
    return static_cast<std::uint64_t>(x);
  } catch (const std::exception&) {
    throw ConfigError(path + ": expected an unsigned integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& path, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(path + ": expected true/false, got '" + v + "'");
}

std::vector<double> parse_double_list(const std::string& path, const std::string& v) {
  std::vector<double> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, ',')) out.push_back(parse_double(path, trim(cur)));
  if (out.empty()) throw ConfigError(path + ": expected a comma-separated list");
  return out;
}

/// Typed view of one section; flags consumed keys so leftovers can be
/// reported as unknown.
class SectionReader {
 public:
  SectionReader(const Sections& sections, std::string name)
      : name_(std::move(name)) {
    auto it = sections.find(name_);
    if (it != sections.end()) entries_ = &it->second;
    if (entries_) consumed_.assign(entries_->size(), false);
  }

  bool present() const { return entries_ != nullptr; }

  std::optional<std::string> raw(const std::string& key) {
    if (!entries_) return std::nullopt;
    std::optional<std::string> result;
    for (std::size_t i = 0; i < entries_->size(); ++i) {
      if ((*entries_)[i].key == key) {
        consumed_[i] = true;
        result = (*entries_)[i].value;  // last occurrence wins
      }
    }
    return result;
  }

  std::vector<std::string> raw_all(const std::string& key) {
    std::vector<std::string> out;
    if (!entries_) return out;
    for (std::size_t i = 0; i < entries_->size(); ++i) {
      if ((*entries_)[i].key == key) {
        consumed_[i] = true;
        out.push_back((*entries_)[i].value);
      }
    }
    return out;
  }

  std::string path(const std::string& key) const { return name_ + "." + key; }

  void get(const std::string& key, double& dst) {
    if (auto v = raw(key)) dst = parse_double(path(key), *v);
  }
  void get(const std::string& key, int& dst) {
    if (auto v = raw(key)) dst = static_cast<int>(parse_int(path(key), *v));
  }
  void get(const std::string& key, std::uint64_t& dst) {
    if (auto v = raw(key)) dst = parse_u64(path(key), *v);
  }
  void get(const std::string& key, bool& dst) {
    if (auto v = raw(key)) dst = parse_bool(path(key), *v);
  }
  void get(const std::string& key, std::string& dst) {
    if (auto v = raw(key)) dst = *v;
  }
  void get(const std::string& key, std::optional<double>& dst) {
    if (auto v = raw(key)) dst = parse_double(path(key), *v);
  }
  void get(const std::string& key, std::vector<double>& dst) {
    if (auto v = raw(key)) dst = parse_double_list(path(key), *v);
  }

  void finish() const {
    if (!entries_) return;
    for (std::size_t i = 0; i < entries_->size(); ++i)
      if (!consumed_[i])
        throw ConfigError(name_ + "." + (*entries_)[i].key + ": unknown key");
  }

 private:
  std::string name_;
  const std::vector<Entry>* entries_ = nullptr;
  std::vector<bool> consumed_;
};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  const Sections sections = parse_ini(text, origin);

  static const std::set<std::string> known = {"target", "kernel", "oracle",
                                              "train",  "run",    "output", "sweep"};
  for (const auto& [name, _] : sections)
    if (!known.count(name)) throw ConfigError("[" + name + "]: unknown section");

  ExperimentConfig cfg;

  {
    SectionReader s(sections, "target");
    s.get("kind", cfg.target.kind);
    s.get("n_components", cfg.target.swiss.n_components);
    s.get("theta_min", cfg.target.swiss.theta_min);
    s.get("theta_max", cfg.target.swiss.theta_max);
    s.get("radius_scale", cfg.target.swiss.radius_scale);
    s.get("component_std", cfg.target.swiss.component_std);
    s.get("mean", cfg.target.gaussian_mean);
    s.get("variance", cfg.target.gaussian_variance);
    s.get("dim", cfg.target.mixture_dim);
    for (const std::string& v : s.raw_all("component")) {
      const std::vector<double> nums = parse_double_list("target.component", v);
      if (nums.size() < 3)
        throw ConfigError("target.component: expected weight, variance, mean...");
      TargetConfig::Component c;
      c.weight = nums[0];
      c.variance = nums[1];
      c.mean.assign(nums.begin() + 2, nums.end());
      cfg.target.components.push_back(std::move(c));
    }
    s.finish();
  }
  {
    SectionReader s(sections, "kernel");
    s.get("kind", cfg.kernel.kind);
    s.get("h", cfg.kernel.h);
    s.get("sigma", cfg.kernel.sigma);
    s.get("tau", cfg.kernel.tau);
    s.get("quadrature_nodes", cfg.kernel.quadrature_nodes);
    s.get("schedule", cfg.kernel.schedule);
    s.get("pc_integrator", cfg.kernel.pc_integrator);
    s.get("pc_steps", cfg.kernel.pc_steps);
    s.finish();
  }
  {
    SectionReader s(sections, "oracle");
    s.get("mode", cfg.oracle.mode);
    s.get("model_file", cfg.oracle.model_file);
    s.finish();
  }
  {
    SectionReader s(sections, "train");
    cfg.has_train_section = s.present();
    s.get("objective", cfg.train.objective);
    s.get("hidden", cfg.train.hidden);
    s.get("learning_rate", cfg.train.cfg.learning_rate);
    s.get("batch_size", cfg.train.cfg.batch_size);
    s.get("n_steps", cfg.train.cfg.n_steps);
    s.get("sigma_lo", cfg.train.cfg.sigma_lo);
    s.get("sigma_hi", cfg.train.cfg.sigma_hi);
    s.get("lambda_sym", cfg.train.cfg.lambda_sym);
    s.get("tau_min", cfg.train.cfg.tau_min);
    s.get("n_sym_probes", cfg.train.cfg.n_sym_probes);
    s.finish();
  }
  {
    SectionReader s(sections, "run");
    s.get("n_chains", cfg.run.n_chains);
    s.get("n_steps", cfg.run.n_steps);
    s.get("thin", cfg.run.thin);
    s.get("seed", cfg.run.seed);
    s.get("threads", cfg.run.threads);
    s.get("n_samples", cfg.run.n_samples);
    s.finish();
  }
  {
    SectionReader s(sections, "output");
    s.get("dir", cfg.output.dir);
    s.get("emit_plots", cfg.output.emit_plots);
    s.finish();
  }
  {
    SectionReader s(sections, "sweep");
    s.get("t_noise", cfg.sweep.t_noise);
    s.get("tau", cfg.sweep.tau);
    s.finish();
  }

  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return parse_config_text(os.str(), path);
}

namespace {
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace

std::string target_config_text(const TargetConfig& target) {
  std::ostringstream os;
  os << "[target]\n";
  os << "kind = " << target.kind << "\n";
  if (target.kind == "swiss_roll") {
    os << "n_components = " << target.swiss.n_components << "\n";
    os << "theta_min = " << num(target.swiss.theta_min) << "\n";
    os << "theta_max = " << num(target.swiss.theta_max) << "\n";
    os << "radius_scale = " << num(target.swiss.radius_scale) << "\n";
    os << "component_std = " << num(target.swiss.component_std) << "\n";
  } else if (target.kind == "gaussian") {
    os << "mean = ";
    for (std::size_t j = 0; j < target.gaussian_mean.size(); ++j)
      os << (j ? ", " : "") << num(target.gaussian_mean[j]);
    os << "\n";
    os << "variance = " << num(target.gaussian_variance) << "\n";
  } else if (target.kind == "mixture") {
    os << "dim = " << target.mixture_dim << "\n";
    for (const TargetConfig::Component& c : target.components) {
      os << "component = " << num(c.weight) << ", " << num(c.variance);
      for (double m : c.mean) os << ", " << num(m);
      os << "\n";
    }
  } else {
    throw ConfigError("target.kind: unknown kind '" + target.kind + "'");
  }
  return os.str();
}

namespace {

void validate_target(const TargetConfig& t) {
  if (t.kind == "swiss_roll") {
    if (t.swiss.n_components < 2)
      throw ConfigError("target.n_components: must be >= 2");
    if (!(t.swiss.theta_max > t.swiss.theta_min))
      throw ConfigError("target.theta_max: must exceed target.theta_min");
    if (!(t.swiss.radius_scale > 0.0))
      throw ConfigError("target.radius_scale: must be positive");
    if (!(t.swiss.component_std > 0.0))
      throw ConfigError("target.component_std: must be positive");
  } else if (t.kind == "gaussian") {
    if (t.gaussian_mean.empty()) throw ConfigError("target.mean: must be nonempty");
    if (!(t.gaussian_variance > 0.0))
      throw ConfigError("target.variance: must be positive");
  } else if (t.kind == "mixture") {
    if (t.mixture_dim <= 0) throw ConfigError("target.dim: must be positive");
    if (t.components.empty())
      throw ConfigError("target.component: at least one component required");
    double wsum = 0.0;
    for (const auto& c : t.components) {
      if (!(c.weight > 0.0)) throw ConfigError("target.component: weight must be > 0");
      if (!(c.variance > 0.0))
        throw ConfigError("target.component: variance must be > 0");
      if (static_cast<int>(c.mean.size()) != t.mixture_dim)
        throw ConfigError("target.component: mean length must equal target.dim");
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-12)
      throw ConfigError("target.component: weights must sum to 1 within 1e-12");
  } else {
    throw ConfigError("target.kind: unknown kind '" + t.kind + "'");
  }
}

void require_set(const std::optional<double>& field, const char* path) {
  if (!field) throw ConfigError(std::string(path) + ": required for this kernel kind");
}

void require_unset(const std::optional<double>& field, const char* path,
                   const char* kind) {
  if (field)
    throw ConfigError(std::string(path) + ": not a field of kernel kind '" + kind + "'");
}

enum class KernelCheck {
  Generic,    // sweep commands: swept parameter comes from [sweep]
  HAndSigma,  // compare-ula: both baselines configured at once
  ByKind      // single-kernel commands: exactly the fields of `kind`
};

void validate_kernel(const KernelSection& k, KernelCheck check) {
  if (k.quadrature_nodes < 2)
    throw ConfigError("kernel.quadrature_nodes: must be >= 2");
  if (k.pc_steps < 1) throw ConfigError("kernel.pc_steps: must be >= 1");
  if (k.schedule != "linear" && k.schedule != "cosine")
    throw ConfigError("kernel.schedule: must be linear or cosine");
  if (k.pc_integrator != "euler" && k.pc_integrator != "rk2" &&
      k.pc_integrator != "solution_map")
    throw ConfigError("kernel.pc_integrator: must be euler, rk2 or solution_map");

  if (check == KernelCheck::Generic) return;

  if (check == KernelCheck::HAndSigma) {
    require_set(k.h, "kernel.h");
    require_set(k.sigma, "kernel.sigma");
    if (!(*k.h > 0.0)) throw ConfigError("kernel.h: must be positive");
    if (!(*k.sigma > 0.0)) throw ConfigError("kernel.sigma: must be positive");
    return;
  }

  if (k.kind == "ula" || k.kind == "mala") {
    require_set(k.h, "kernel.h");
    if (!(*k.h > 0.0)) throw ConfigError("kernel.h: must be positive");
    require_unset(k.sigma, "kernel.sigma", k.kind.c_str());
    require_unset(k.tau, "kernel.tau", k.kind.c_str());
  } else if (k.kind == "dmala") {
    require_set(k.sigma, "kernel.sigma");
    if (!(*k.sigma > 0.0)) throw ConfigError("kernel.sigma: must be positive");
    require_unset(k.h, "kernel.h", "dmala");
    require_unset(k.tau, "kernel.tau", "dmala");
  } else if (k.kind == "pc") {
    require_set(k.tau, "kernel.tau");
    if (!(*k.tau > 0.0 && *k.tau < 1.0))
      throw ConfigError("kernel.tau: must lie in (0, 1)");
    require_unset(k.h, "kernel.h", "pc");
    require_unset(k.sigma, "kernel.sigma", "pc");
  } else {
    throw ConfigError("kernel.kind: unknown kind '" + k.kind + "'");
  }
}

void validate_train(const TrainSection& t) {
  objective_by_name(t.objective);  // throws on unknown
  if (t.hidden < 1) throw ConfigError("train.hidden: must be >= 1");
  if (!(t.cfg.learning_rate > 0.0))
    throw ConfigError("train.learning_rate: must be positive");
  if (t.cfg.batch_size < 1) throw ConfigError("train.batch_size: must be >= 1");
  if (t.cfg.n_steps < 1) throw ConfigError("train.n_steps: must be >= 1");
  if (!(t.cfg.sigma_lo > 0.0)) throw ConfigError("train.sigma_lo: must be positive");
  if (t.cfg.sigma_hi < t.cfg.sigma_lo)
    throw ConfigError("train.sigma_hi: must be >= train.sigma_lo");
  if (t.cfg.lambda_sym < 0.0) throw ConfigError("train.lambda_sym: must be >= 0");
  if (!(t.cfg.tau_min > 0.0 && t.cfg.tau_min < 1.0))
    throw ConfigError("train.tau_min: must lie in (0, 1)");
  if (t.cfg.n_sym_probes < 1) throw ConfigError("train.n_sym_probes: must be >= 1");
}

void validate_run(const RunSection& r) {
  if (r.n_chains < 1) throw ConfigError("run.n_chains: must be >= 1");
  if (r.n_steps < 1) throw ConfigError("run.n_steps: must be >= 1");
  if (r.thin < 0) throw ConfigError("run.thin: must be >= 0");
  if (r.threads < 0) throw ConfigError("run.threads: must be >= 0");
  if (r.n_samples < 1) throw ConfigError("run.n_samples: must be >= 1");
}

}  // namespace

void validate_config(const ExperimentConfig& cfg, const std::string& command) {
  validate_target(cfg.target);
  validate_run(cfg.run);
  if (cfg.output.dir.empty()) throw ConfigError("output.dir: must be nonempty");

  if (cfg.oracle.mode != "analytic" && cfg.oracle.mode != "learned")
    throw ConfigError("oracle.mode: must be analytic or learned");
  const bool learned = cfg.oracle.mode == "learned";
  if (learned && cfg.oracle.model_file.empty() && !cfg.has_train_section)
    throw ConfigError(
        "oracle.model_file: learned mode requires a model file or a [train] section");

  if (command == "compare-ula") {
    validate_kernel(cfg.kernel, KernelCheck::HAndSigma);
  } else if (command == "ablate-dmala") {
    for (double t : cfg.sweep.t_noise)
      if (!(t > 0.0 && t < 1.0))
        throw ConfigError("sweep.t_noise: values must lie in (0, 1)");
    if (cfg.sweep.t_noise.empty())
      throw ConfigError("sweep.t_noise: must be nonempty");
    validate_kernel(cfg.kernel, KernelCheck::Generic);
  } else if (command == "ablate-pc") {
    for (double t : cfg.sweep.tau)
      if (!(t > 0.0 && t < 1.0))
        throw ConfigError("sweep.tau: values must lie in (0, 1)");
    if (cfg.sweep.tau.empty()) throw ConfigError("sweep.tau: must be nonempty");
    validate_kernel(cfg.kernel, KernelCheck::Generic);
  } else if (command == "train") {
    validate_train(cfg.train);
  } else if (command == "sample") {
    // target + run sections suffice; validated above
  } else {
    validate_kernel(cfg.kernel, KernelCheck::ByKind);
  }

  if (learned || cfg.has_train_section) validate_train(cfg.train);
}

}  // namespace statsamp
