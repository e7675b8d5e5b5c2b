#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace statsamp {

/// Sin/cos features at 4 dyadic frequencies plus the raw scalar; the
/// conditioning vector appended to the input when a network is
/// time-conditioned.
inline constexpr int kTimeFeatureDim = 9;
void time_features(double c, std::span<double> out);

enum class ModelKind : std::uint32_t { Generic = 0, Denoiser = 1, Velocity = 2 };

/// Fixed two-hidden-layer tanh perceptron with hand-written forward,
/// reverse (parameter gradient) and directional (input Jacobian) passes.
///
/// Parameters live in one flat vector, ordered W1, b1, W2, b2, W3, b3 with
/// row-major weight blocks. Networks are immutable value types once trained;
/// evaluation is const and safe to share across threads.
class Mlp {
 public:
  Mlp(int x_dim, int hidden, int out_dim, bool time_conditioned);

  /// Random init: weights ~ N(0, 1/fan_in), biases zero.
  static Mlp random_init(int x_dim, int hidden, int out_dim, bool time_conditioned,
                         std::uint64_t seed);

  int x_dim() const { return x_dim_; }
  int hidden() const { return hidden_; }
  int out_dim() const { return out_dim_; }
  bool time_conditioned() const { return time_conditioned_; }
  int input_dim() const { return x_dim_ + (time_conditioned_ ? kTimeFeatureDim : 0); }
  std::size_t n_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::span<const double> w1() const { return slice(off_w1_, static_cast<std::size_t>(hidden_) * input_dim()); }
  std::span<const double> b1() const { return slice(off_b1_, hidden_); }
  std::span<const double> w2() const { return slice(off_w2_, static_cast<std::size_t>(hidden_) * hidden_); }
  std::span<const double> b2() const { return slice(off_b2_, hidden_); }
  std::span<const double> w3() const { return slice(off_w3_, static_cast<std::size_t>(out_dim_) * hidden_); }
  std::span<const double> b3() const { return slice(off_b3_, out_dim_); }
  std::span<double> w1() { return slice(off_w1_, static_cast<std::size_t>(hidden_) * input_dim()); }
  std::span<double> b1() { return slice(off_b1_, hidden_); }
  std::span<double> w2() { return slice(off_w2_, static_cast<std::size_t>(hidden_) * hidden_); }
  std::span<double> b2() { return slice(off_b2_, hidden_); }
  std::span<double> w3() { return slice(off_w3_, static_cast<std::size_t>(out_dim_) * hidden_); }
  std::span<double> b3() { return slice(off_b3_, out_dim_); }

  /// Cached activations of one forward pass; reused by the reverse pass.
  struct Workspace {
    std::vector<double> input;         // assembled features
    std::vector<double> a1, h1, d1;    // first layer (d = tanh')
    std::vector<double> a2, h2, d2;    // second layer
    std::vector<double> out;
    std::vector<double> scratch_h, scratch_h2, scratch_in;
  };

  /// Evaluate at x with conditioning scalar c (ignored unless
  /// time-conditioned).
  void forward(std::span<const double> x, double c, std::span<double> out) const;
  void forward_ws(std::span<const double> x, double c, Workspace& ws) const;

  /// Accumulates d<out_adjoint, out>/d(params) into grad; run forward_ws
  /// first on the same workspace.
  void backprop_params(const Workspace& ws, std::span<const double> out_adjoint,
                       std::span<double> grad) const;

  /// Exact Jacobian-vector product with respect to the x block of the input
  /// (conditioning features held fixed).
  void jvp_input(std::span<const double> x, double c, std::span<const double> v,
                 std::span<double> out) const;
  /// Exact transposed-Jacobian-vector product with respect to x.
  void vjp_input(std::span<const double> x, double c, std::span<const double> u,
                 std::span<double> out) const;

  void save(const std::string& path, ModelKind kind) const;

 private:
  std::span<const double> slice(std::size_t off, std::size_t len) const {
    return {params_.data() + off, len};
  }
  std::span<double> slice(std::size_t off, std::size_t len) {
    return {params_.data() + off, len};
  }
  void assemble_input(std::span<const double> x, double c,
                      std::vector<double>& input) const;

  int x_dim_;
  int hidden_;
  int out_dim_;
  bool time_conditioned_;
  std::size_t off_w1_, off_b1_, off_w2_, off_b2_, off_w3_, off_b3_;
  std::vector<double> params_;

  friend double symmetry_penalty_grad_accum(const Mlp&, std::span<const double>, double,
                                            std::span<const double>, int,
                                            std::span<double>);
};

struct LoadedMlp {
  Mlp net;
  ModelKind kind;
};

/// Counterpart of Mlp::save; validates magic, version and parameter count.
LoadedMlp load_mlp(const std::string& path);

}  // namespace statsamp
