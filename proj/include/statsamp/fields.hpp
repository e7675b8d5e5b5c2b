#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>

namespace statsamp {

namespace detail {

/// Optional shared evaluation counter. Fields carry a null pointer unless a
/// test attaches one, so the hot path pays only a branch.
class EvalCounter {
 public:
  void attach() { count_ = std::make_shared<std::atomic<std::uint64_t>>(0); }
  void bump() const {
    if (count_) count_->fetch_add(1, std::memory_order_relaxed);
  }
  std::uint64_t value() const { return count_ ? count_->load() : 0; }
  void reset() const {
    if (count_) count_->store(0);
  }

 private:
  std::shared_ptr<std::atomic<std::uint64_t>> count_;
};

}  // namespace detail

/// Denoiser y -> E[x | x + eta * eps = y] at a fixed noise level eta.
/// Analytic oracles and trained networks both appear behind this surface and
/// are consumed identically by the samplers. Must be safe for concurrent
/// read-only evaluation.
struct DenoiserField {
  std::function<void(std::span<const double>, std::span<double>)> fn;
  double eta = 0.0;
  detail::EvalCounter counter;

  void eval(std::span<const double> y, std::span<double> out) const {
    counter.bump();
    fn(y, out);
  }
  void attach_counter() { counter.attach(); }
  std::uint64_t eval_count() const { return counter.value(); }
  void reset_count() const { counter.reset(); }
};

/// Velocity field v(x, t) of a bridge, valid on [t_min, t_max].
struct VelocityField {
  std::function<void(std::span<const double>, double, std::span<double>)> fn;
  double t_min = 0.0;
  double t_max = 1.0;
  detail::EvalCounter counter;

  void eval(std::span<const double> x, double t, std::span<double> out) const {
    counter.bump();
    fn(x, t, out);
  }
  void attach_counter() { counter.attach(); }
  std::uint64_t eval_count() const { return counter.value(); }
  void reset_count() const { counter.reset(); }
};

/// Direct solution map f(x, t, s) approximating the bridge flow from time t
/// to time s >= t in one evaluation.
struct SolutionMap {
  std::function<void(std::span<const double>, double, double, std::span<double>)> fn;
  detail::EvalCounter counter;

  void eval(std::span<const double> x, double t, double s, std::span<double> out) const {
    counter.bump();
    fn(x, t, s, out);
  }
  void attach_counter() { counter.attach(); }
  std::uint64_t eval_count() const { return counter.value(); }
  void reset_count() const { counter.reset(); }
};

}  // namespace statsamp
