#include "statsamp/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "statsamp/errors.hpp"
#include "statsamp/vec.hpp"

namespace statsamp {

DenoiserField mlp_denoiser_field(std::shared_ptr<const Mlp> net, double sigma) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("mlp_denoiser_field: sigma must be > 0");
  if (net->out_dim() != net->x_dim())
    throw std::invalid_argument("mlp_denoiser_field: net must map R^d -> R^d");
  DenoiserField field;
  field.eta = sigma;
  field.fn = [net, sigma](std::span<const double> y, std::span<double> out) {
    net->forward(y, sigma, out);
    for (std::size_t j = 0; j < y.size(); ++j) out[j] += y[j];
  };
  return field;
}

VelocityField mlp_velocity_field(std::shared_ptr<const Mlp> net, double t_min,
                                 double t_max) {
  if (net->out_dim() != net->x_dim())
    throw std::invalid_argument("mlp_velocity_field: net must map R^d -> R^d");
  VelocityField field;
  field.t_min = t_min;
  field.t_max = t_max;
  field.fn = [net](std::span<const double> x, double t, std::span<double> out) {
    net->forward(x, t, out);
  };
  return field;
}

DenoiseBatch make_denoise_batch(const IsotropicGaussianMixture& gm, double sigma_lo,
                                double sigma_hi, int batch, Rng& rng) {
  if (!(sigma_lo > 0.0) || sigma_hi < sigma_lo)
    throw std::invalid_argument("make_denoise_batch: need 0 < sigma_lo <= sigma_hi");
  if (batch < 1) throw std::invalid_argument("make_denoise_batch: batch must be >= 1");
  DenoiseBatch b;
  b.dim = gm.dim();
  b.clean = sample(gm, rng, batch);
  b.noisy.resize(b.clean.size());
  b.sigma.resize(batch);
  for (int i = 0; i < batch; ++i) {
    const double s = sigma_lo == sigma_hi ? sigma_lo : rng.uniform(sigma_lo, sigma_hi);
    b.sigma[i] = s;
    for (int j = 0; j < b.dim; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * b.dim + j;
      b.noisy[k] = b.clean[k] + s * rng.normal();
    }
  }
  return b;
}

double denoise_loss_value(const DenoiserEvalFn& denoiser, const DenoiseBatch& batch) {
  const int d = batch.dim;
  std::vector<double> denoised(d);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::span<const double> y(batch.noisy.data() + i * d, d);
    const std::span<const double> x(batch.clean.data() + i * d, d);
    denoiser(y, batch.sigma[i], denoised);
    acc += squared_distance(denoised, x);
  }
  return acc / static_cast<double>(batch.size());
}

double denoise_loss_grad(const Mlp& net, const DenoiseBatch& batch,
                         std::span<double> grad) {
  const int d = batch.dim;
  if (net.x_dim() != d || net.out_dim() != d)
    throw std::invalid_argument("denoise_loss_grad: net dims must match batch dim");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Mlp::Workspace ws;
  std::vector<double> adjoint(d);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::span<const double> y(batch.noisy.data() + i * d, d);
    const std::span<const double> x(batch.clean.data() + i * d, d);
    net.forward_ws(y, batch.sigma[i], ws);
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double resid = y[j] + ws.out[j] - x[j];  // skip connection
      adjoint[j] = 2.0 * inv_b * resid;
      sq += resid * resid;
    }
    acc += sq;
    net.backprop_params(ws, adjoint, grad);
  }
  return acc * inv_b;
}

double symmetry_penalty_value_generic(const JvpFn& jvp, const JvpFn& vjp,
                                      std::span<const double> x,
                                      std::span<const double> probes, int n_probes) {
  if (n_probes < 1)
    throw std::invalid_argument("symmetry_penalty: n_probes must be >= 1");
  const std::size_t d = x.size();
  std::vector<double> jv(d), jtv(d);
  double acc = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    const std::span<const double> v(probes.data() + static_cast<std::size_t>(p) * d, d);
    jvp(x, v, jv);
    vjp(x, v, jtv);
    acc += squared_distance(jv, jtv);
  }
  return acc / n_probes;
}

double symmetry_penalty_value(const Mlp& net, std::span<const double> x, double c,
                              std::span<const double> probes, int n_probes) {
  if (net.out_dim() != net.x_dim())
    throw std::invalid_argument("symmetry_penalty: net must map R^d -> R^d");
  return symmetry_penalty_value_generic(
      [&](std::span<const double> pt, std::span<const double> v, std::span<double> out) {
        net.jvp_input(pt, c, v, out);
      },
      [&](std::span<const double> pt, std::span<const double> u, std::span<double> out) {
        net.vjp_input(pt, c, u, out);
      },
      x, probes, n_probes);
}

// Reverse mode applied to the probe-contracted scalar ||J v - J^T v||^2.
// The primal program is the fused forward + jvp + vjp pass written out in
// Mlp::jvp_input / Mlp::vjp_input; every intermediate here mirrors one line
// of that program, and the adjoint statements below run it backwards,
// including the second-order terms that flow through tanh' (d = 1 - h^2,
// d(d)/da = -2 h d).
double symmetry_penalty_grad_accum(const Mlp& net, std::span<const double> x, double c,
                                   std::span<const double> probes, int n_probes,
                                   std::span<double> grad) {
  if (net.out_dim() != net.x_dim())
    throw std::invalid_argument("symmetry_penalty_grad: net must map R^d -> R^d");
  if (grad.size() != net.n_params())
    throw std::invalid_argument("symmetry_penalty_grad: grad size mismatch");
  if (n_probes < 1)
    throw std::invalid_argument("symmetry_penalty_grad: n_probes must be >= 1");

  const std::size_t d = net.x_dim();
  const std::size_t h = net.hidden();
  const std::size_t in = net.input_dim();

  Mlp::Workspace ws;
  net.forward_ws(x, c, ws);

  const std::span<const double> w1 = net.w1();
  const std::span<const double> w2 = net.w2();
  const std::span<const double> w3 = net.w3();

  std::vector<double> t0(in, 0.0), u1(h), t1(h), u2(h), t2(h), jv(d);
  std::vector<double> s3(h), s2(h), s1(h), s0(h), w_full(in), jtv(d);
  std::vector<double> g(d), g_bar(d);
  std::vector<double> t2_bar(h), u2_bar(h), t1_bar(h), u1_bar(h);
  std::vector<double> s0_bar(h), s1_bar(h), s2_bar(h), s3_bar(h);
  std::vector<double> d1_bar(h), d2_bar(h), a1_bar(h), a2_bar(h), h1_bar(h);
  std::vector<double> c_pad(in, 0.0);

  auto mv = [](std::span<const double> w, std::span<const double> v,
               std::span<double> out) {
    const std::size_t rows = out.size();
    const std::size_t cols = v.size();
    for (std::size_t i = 0; i < rows; ++i) {
      double s = 0.0;
      const double* wi = w.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) s += wi[j] * v[j];
      out[i] = s;
    }
  };
  auto mtv = [](std::span<const double> w, std::size_t rows, std::size_t cols,
                std::span<const double> v, std::span<double> out) {
    for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
      const double* wi = w.data() + i * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += wi[j] * v[i];
    }
  };
  auto outer = [&](std::size_t off, std::span<const double> a,
                   std::span<const double> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      double* gi = grad.data() + off + i * b.size();
      for (std::size_t j = 0; j < b.size(); ++j) gi[j] += a[i] * b[j];
    }
  };

  const std::size_t off_w1 = 0;
  const std::size_t off_b1 = off_w1 + h * in;
  const std::size_t off_w2 = off_b1 + h;
  const std::size_t off_b2 = off_w2 + h * h;
  const std::size_t off_w3 = off_b2 + h;

  const double inv_p = 1.0 / n_probes;
  double value = 0.0;

  std::fill(d1_bar.begin(), d1_bar.end(), 0.0);
  std::fill(d2_bar.begin(), d2_bar.end(), 0.0);

  for (int p = 0; p < n_probes; ++p) {
    const std::span<const double> v(probes.data() + static_cast<std::size_t>(p) * d, d);

    // --- primal jvp ---
    std::fill(t0.begin(), t0.end(), 0.0);
    std::copy(v.begin(), v.end(), t0.begin());
    mv(w1, t0, u1);
    for (std::size_t i = 0; i < h; ++i) t1[i] = ws.d1[i] * u1[i];
    mv(w2, t1, u2);
    for (std::size_t i = 0; i < h; ++i) t2[i] = ws.d2[i] * u2[i];
    mv(w3, t2, jv);

    // --- primal vjp (covector = same probe) ---
    mtv(w3, d, h, v, s3);
    for (std::size_t i = 0; i < h; ++i) s2[i] = ws.d2[i] * s3[i];
    mtv(w2, h, h, s2, s1);
    for (std::size_t i = 0; i < h; ++i) s0[i] = ws.d1[i] * s1[i];
    mtv(w1, h, in, s0, w_full);
    std::copy(w_full.begin(), w_full.begin() + d, jtv.begin());

    double sq = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      g[j] = jv[j] - jtv[j];
      sq += g[j] * g[j];
      g_bar[j] = 2.0 * inv_p * g[j];
    }
    value += sq;

    // --- adjoint sweep ---
    // jv = W3 t2
    outer(off_w3, g_bar, t2);
    mtv(w3, d, h, g_bar, t2_bar);
    // jtv = (W1^T s0) restricted to the x block
    for (std::size_t j = 0; j < d; ++j) c_pad[j] = -g_bar[j];
    outer(off_w1, s0, c_pad);
    mv(w1, c_pad, s0_bar);
    // s0 = d1 . s1
    for (std::size_t i = 0; i < h; ++i) {
      d1_bar[i] += s0_bar[i] * s1[i];
      s1_bar[i] = ws.d1[i] * s0_bar[i];
    }
    // s1 = W2^T s2
    outer(off_w2, s2, s1_bar);
    mv(w2, s1_bar, s2_bar);
    // s2 = d2 . s3
    for (std::size_t i = 0; i < h; ++i) {
      d2_bar[i] += s2_bar[i] * s3[i];
      s3_bar[i] = ws.d2[i] * s2_bar[i];
    }
    // s3 = W3^T v
    outer(off_w3, v, s3_bar);
    // t2 = d2 . u2
    for (std::size_t i = 0; i < h; ++i) {
      d2_bar[i] += t2_bar[i] * u2[i];
      u2_bar[i] = ws.d2[i] * t2_bar[i];
    }
    // u2 = W2 t1
    outer(off_w2, u2_bar, t1);
    mtv(w2, h, h, u2_bar, t1_bar);
    // t1 = d1 . u1
    for (std::size_t i = 0; i < h; ++i) {
      d1_bar[i] += t1_bar[i] * u1[i];
      u1_bar[i] = ws.d1[i] * t1_bar[i];
    }
    // u1 = W1 t0
    outer(off_w1, u1_bar, t0);
  }

  // Propagate the accumulated tanh'-adjoints through the primal layers once.
  for (std::size_t i = 0; i < h; ++i)
    a2_bar[i] = d2_bar[i] * (-2.0 * ws.h2[i] * ws.d2[i]);
  outer(off_w2, a2_bar, ws.h1);
  for (std::size_t i = 0; i < h; ++i) grad[off_b2 + i] += a2_bar[i];
  mtv(w2, h, h, a2_bar, h1_bar);
  for (std::size_t i = 0; i < h; ++i)
    a1_bar[i] = h1_bar[i] * ws.d1[i] + d1_bar[i] * (-2.0 * ws.h1[i] * ws.d1[i]);
  outer(off_w1, a1_bar, ws.input);
  for (std::size_t i = 0; i < h; ++i) grad[off_b1 + i] += a1_bar[i];

  return value * inv_p;
}

FlowBatch make_flow_batch(const IsotropicGaussianMixture& gm,
                          const BridgeSchedule& sched, double tau_min, int batch,
                          Rng& rng) {
  if (!(tau_min > 0.0 && tau_min < 1.0))
    throw std::invalid_argument("make_flow_batch: tau_min must lie in (0, 1)");
  if (batch < 1) throw std::invalid_argument("make_flow_batch: batch must be >= 1");
  FlowBatch b;
  const int d = gm.dim();
  b.dim = d;
  b.x_t.resize(static_cast<std::size_t>(batch) * d);
  b.target.resize(static_cast<std::size_t>(batch) * d);
  b.t.resize(batch);
  const std::vector<double> clean = sample(gm, rng, batch);
  for (int i = 0; i < batch; ++i) {
    const double t = rng.uniform(tau_min, 1.0);
    b.t[i] = t;
    const double kap = sched.kappa(t), sb = sched.sigma_b(t);
    const double kd = sched.kappa_dot(t), sd = sched.sigma_b_dot(t);
    for (int j = 0; j < d; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * d + j;
      const double z = rng.normal();
      b.x_t[k] = kap * clean[k] + sb * z;
      b.target[k] = kd * clean[k] + sd * z;
    }
  }
  return b;
}

double flow_matching_loss_value(const VelocityEvalFn& velocity, const FlowBatch& batch) {
  const int d = batch.dim;
  std::vector<double> out(d);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::span<const double> xt(batch.x_t.data() + i * d, d);
    const std::span<const double> tgt(batch.target.data() + i * d, d);
    velocity(xt, batch.t[i], out);
    acc += squared_distance(out, tgt);
  }
  return acc / static_cast<double>(batch.size());
}

double flow_matching_loss_grad(const Mlp& net, const FlowBatch& batch,
                               std::span<double> grad) {
  const int d = batch.dim;
  if (net.x_dim() != d || net.out_dim() != d)
    throw std::invalid_argument("flow_matching_loss_grad: net dims must match batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  Mlp::Workspace ws;
  std::vector<double> adjoint(d);
  double acc = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::span<const double> xt(batch.x_t.data() + i * d, d);
    const std::span<const double> tgt(batch.target.data() + i * d, d);
    net.forward_ws(xt, batch.t[i], ws);
    double sq = 0.0;
    for (int j = 0; j < d; ++j) {
      const double resid = ws.out[j] - tgt[j];
      adjoint[j] = 2.0 * inv_b * resid;
      sq += resid * resid;
    }
    acc += sq;
    net.backprop_params(ws, adjoint, grad);
  }
  return acc * inv_b;
}

Objective objective_by_name(const std::string& name) {
  if (name == "denoise") return Objective::Denoise;
  if (name == "denoise+sym") return Objective::DenoiseSym;
  if (name == "flow_match") return Objective::FlowMatch;
  throw std::invalid_argument("unknown objective: " + name);
}

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::Denoise: return "denoise";
    case Objective::DenoiseSym: return "denoise+sym";
    case Objective::FlowMatch: return "flow_match";
  }
  return "?";
}

TrainResult train(Mlp net, Objective objective, const IsotropicGaussianMixture& target,
                  const BridgeSchedule& sched, const TrainConfig& cfg) {
  if (cfg.n_steps < 1) throw std::invalid_argument("train: n_steps must be >= 1");
  if (cfg.lambda_sym < 0.0) throw std::invalid_argument("train: lambda_sym must be >= 0");

  Rng rng(cfg.seed);
  const std::size_t np = net.n_params();
  std::vector<double> grad(np), m(np, 0.0), v(np, 0.0);
  std::vector<double> probes;
  std::vector<double> loss_trace;
  loss_trace.reserve(cfg.n_steps);

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for (int step = 1; step <= cfg.n_steps; ++step) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double loss = 0.0;

    if (objective == Objective::FlowMatch) {
      const FlowBatch batch =
          make_flow_batch(target, sched, cfg.tau_min, cfg.batch_size, rng);
      loss = flow_matching_loss_grad(net, batch, grad);
    } else {
      const DenoiseBatch batch =
          make_denoise_batch(target, cfg.sigma_lo, cfg.sigma_hi, cfg.batch_size, rng);
      loss = denoise_loss_grad(net, batch, grad);
      if (objective == Objective::DenoiseSym && cfg.lambda_sym > 0.0) {
        const int d = batch.dim;
        probes.resize(static_cast<std::size_t>(cfg.n_sym_probes) * d);
        std::vector<double> sym_grad(np, 0.0);
        double sym_acc = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          rng.fill_normal(probes);
          const std::span<const double> y(batch.noisy.data() + i * d, d);
          sym_acc += symmetry_penalty_grad_accum(net, y, batch.sigma[i], probes,
                                                 cfg.n_sym_probes, sym_grad);
        }
        const double inv_b = 1.0 / static_cast<double>(batch.size());
        loss += cfg.lambda_sym * sym_acc * inv_b;
        for (std::size_t k = 0; k < np; ++k)
          grad[k] += cfg.lambda_sym * inv_b * sym_grad[k];
      }
    }

    if (!std::isfinite(loss))
      throw NumericError("train: non-finite loss at step " + std::to_string(step));

    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    std::span<double> params = net.params();
    for (std::size_t k = 0; k < np; ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
      params[k] -= cfg.learning_rate * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + eps);
    }
    loss_trace.push_back(loss);
  }

  return TrainResult{std::move(net), std::move(loss_trace)};
}

}  // namespace statsamp
