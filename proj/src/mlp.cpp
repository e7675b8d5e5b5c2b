#include "statsamp/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "statsamp/rng.hpp"
#include "statsamp/vec.hpp"

namespace statsamp {

void time_features(double c, std::span<double> out) {
  if (out.size() != kTimeFeatureDim)
    throw std::invalid_argument("time_features: output must have length 9");
  out[0] = c;
  double freq = 3.14159265358979323846;
  for (int j = 0; j < 4; ++j) {
    out[1 + 2 * j] = std::sin(freq * c);
    out[2 + 2 * j] = std::cos(freq * c);
    freq *= 2.0;
  }
}

Mlp::Mlp(int x_dim, int hidden, int out_dim, bool time_conditioned)
    : x_dim_(x_dim),
      hidden_(hidden),
      out_dim_(out_dim),
      time_conditioned_(time_conditioned) {
  if (x_dim <= 0 || hidden <= 0 || out_dim <= 0)
    throw std::invalid_argument("mlp: widths must be positive");
  const std::size_t in = input_dim();
  const std::size_t h = hidden;
  const std::size_t o = out_dim;
  off_w1_ = 0;
  off_b1_ = off_w1_ + h * in;
  off_w2_ = off_b1_ + h;
  off_b2_ = off_w2_ + h * h;
  off_w3_ = off_b2_ + h;
  off_b3_ = off_w3_ + o * h;
  params_.assign(off_b3_ + o, 0.0);
}

Mlp Mlp::random_init(int x_dim, int hidden, int out_dim, bool time_conditioned,
                     std::uint64_t seed) {
  Mlp net(x_dim, hidden, out_dim, time_conditioned);
  Rng rng(seed);
  auto fill = [&](std::span<double> w, int fan_in) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& v : w) v = scale * rng.normal();
  };
  fill(net.w1(), net.input_dim());
  fill(net.w2(), hidden);
  fill(net.w3(), hidden);
  return net;
}

void Mlp::assemble_input(std::span<const double> x, double c,
                         std::vector<double>& input) const {
  require_dim(x, x_dim_, "mlp input");
  input.resize(input_dim());
  std::copy(x.begin(), x.end(), input.begin());
  if (time_conditioned_)
    time_features(c, std::span<double>(input.data() + x_dim_, kTimeFeatureDim));
}

namespace {

// out = W x + b, W row-major (rows x cols)
void affine(std::span<const double> w, std::span<const double> b,
            std::span<const double> x, std::span<double> out) {
  const std::size_t rows = b.size();
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double s = b[i];
    const double* wi = w.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) s += wi[j] * x[j];
    out[i] = s;
  }
}

// out = W x (no bias)
void matvec(std::span<const double> w, std::span<const double> x, std::span<double> out) {
  const std::size_t rows = out.size();
  const std::size_t cols = x.size();
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    const double* wi = w.data() + i * cols;
    for (std::size_t j = 0; j < cols; ++j) s += wi[j] * x[j];
    out[i] = s;
  }
}

// out = W^T x
void matvec_t(std::span<const double> w, std::size_t rows, std::size_t cols,
              std::span<const double> x, std::span<double> out) {
  for (std::size_t j = 0; j < cols; ++j) out[j] = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    const double* wi = w.data() + i * cols;
    const double xi = x[i];
    for (std::size_t j = 0; j < cols; ++j) out[j] += wi[j] * xi;
  }
}

// grad += a (outer) b
void outer_accum(std::span<double> grad, std::span<const double> a,
                 std::span<const double> b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    double* gi = grad.data() + i * b.size();
    const double ai = a[i];
    for (std::size_t j = 0; j < b.size(); ++j) gi[j] += ai * b[j];
  }
}

}  // namespace

void Mlp::forward_ws(std::span<const double> x, double c, Workspace& ws) const {
  assemble_input(x, c, ws.input);
  const std::size_t h = hidden_;
  ws.a1.resize(h);
  ws.h1.resize(h);
  ws.d1.resize(h);
  ws.a2.resize(h);
  ws.h2.resize(h);
  ws.d2.resize(h);
  ws.out.resize(out_dim_);

  affine(w1(), b1(), ws.input, ws.a1);
  for (std::size_t i = 0; i < h; ++i) {
    ws.h1[i] = std::tanh(ws.a1[i]);
    ws.d1[i] = 1.0 - ws.h1[i] * ws.h1[i];
  }
  affine(w2(), b2(), ws.h1, ws.a2);
  for (std::size_t i = 0; i < h; ++i) {
    ws.h2[i] = std::tanh(ws.a2[i]);
    ws.d2[i] = 1.0 - ws.h2[i] * ws.h2[i];
  }
  affine(w3(), b3(), ws.h2, ws.out);
}

void Mlp::forward(std::span<const double> x, double c, std::span<double> out) const {
  thread_local Workspace ws;
  forward_ws(x, c, ws);
  require_dim(out, out_dim_, "mlp output");
  std::copy(ws.out.begin(), ws.out.end(), out.begin());
}

void Mlp::backprop_params(const Workspace& ws, std::span<const double> out_adjoint,
                          std::span<double> grad) const {
  if (grad.size() != n_params())
    throw std::invalid_argument("backprop_params: grad size mismatch");
  const std::size_t h = hidden_;
  const std::size_t o = out_dim_;

  // out = W3 h2 + b3
  outer_accum(grad.subspan(off_w3_, o * h), out_adjoint, ws.h2);
  for (std::size_t i = 0; i < o; ++i) grad[off_b3_ + i] += out_adjoint[i];

  std::vector<double> h2_bar(h), a2_bar(h), h1_bar(h), a1_bar(h);
  matvec_t(w3(), o, h, out_adjoint, h2_bar);
  for (std::size_t i = 0; i < h; ++i) a2_bar[i] = h2_bar[i] * ws.d2[i];

  outer_accum(grad.subspan(off_w2_, h * h), a2_bar, ws.h1);
  for (std::size_t i = 0; i < h; ++i) grad[off_b2_ + i] += a2_bar[i];

  matvec_t(w2(), h, h, a2_bar, h1_bar);
  for (std::size_t i = 0; i < h; ++i) a1_bar[i] = h1_bar[i] * ws.d1[i];

  outer_accum(grad.subspan(off_w1_, h * ws.input.size()), a1_bar, ws.input);
  for (std::size_t i = 0; i < h; ++i) grad[off_b1_ + i] += a1_bar[i];
}

void Mlp::jvp_input(std::span<const double> x, double c, std::span<const double> v,
                    std::span<double> out) const {
  require_dim(v, x_dim_, "jvp direction");
  require_dim(out, out_dim_, "jvp output");
  thread_local Workspace ws;
  forward_ws(x, c, ws);

  const std::size_t h = hidden_;
  const std::size_t in = ws.input.size();
  ws.scratch_in.assign(in, 0.0);
  std::copy(v.begin(), v.end(), ws.scratch_in.begin());  // pad: features fixed

  ws.scratch_h.resize(h);
  ws.scratch_h2.resize(h);
  matvec(w1(), ws.scratch_in, ws.scratch_h);
  for (std::size_t i = 0; i < h; ++i) ws.scratch_h[i] *= ws.d1[i];
  matvec(w2(), ws.scratch_h, ws.scratch_h2);
  for (std::size_t i = 0; i < h; ++i) ws.scratch_h2[i] *= ws.d2[i];
  matvec(w3(), ws.scratch_h2, out);
}

void Mlp::vjp_input(std::span<const double> x, double c, std::span<const double> u,
                    std::span<double> out) const {
  require_dim(u, out_dim_, "vjp covector");
  require_dim(out, x_dim_, "vjp output");
  thread_local Workspace ws;
  forward_ws(x, c, ws);

  const std::size_t h = hidden_;
  const std::size_t in = ws.input.size();
  ws.scratch_h.resize(h);
  ws.scratch_h2.resize(h);
  ws.scratch_in.resize(in);

  matvec_t(w3(), out_dim_, h, u, ws.scratch_h);
  for (std::size_t i = 0; i < h; ++i) ws.scratch_h[i] *= ws.d2[i];
  matvec_t(w2(), h, h, ws.scratch_h, ws.scratch_h2);
  for (std::size_t i = 0; i < h; ++i) ws.scratch_h2[i] *= ws.d1[i];
  matvec_t(w1(), h, in, ws.scratch_h2, ws.scratch_in);
  std::copy(ws.scratch_in.begin(), ws.scratch_in.begin() + x_dim_, out.begin());
}

namespace {
constexpr char kMagic[8] = {'S', 'T', 'S', 'M', 'L', 'P', '0', '1'};

void put_u32(std::ofstream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::ifstream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void put_f64(std::ofstream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::ifstream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}
}  // namespace

void Mlp::save(const std::string& path, ModelKind kind) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("mlp save: cannot open " + path);
  os.write(kMagic, 8);
  put_u32(os, static_cast<std::uint32_t>(kind));
  put_u32(os, static_cast<std::uint32_t>(x_dim_));
  put_u32(os, static_cast<std::uint32_t>(hidden_));
  put_u32(os, static_cast<std::uint32_t>(out_dim_));
  put_u32(os, time_conditioned_ ? 1u : 0u);
  put_u32(os, static_cast<std::uint32_t>(n_params()));
  for (double v : params_) put_f64(os, v);
  if (!os.good()) throw std::runtime_error("mlp save: write failed: " + path);
}

LoadedMlp load_mlp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("mlp load: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is.good() || std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error("mlp load: bad magic in " + path);
  const std::uint32_t kind = get_u32(is);
  const std::uint32_t x_dim = get_u32(is);
  const std::uint32_t hidden = get_u32(is);
  const std::uint32_t out_dim = get_u32(is);
  const std::uint32_t conditioned = get_u32(is);
  const std::uint32_t n_params = get_u32(is);
  if (kind > 2) throw std::runtime_error("mlp load: unknown model kind");

  Mlp net(static_cast<int>(x_dim), static_cast<int>(hidden), static_cast<int>(out_dim),
          conditioned != 0);
  if (net.n_params() != n_params)
    throw std::runtime_error("mlp load: parameter count mismatch in " + path);
  std::span<double> params = net.params();
  for (double& v : params) v = get_f64(is);
  if (!is.good()) throw std::runtime_error("mlp load: truncated file " + path);
  return LoadedMlp{std::move(net), static_cast<ModelKind>(kind)};
}

}  // namespace statsamp
