#include "frugal/neural.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace frugal {

bool operator==(const MLPSpec& a, const MLPSpec& b) {
  return a.layer_sizes == b.layer_sizes && a.activation == b.activation;
}

namespace {

void check_spec(const MLPSpec& spec) {
  if (spec.layer_sizes.size() < 2)
    throw std::invalid_argument("MLPSpec: need at least input and output sizes");
  for (int s : spec.layer_sizes)
    if (s <= 0) throw std::invalid_argument("MLPSpec: layer sizes must be positive");
}

double activate(double z, Activation a) {
  return a == Activation::relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

// derivative expressed through the post-activation value
double activate_deriv(double y, Activation a) {
  return a == Activation::relu ? (y > 0.0 ? 1.0 : 0.0) : 1.0 - y * y;
}

struct Scratch {
  std::vector<std::vector<double>> acts;    // post-activations per layer, acts[0] = input
  std::vector<double> delta, delta_prev;
};

thread_local Scratch tls_scratch;

// Forward pass writing post-activations into scratch; returns nothing, the
// output layer lives in scratch.acts.back().
void forward_trace(const ParamSet& p, std::span<const double> x, Scratch& s) {
  const auto& sizes = p.spec.layer_sizes;
  const size_t n_layers = sizes.size() - 1;
  if (x.size() != static_cast<size_t>(sizes.front()))
    throw std::invalid_argument("forward: input size mismatch");
  if (p.values.size() != param_count(p.spec))
    throw std::invalid_argument("forward: parameter vector size mismatch");

  s.acts.resize(sizes.size());
  s.acts[0].assign(x.begin(), x.end());

  const double* w = p.values.data();
  for (size_t l = 0; l < n_layers; ++l) {
    const int in = sizes[l];
    const int out = sizes[l + 1];
    const double* weights = w;
    const double* bias = w + static_cast<size_t>(in) * out;
    w = bias + out;

    auto& src = s.acts[l];
    auto& dst = s.acts[l + 1];
    dst.resize(out);
    const bool last = l + 1 == n_layers;
    for (int i = 0; i < out; ++i) {
      const double* row = weights + static_cast<size_t>(i) * in;
      double z = bias[i];
      for (int j = 0; j < in; ++j) z += row[j] * src[j];
      dst[i] = last ? z : activate(z, p.spec.activation);
    }
  }
}

}  // namespace

std::size_t param_count(const MLPSpec& spec) {
  check_spec(spec);
  std::size_t n = 0;
  for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l)
    n += static_cast<std::size_t>(spec.layer_sizes[l]) * spec.layer_sizes[l + 1] +
         spec.layer_sizes[l + 1];
  return n;
}

ParamSet init_params(const MLPSpec& spec, Rng& rng, ParamRole role) {
  check_spec(spec);
  ParamSet p;
  p.spec = spec;
  p.role = role;
  p.values.resize(param_count(spec));
  double* w = p.values.data();
  for (size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const int in = spec.layer_sizes[l];
    const int out = spec.layer_sizes[l + 1];
    const double bound = spec.activation == Activation::relu
                             ? std::sqrt(6.0 / in)
                             : std::sqrt(6.0 / (in + out));
    for (int i = 0; i < in * out; ++i) *w++ = rng.uniform(-bound, bound);
    for (int i = 0; i < out; ++i) *w++ = 0.0;  // biases
  }
  return p;
}

ParamSet zero_params(const MLPSpec& spec, ParamRole role) {
  check_spec(spec);
  ParamSet p;
  p.spec = spec;
  p.role = role;
  p.values.assign(param_count(spec), 0.0);
  return p;
}

std::vector<double> forward(const ParamSet& p, std::span<const double> x) {
  Scratch& s = tls_scratch;
  forward_trace(p, x, s);
  return s.acts.back();
}

double backward(const ParamSet& p, const Batch& batch, GradientSet& grad,
                const LossConfig& loss) {
  const auto& sizes = p.spec.layer_sizes;
  const size_t n_layers = sizes.size() - 1;
  const size_t n = batch.inputs.size();
  if (n == 0) throw std::invalid_argument("backward: empty batch");
  if (batch.targets.size() != n || batch.weights.size() != n)
    throw std::invalid_argument("backward: batch field sizes disagree");

  grad.values.assign(param_count(p.spec), 0.0);
  double total_loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  Scratch& s = tls_scratch;
  for (size_t b = 0; b < n; ++b) {
    const auto& x = batch.inputs[b];
    const auto& t = batch.targets[b];
    const double wb = batch.weights[b];
    if (wb < 0.0) throw std::invalid_argument("backward: negative sample weight");
    if (t.size() != static_cast<size_t>(sizes.back()))
      throw std::invalid_argument("backward: target size mismatch");
    for (double v : x)
      if (!std::isfinite(v)) throw std::invalid_argument("backward: non-finite input");
    for (double v : t)
      if (!std::isfinite(v)) throw std::invalid_argument("backward: non-finite target");

    forward_trace(p, x, s);

    // output-layer error under the configured loss
    const auto& y = s.acts.back();
    const double scale = wb * inv_n;
    s.delta.resize(y.size());
    for (size_t o = 0; o < y.size(); ++o) {
      const double e = y[o] - t[o];
      if (loss.kind == LossKind::mse) {
        total_loss += scale * e * e;
        s.delta[o] = scale * 2.0 * e;
      } else {
        const double d = loss.huber_delta;
        const double ae = std::fabs(e);
        total_loss += scale * (ae <= d ? 0.5 * e * e : d * (ae - 0.5 * d));
        s.delta[o] = scale * (e > d ? d : (e < -d ? -d : e));
      }
    }

    // walk layers backwards accumulating gradients
    size_t tail = grad.values.size();
    for (size_t l = n_layers; l-- > 0;) {
      const int in = sizes[l];
      const int out = sizes[l + 1];
      tail -= static_cast<size_t>(in) * out + out;
      double* gw = grad.values.data() + tail;
      double* gb = gw + static_cast<size_t>(in) * out;
      const double* weights = p.values.data() + tail;
      const auto& src = s.acts[l];

      for (int i = 0; i < out; ++i) {
        const double d = s.delta[i];
        double* grow = gw + static_cast<size_t>(i) * in;
        for (int j = 0; j < in; ++j) grow[j] += d * src[j];
        gb[i] += d;
      }
      if (l > 0) {
        s.delta_prev.assign(in, 0.0);
        for (int i = 0; i < out; ++i) {
          const double d = s.delta[i];
          const double* row = weights + static_cast<size_t>(i) * in;
          for (int j = 0; j < in; ++j) s.delta_prev[j] += row[j] * d;
        }
        for (int j = 0; j < in; ++j)
          s.delta_prev[j] *= activate_deriv(src[j], p.spec.activation);
        std::swap(s.delta, s.delta_prev);
      }
    }
  }
  return total_loss;
}

void adam_step(ParamSet& p, const GradientSet& g, AdamState& state, const AdamConfig& cfg) {
  const size_t n = p.values.size();
  if (g.values.size() != n) throw std::invalid_argument("adam_step: gradient shape mismatch");
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
    state.t = 0;
  }
  if (state.m.size() != n) throw std::invalid_argument("adam_step: state shape mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g.values[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g.values[i] * g.values[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    p.values[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void sgd_step(ParamSet& p, const GradientSet& g, double lr) {
  if (g.values.size() != p.values.size())
    throw std::invalid_argument("sgd_step: gradient shape mismatch");
  for (size_t i = 0; i < p.values.size(); ++i) p.values[i] -= lr * g.values[i];
}

void copy_into_target(const ParamSet& online, ParamSet& target) {
  if (!(online.spec == target.spec))
    throw std::invalid_argument("copy_into_target: spec mismatch");
  target.values = online.values;
}

// --- checkpoint serialization ----------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double d) { put_u64(out, std::bit_cast<std::uint64_t>(d)); }

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  void need(size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

constexpr char kMagic[] = "FRGLNET1";

}  // namespace

void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::string out;
  out.append(kMagic, 8);
  put_u32(out, 1);
  put_u32(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_u32(out, static_cast<std::uint32_t>(k.size()));
    out.append(k);
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    out.append(v);
  }
  put_u32(out, static_cast<std::uint32_t>(ckpt.nets.size()));
  for (const auto& net : ckpt.nets) {
    put_u32(out, static_cast<std::uint32_t>(net.name.size()));
    out.append(net.name);
    put_u32(out, static_cast<std::uint32_t>(net.params.spec.layer_sizes.size()));
    for (int s : net.params.spec.layer_sizes) put_u32(out, static_cast<std::uint32_t>(s));
    out.push_back(net.params.spec.activation == Activation::relu ? 0 : 1);
    put_u64(out, net.params.values.size());
    for (double d : net.params.values) put_f64(out, d);
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  Reader r{buf};
  if (r.str(8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (r.u32() != 1) throw std::runtime_error("checkpoint: unsupported version");

  Checkpoint ckpt;
  const std::uint32_t n_meta = r.u32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.str(r.u32());
    std::string v = r.str(r.u32());
    ckpt.meta.emplace(std::move(k), std::move(v));
  }
  const std::uint32_t n_nets = r.u32();
  for (std::uint32_t i = 0; i < n_nets; ++i) {
    NamedParams net;
    net.name = r.str(r.u32());
    const std::uint32_t n_sizes = r.u32();
    net.params.spec.layer_sizes.resize(n_sizes);
    for (auto& s : net.params.spec.layer_sizes) s = static_cast<int>(r.u32());
    r.need(1);
    net.params.spec.activation = buf[r.pos++] == 0 ? Activation::relu : Activation::tanh;
    const std::uint64_t n_vals = r.u64();
    if (n_vals != param_count(net.params.spec))
      throw std::runtime_error("checkpoint: value count does not match spec");
    net.params.values.resize(n_vals);
    for (auto& d : net.params.values) d = r.f64();
    ckpt.nets.push_back(std::move(net));
  }
  return ckpt;
}

}  // namespace frugal
