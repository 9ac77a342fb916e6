#ifndef FRUGAL_NEURAL_HPP
#define FRUGAL_NEURAL_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "frugal/rng.hpp"

namespace frugal {

enum class Activation { relu, tanh };
enum class LossKind { mse, huber };
enum class ParamRole { online, target };

/// Feed-forward net shape: layer_sizes = {input, hidden..., output}, hidden
/// activation relu or tanh, linear output.
struct MLPSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::relu;
};

bool operator==(const MLPSpec& a, const MLPSpec& b);

/// Flat parameter vector: per layer, the out-by-in weight matrix (row major)
/// followed by the bias vector. 64-bit floats throughout.
struct ParamSet {
  MLPSpec spec;
  std::vector<double> values;
  ParamRole role = ParamRole::online;
};

struct GradientSet {
  std::vector<double> values;
};

std::size_t param_count(const MLPSpec& spec);

/// Fan-in-scaled uniform init (He-style for relu, Xavier for tanh), zero biases.
ParamSet init_params(const MLPSpec& spec, Rng& rng, ParamRole role = ParamRole::online);
ParamSet zero_params(const MLPSpec& spec, ParamRole role = ParamRole::online);

/// Deterministic forward pass; returns the linear output layer.
std::vector<double> forward(const ParamSet& p, std::span<const double> x);

struct Batch {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  std::vector<double> weights;  // per-sample, >= 0
};

/// Loss over a batch: mean over samples of w_b * sum_o loss(y_o - t_o), with
/// loss(e) = e^2 for mse (gradient 2e) and the delta-capped quadratic for
/// huber (gradient clamped to [-delta, delta]).
struct LossConfig {
  LossKind kind = LossKind::mse;
  double huber_delta = 1.0;
};

/// Gradient of the weighted mean loss wrt all parameters; returns the loss.
/// grad is resized and overwritten.
double backward(const ParamSet& p, const Batch& batch, GradientSet& grad,
                const LossConfig& loss = {});

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;
};

void adam_step(ParamSet& p, const GradientSet& g, AdamState& state, const AdamConfig& cfg);
void sgd_step(ParamSet& p, const GradientSet& g, double lr);

/// target becomes bitwise equal to online (deep copy; shapes must match).
void copy_into_target(const ParamSet& online, ParamSet& target);

// --- checkpoint serialization ---------------------------------------------
//
// Flat binary layout, all integers and floats little-endian:
//   magic "FRGLNET1" (8 bytes), u32 version (=1)
//   u32 meta count, then per entry: u32 key length, key bytes,
//                                   u32 value length, value bytes
//   u32 net count, then per net: u32 name length, name bytes,
//                                u32 layer count, u32 layer sizes,
//                                u8 activation (0 relu, 1 tanh),
//                                u64 value count, f64 values in layer order.

struct NamedParams {
  std::string name;
  ParamSet params;
};

struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<NamedParams> nets;
};

void write_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint read_checkpoint(const std::string& path);

}  // namespace frugal

#endif  // FRUGAL_NEURAL_HPP
