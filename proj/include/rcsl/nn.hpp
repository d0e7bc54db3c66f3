#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace rcsl {

/// Two-layer perceptron: forward(x) = w2 * ReLU(w1 * x + b1) + b2.
/// Matrices are row-major: w1 is [width x in_dim], w2 is [out_dim x width].
struct Mlp2 {
  int in_dim = 0;
  int width = 0;
  int out_dim = 0;
  std::vector<double> w1;
  std::vector<double> b1;
  std::vector<double> w2;
  std::vector<double> b2;

  static Mlp2 zeros(int in_dim, int width, int out_dim);
  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Mlp2 random_init(int in_dim, int width, int out_dim, std::uint64_t seed);

  double& w1_at(int unit, int input) { return w1[static_cast<std::size_t>(unit) * in_dim + input]; }
  double& w2_at(int output, int unit) { return w2[static_cast<std::size_t>(output) * width + unit]; }

  /// Throws std::invalid_argument on an input of the wrong dimension.
  std::vector<double> forward(std::span<const double> x) const;
  bool all_finite() const;
  std::size_t parameter_count() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

  std::array<std::span<double>, 4> tensors() { return {w1, b1, w2, b2}; }
  std::array<std::span<const double>, 4> tensors() const { return {w1, b1, w2, b2}; }

  bool operator==(const Mlp2&) const = default;
};

enum class Optimizer { Sgd, Adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 64;
  int epochs = 300;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::Adam;

  void validate() const;
};

/// Regression samples. A sample with output_index >= 0 only regresses that
/// output component; -1 regresses the full output vector.
struct RegressionSet {
  int in_dim = 0;
  int out_dim = 0;
  std::vector<double> inputs;
  std::vector<double> targets;
  std::vector<int> output_index;

  RegressionSet() = default;
  RegressionSet(int in_dim, int out_dim) : in_dim(in_dim), out_dim(out_dim) {}

  void add(std::span<const double> x, std::span<const double> y, int output = -1);
  std::size_t size() const { return output_index.size(); }
  std::span<const double> x(std::size_t i) const {
    return std::span<const double>(inputs).subspan(i * in_dim, in_dim);
  }
  std::span<const double> y(std::size_t i) const {
    return std::span<const double>(targets).subspan(i * out_dim, out_dim);
  }
};

/// Mean over samples of the summed squared error on regressed outputs.
double mse_loss(const Mlp2& net, const RegressionSet& data);

/// Gradient of mse_loss restricted to `indices` (all samples when empty),
/// returned in the shape of the network.
Mlp2 mse_gradient(const Mlp2& net, const RegressionSet& data, std::span<const std::size_t> indices = {});

/// Stateful minibatch trainer so callers can change targets between epochs
/// while the optimizer moments persist.
class MseTrainer {
public:
  MseTrainer(Mlp2 net, TrainConfig config);

  /// One shuffled pass over `data`; returns the mean per-sample loss seen
  /// during the pass. Throws TrainingDiverged on NaN/Inf.
  double run_epoch(const RegressionSet& data);

  const Mlp2& net() const { return net_; }
  int epochs_done() const { return epoch_; }

private:
  void apply_update(const Mlp2& grad);

  Mlp2 net_;
  TrainConfig config_;
  Mlp2 first_moment_;
  Mlp2 second_moment_;
  std::uint64_t steps_ = 0;
  int epoch_ = 0;
  std::vector<std::size_t> order_;
};

struct TrainResult {
  Mlp2 net;
  std::vector<double> loss_curve;
};

TrainResult train_mse(Mlp2 net, const RegressionSet& data, const TrainConfig& config);

/// Sixteen hidden units over input (s, g / k) whose output thresholded at
/// 0.5 picks the sub-optimal LinearQ action exactly at g = Q*(s, 1 - pi*(s)).
/// Errs on the LinearQ dataset only where a context carries both labels.
Mlp2 build_analytic_rcsl_policy(int u);

/// Two hidden units over input (s, a) computing the LinearQ optimal Q.
Mlp2 build_analytic_q_network(int u);

}  // namespace rcsl
