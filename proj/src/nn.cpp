#include "rcsl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rcsl/errors.hpp"
#include "rcsl/rng.hpp"

namespace rcsl {
namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

// Stream offsets keep the initializer and the shuffler on disjoint streams.
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5A5A0000;

struct Workspace {
  std::vector<double> pre;
  std::vector<double> hidden;
  std::vector<double> out;
  std::vector<double> d_out;
  std::vector<double> d_hidden;

  explicit Workspace(const Mlp2& net)
      : pre(net.width), hidden(net.width), out(net.out_dim), d_out(net.out_dim), d_hidden(net.width) {}
};

void forward_into(const Mlp2& net, std::span<const double> x, Workspace& ws) {
  for (int j = 0; j < net.width; ++j) {
    const double* row = &net.w1[static_cast<std::size_t>(j) * net.in_dim];
    double z = net.b1[j];
    for (int i = 0; i < net.in_dim; ++i) z += row[i] * x[i];
    ws.pre[j] = z;
    ws.hidden[j] = z > 0.0 ? z : 0.0;
  }
  for (int o = 0; o < net.out_dim; ++o) {
    const double* row = &net.w2[static_cast<std::size_t>(o) * net.width];
    double y = net.b2[o];
    for (int j = 0; j < net.width; ++j) y += row[j] * ws.hidden[j];
    ws.out[o] = y;
  }
}

// Squared error of one sample; when `grad` is set, adds `scale` times the
// sample gradient into it. ReLU'(0) is taken as 0.
double sample_loss(const Mlp2& net, std::span<const double> x, std::span<const double> y, int output,
                   Workspace& ws, Mlp2* grad, double scale) {
  forward_into(net, x, ws);
  double loss = 0.0;
  for (int o = 0; o < net.out_dim; ++o) {
    const bool active = output < 0 || output == o;
    const double e = active ? ws.out[o] - y[o] : 0.0;
    loss += e * e;
    ws.d_out[o] = 2.0 * e * scale;
  }
  if (grad == nullptr) return loss;

  std::fill(ws.d_hidden.begin(), ws.d_hidden.end(), 0.0);
  for (int o = 0; o < net.out_dim; ++o) {
    const double d = ws.d_out[o];
    if (d == 0.0) continue;
    grad->b2[o] += d;
    double* grow = &grad->w2[static_cast<std::size_t>(o) * net.width];
    const double* wrow = &net.w2[static_cast<std::size_t>(o) * net.width];
    for (int j = 0; j < net.width; ++j) {
      grow[j] += d * ws.hidden[j];
      ws.d_hidden[j] += d * wrow[j];
    }
  }
  for (int j = 0; j < net.width; ++j) {
    if (ws.pre[j] <= 0.0) continue;
    const double dz = ws.d_hidden[j];
    grad->b1[j] += dz;
    double* grow = &grad->w1[static_cast<std::size_t>(j) * net.in_dim];
    for (int i = 0; i < net.in_dim; ++i) grow[i] += dz * x[i];
  }
  return loss;
}

void check_shapes(const Mlp2& net, const RegressionSet& data) {
  if (net.in_dim != data.in_dim || net.out_dim != data.out_dim) {
    throw std::invalid_argument("regression data dimensions do not match the network");
  }
}

}  // namespace

Mlp2 Mlp2::zeros(int in_dim, int width, int out_dim) {
  if (in_dim < 1 || width < 1 || out_dim < 1) throw std::invalid_argument("Mlp2: dimensions must be positive");
  Mlp2 net;
  net.in_dim = in_dim;
  net.width = width;
  net.out_dim = out_dim;
  net.w1.assign(static_cast<std::size_t>(width) * in_dim, 0.0);
  net.b1.assign(width, 0.0);
  net.w2.assign(static_cast<std::size_t>(out_dim) * width, 0.0);
  net.b2.assign(out_dim, 0.0);
  return net;
}

Mlp2 Mlp2::random_init(int in_dim, int width, int out_dim, std::uint64_t seed) {
  Mlp2 net = zeros(in_dim, width, out_dim);
  CounterRng rng(seed, kInitStream);
  auto fill = [&rng](std::vector<double>& v, int fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * bound;
  };
  fill(net.w1, in_dim);
  fill(net.b1, in_dim);
  fill(net.w2, width);
  fill(net.b2, width);
  return net;
}

std::vector<double> Mlp2::forward(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim) {
    throw std::invalid_argument("Mlp2::forward: expected input of dimension " + std::to_string(in_dim) +
                                ", got " + std::to_string(x.size()));
  }
  Workspace ws(*this);
  forward_into(*this, x, ws);
  return ws.out;
}

bool Mlp2::all_finite() const {
  for (auto t : tensors()) {
    for (double v : t) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate must be positive");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
}

void RegressionSet::add(std::span<const double> xv, std::span<const double> yv, int output) {
  if (static_cast<int>(xv.size()) != in_dim || static_cast<int>(yv.size()) != out_dim) {
    throw std::invalid_argument("RegressionSet::add: sample dimensions do not match");
  }
  if (output >= out_dim) throw std::invalid_argument("RegressionSet::add: output index out of range");
  inputs.insert(inputs.end(), xv.begin(), xv.end());
  targets.insert(targets.end(), yv.begin(), yv.end());
  output_index.push_back(output);
}

double mse_loss(const Mlp2& net, const RegressionSet& data) {
  check_shapes(net, data);
  if (data.size() == 0) return 0.0;
  Workspace ws(net);
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    total += sample_loss(net, data.x(i), data.y(i), data.output_index[i], ws, nullptr, 0.0);
  }
  return total / static_cast<double>(data.size());
}

Mlp2 mse_gradient(const Mlp2& net, const RegressionSet& data, std::span<const std::size_t> indices) {
  check_shapes(net, data);
  Mlp2 grad = Mlp2::zeros(net.in_dim, net.width, net.out_dim);
  std::vector<std::size_t> all;
  if (indices.empty()) {
    all.resize(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    indices = all;
  }
  if (indices.empty()) return grad;
  Workspace ws(net);
  const double scale = 1.0 / static_cast<double>(indices.size());
  for (std::size_t i : indices) sample_loss(net, data.x(i), data.y(i), data.output_index[i], ws, &grad, scale);
  return grad;
}

// ---------------------------------------------------------------------------
// Trainer

MseTrainer::MseTrainer(Mlp2 net, TrainConfig config)
    : net_(std::move(net)),
      config_(config),
      first_moment_(Mlp2::zeros(net_.in_dim, net_.width, net_.out_dim)),
      second_moment_(first_moment_) {
  config_.validate();
}

void MseTrainer::apply_update(const Mlp2& grad) {
  ++steps_;
  auto params = net_.tensors();
  auto grads = grad.tensors();
  if (config_.optimizer == Optimizer::Sgd) {
    for (std::size_t t = 0; t < params.size(); ++t) {
      for (std::size_t i = 0; i < params[t].size(); ++i) params[t][i] -= config_.learning_rate * grads[t][i];
    }
    return;
  }
  auto m = first_moment_.tensors();
  auto v = second_moment_.tensors();
  const double c1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(steps_));
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t i = 0; i < params[t].size(); ++i) {
      const double g = grads[t][i];
      m[t][i] = kAdamBeta1 * m[t][i] + (1.0 - kAdamBeta1) * g;
      v[t][i] = kAdamBeta2 * v[t][i] + (1.0 - kAdamBeta2) * g * g;
      const double m_hat = m[t][i] / c1;
      const double v_hat = v[t][i] / c2;
      params[t][i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + kAdamEps);
    }
  }
}

double MseTrainer::run_epoch(const RegressionSet& data) {
  check_shapes(net_, data);
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("MseTrainer::run_epoch: empty data");
  if (order_.size() != n) {
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
  }
  CounterRng rng(config_.seed, kShuffleStream + static_cast<std::uint64_t>(epoch_));
  for (std::size_t i = n; i > 1; --i) std::swap(order_[i - 1], order_[rng.below(i)]);

  Workspace ws(net_);
  Mlp2 grad = Mlp2::zeros(net_.in_dim, net_.width, net_.out_dim);
  double epoch_loss = 0.0;
  const auto batch = static_cast<std::size_t>(config_.batch_size);
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    for (auto tensor : grad.tensors()) std::fill(tensor.begin(), tensor.end(), 0.0);
    const double scale = 1.0 / static_cast<double>(end - start);
    for (std::size_t p = start; p < end; ++p) {
      const std::size_t i = order_[p];
      epoch_loss += sample_loss(net_, data.x(i), data.y(i), data.output_index[i], ws, &grad, scale);
    }
    apply_update(grad);
  }
  ++epoch_;
  epoch_loss /= static_cast<double>(n);
  if (!std::isfinite(epoch_loss) || !net_.all_finite()) {
    throw TrainingDiverged("training diverged at epoch " + std::to_string(epoch_) +
                           " (loss=" + std::to_string(epoch_loss) + ")");
  }
  return epoch_loss;
}

TrainResult train_mse(Mlp2 net, const RegressionSet& data, const TrainConfig& config) {
  if (data.size() == 0) throw std::invalid_argument("train_mse: empty data");
  MseTrainer trainer(std::move(net), config);
  TrainResult result;
  result.loss_curve.reserve(config.epochs);
  for (int e = 0; e < config.epochs; ++e) result.loss_curve.push_back(trainer.run_epoch(data));
  result.net = trainer.net();
  return result;
}

// ---------------------------------------------------------------------------
// Analytic constructions

namespace {

// Appends the integer-domain equality indicator 1[w.x + c0 == 0] scaled by
// `coef` as four hidden units; returns the constant it contributes.
double add_equality_indicator(Mlp2& net, int& unit, double ws, double wg, double c0, double coef) {
  // With t = ws*s + wg*g + c0 integer-valued:
  // 1[t == 0] = -ReLU(-t) + ReLU(-t + 1) - ReLU(t) + ReLU(t + 1) - 1.
  const double sign[4] = {-1.0, -1.0, 1.0, 1.0};
  const double shift[4] = {0.0, 1.0, 0.0, 1.0};
  const double out[4] = {-1.0, 1.0, -1.0, 1.0};
  for (int i = 0; i < 4; ++i, ++unit) {
    net.w1_at(unit, 0) = sign[i] * ws;
    net.w1_at(unit, 1) = sign[i] * wg;
    net.b1[unit] = sign[i] * c0 + shift[i];
    net.w2_at(0, unit) = coef * out[i];
  }
  return -coef;
}

}  // namespace

Mlp2 build_analytic_rcsl_policy(int u) {
  if (u < 1) throw std::invalid_argument("build_analytic_rcsl_policy: u must be >= 1");
  Mlp2 net = Mlp2::zeros(2, 16, 1);
  int unit = 0;
  double bias = 1.0;
  // Half-integer sums are doubled so that every indicator argument is an integer.
  bias += add_equality_indicator(net, unit, 2.0, 2.0, -(6.0 * u + 3.0), 1.0);   // 1[g+s = 3u+1.5]
  // Q*(s, 0) = 2(2u+1-s) in units of k, so a 0-label shows up as g + 2s = 4u+2.
  bias += add_equality_indicator(net, unit, 4.0, 2.0, -(8.0 * u + 4.0), -1.0);  // 1[g+2s = 4u+2]
  bias += add_equality_indicator(net, unit, 0.0, 2.0, 0.0, -2.0);               // 1[g = 0]
  // 1[s <= u] = -ReLU(-s + u) + ReLU(-s + u + 1) needs two units; the last
  // two of its four-unit block stay at zero.
  net.w1_at(unit, 0) = -1.0;
  net.b1[unit] = u;
  net.w2_at(0, unit) = 1.0;
  ++unit;
  net.w1_at(unit, 0) = -1.0;
  net.b1[unit] = u + 1.0;
  net.w2_at(0, unit) = -1.0;
  net.b2[0] = bias;
  return net;
}

Mlp2 build_analytic_q_network(int u) {
  if (u < 1) throw std::invalid_argument("build_analytic_q_network: u must be >= 1");
  const double k = 1.0 / (3.0 * u + 1.0);
  Mlp2 net = Mlp2::zeros(2, 2, 1);
  // 2k * ReLU(-s - (2u+1)a + 2u+1)
  net.w1_at(0, 0) = -1.0;
  net.w1_at(0, 1) = -(2.0 * u + 1.0);
  net.b1[0] = 2.0 * u + 1.0;
  net.w2_at(0, 0) = 2.0 * k;
  // k * ReLU(-s + (3u+1.5)a)
  net.w1_at(1, 0) = -1.0;
  net.w1_at(1, 1) = 3.0 * u + 1.5;
  net.b1[1] = 0.0;
  net.w2_at(0, 1) = k;
  return net;
}

}  // namespace rcsl
