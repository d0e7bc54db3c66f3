#include "rcsl/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rcsl {

StateActionTable bellman_apply(const StateActionTable& q_next, const MdpSpec& mdp, int step) {
  if (q_next.n_states != mdp.n_states() || q_next.n_actions != mdp.n_actions()) {
    throw std::invalid_argument("bellman_apply: table dimensions do not match the MDP");
  }
  std::vector<double> best(mdp.n_states());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    double m = q_next.at(s, 0);
    for (ActionId a = 1; a < mdp.n_actions(); ++a) m = std::max(m, q_next.at(s, a));
    best[s] = m;
  }
  auto out = StateActionTable::zeros(mdp.n_states(), mdp.n_actions());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      double future = 0.0;
      for (const auto& o : mdp.outcomes(s, a)) future += o.prob * best[o.state];
      out.at(s, a) = mdp.reward(step, s, a) + future;
    }
  }
  return out;
}

DifferenceArray difference_array(std::span<const double> values, int order) {
  if (order < 0 || static_cast<std::size_t>(order) >= std::max<std::size_t>(values.size(), 1)) {
    throw std::invalid_argument("difference_array: order must be at most length - 1");
  }
  std::vector<double> cur(values.begin(), values.end());
  for (int t = 0; t < order; ++t) {
    for (std::size_t k = 0; k + 1 < cur.size(); ++k) cur[k] = cur[k + 1] - cur[k];
    cur.pop_back();
  }
  return {std::move(cur), order};
}

LowerBoundCertificate relu_lower_bound(std::span<const double> reward_slice, std::string description) {
  if (reward_slice.size() < 3) throw std::invalid_argument("relu_lower_bound: slice needs at least 3 entries");
  double scale = 0.0;
  for (double v : reward_slice) scale = std::max(scale, std::abs(v));
  const double tol = 1e-12 * scale;
  const auto second = difference_array(reward_slice, 2);
  LowerBoundCertificate cert;
  cert.nonzero_count = static_cast<std::size_t>(
      std::count_if(second.values.begin(), second.values.end(), [tol](double d) { return std::abs(d) > tol; }));
  cert.min_hidden_neurons = (cert.nonzero_count + 1) / 2;
  cert.slice_description = std::move(description);
  return cert;
}

std::vector<double> linearq_reward_slice(const LinearQEnv& env) {
  std::vector<double> slice;
  for (StateId s = env.u + 1; s <= 2 * env.u; ++s) slice.push_back(env.mdp.reward(0, s, 0));
  return slice;
}

LowerBoundCertificate linearq_lower_bound(int u) {
  const auto env = build_linearq(u);
  const auto slice = linearq_reward_slice(env);
  return relu_lower_bound(slice, "LinearQ u=" + std::to_string(u) + " r(s, a=0), s in [" +
                                     std::to_string(u + 1) + ", " + std::to_string(2 * u) + "]");
}

CompletenessProbe completeness_probe(const QLearner& learner, const MdpSpec& mdp, int width,
                                     const TrainConfig& config) {
  auto q_hat = StateActionTable::zeros(mdp.n_states(), mdp.n_actions());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const auto q = learner.q_values(s);
    for (ActionId a = 0; a < mdp.n_actions(); ++a) q_hat.at(s, a) = q[a];
  }
  const auto target = bellman_apply(q_hat, mdp);

  RegressionSet set(1, mdp.n_actions());
  std::vector<double> y(mdp.n_actions());
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const double x[1] = {s * learner.state_scale};
    for (ActionId a = 0; a < mdp.n_actions(); ++a) y[a] = target.at(s, a);
    set.add(x, y);
  }
  const auto fit = train_mse(Mlp2::random_init(1, width, mdp.n_actions(), config.seed), set, config);

  CompletenessProbe probe;
  probe.width = width;
  for (StateId s = 0; s < mdp.n_states(); ++s) {
    const double x[1] = {s * learner.state_scale};
    const auto out = fit.net.forward(x);
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      probe.residual_sup_norm = std::max(probe.residual_sup_norm, std::abs(out[a] - target.at(s, a)));
      probe.target_sup_norm = std::max(probe.target_sup_norm, std::abs(target.at(s, a)));
    }
  }
  return probe;
}

}  // namespace rcsl
