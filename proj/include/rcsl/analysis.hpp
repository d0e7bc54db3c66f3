#pragma once

#include <span>
#include <string>
#include <vector>

#include "rcsl/environments.hpp"
#include "rcsl/learners.hpp"
#include "rcsl/mdp.hpp"
#include "rcsl/nn.hpp"

namespace rcsl {

/// Dense table over (state, action).
struct StateActionTable {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> values;

  static StateActionTable zeros(int n_states, int n_actions) {
    return {n_states, n_actions, std::vector<double>(static_cast<std::size_t>(n_states) * n_actions, 0.0)};
  }
  double& at(StateId s, ActionId a) { return values[static_cast<std::size_t>(s) * n_actions + a]; }
  double at(StateId s, ActionId a) const { return values[static_cast<std::size_t>(s) * n_actions + a]; }
};

/// (BQ)(s,a) = r_step(s,a) + sum_s' T(s'|s,a) max_a' Q(s',a').
StateActionTable bellman_apply(const StateActionTable& q_next, const MdpSpec& mdp, int step = 0);

struct DifferenceArray {
  std::vector<double> values;
  int order = 0;
};

/// Order-t forward differences; the result has values.size() - t entries.
DifferenceArray difference_array(std::span<const double> values, int order);

struct LowerBoundCertificate {
  std::size_t nonzero_count = 0;
  std::size_t min_hidden_neurons = 0;
  std::string slice_description;
};

/// Each hidden ReLU unit contributes at most two nonzero second differences
/// on an integer grid, so a network matching the slice needs at least
/// ceil(nonzero / 2) units. Entries count as nonzero above
/// 1e-12 * max|slice|.
LowerBoundCertificate relu_lower_bound(std::span<const double> reward_slice, std::string description = {});

/// r(s, a=0) for s in [u+1, 2u].
std::vector<double> linearq_reward_slice(const LinearQEnv& env);

LowerBoundCertificate linearq_lower_bound(int u);

/// Diagnostic only, not a certificate: fits a width-w network to the Bellman
/// image of a trained Q network and reports the worst residual over the
/// table.
struct CompletenessProbe {
  int width = 0;
  double residual_sup_norm = 0.0;
  double target_sup_norm = 0.0;
};

CompletenessProbe completeness_probe(const QLearner& learner, const MdpSpec& mdp, int width,
                                     const TrainConfig& config);

}  // namespace rcsl
