#pragma once

#include <functional>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rcsl/mdp.hpp"
#include "rcsl/nn.hpp"

namespace rcsl {

// ---------------------------------------------------------------------------
// MLP-RCSL

/// Network input is (s * state_scale, g * rtg_scale).
struct RcslInputScaling {
  double state_scale = 1.0;
  double rtg_scale = 1.0;
};

/// Scalar-output policy network; the output is projected onto the nearest
/// action code 0..n_actions-1 (halves round up), so act() is total.
class RcslMlpPolicy : public MarkovianRcPolicy {
public:
  RcslMlpPolicy(Mlp2 net, int n_actions, RcslInputScaling scaling);

  int n_actions() const override { return n_actions_; }
  std::vector<double> act_markov(StateId s, double rtg) const override;

  double raw_output(StateId s, double rtg) const;
  ActionId action(StateId s, double rtg) const;
  const Mlp2& net() const { return net_; }
  const RcslInputScaling& scaling() const { return scaling_; }

private:
  Mlp2 net_;
  int n_actions_;
  RcslInputScaling scaling_;
};

/// Projection onto action codes 0..n_actions-1.
ActionId project_action(double output, int n_actions);

struct RcslTrainSpec {
  int n_actions = 2;
  int width = 16;
  RcslInputScaling scaling;
};

struct RcslTrainResult {
  RcslMlpPolicy policy;
  std::vector<double> loss_curve;
};

/// Regression set of ((s, g) scaled, action code) pairs.
RegressionSet rcsl_regression_set(const RtgDataset& dataset, const RcslInputScaling& scaling);

/// Minimizes mean (pi(s, g) - a)^2 over the triples from a fresh network.
RcslTrainResult train_mlp_rcsl(const RtgDataset& dataset, const RcslTrainSpec& spec,
                               const TrainConfig& config);

/// Same objective, starting from an existing policy network.
RcslTrainResult train_mlp_rcsl(const RtgDataset& dataset, const RcslMlpPolicy& initial,
                               const TrainConfig& config);

// ---------------------------------------------------------------------------
// Fitted Q-learning with a target network

struct QLearnerOptions {
  int width = 16;
  int target_update_epochs = 10;
  double state_scale = 1.0;
  /// Called after each epoch with (epochs completed, q_net, target_net).
  std::function<void(int, const Mlp2&, const Mlp2&)> on_epoch;
};

struct QLearner {
  Mlp2 q_net;
  Mlp2 target_net;
  int n_states = 0;
  int n_actions = 0;
  double state_scale = 1.0;
  int target_update_epochs = 10;
  int train_epochs = 300;
  std::vector<double> loss_curve;

  std::vector<double> q_values(StateId s) const;
  /// argmax with ties to the lowest action index.
  ActionId greedy_action(StateId s) const;
  /// Stationary greedy policy over `horizon` steps.
  MarkovPolicy greedy_policy(int horizon) const;
};

/// Regression targets r + max_a' Q_target(s', a'), and r alone on the final
/// step. The target network is resynced every target_update_epochs epochs;
/// config.epochs sets the total.
QLearner train_q_learning(std::span<const Trajectory> dataset, int n_states, int n_actions,
                          const TrainConfig& config, const QLearnerOptions& options);

// ---------------------------------------------------------------------------
// Tabular maximum-likelihood models

struct DynamicsOutcome {
  StateId next_state;
  double reward;
  std::size_t count;
  double prob;
};

class TabularDynamics {
public:
  using Key = std::pair<StateId, ActionId>;

  bool has(StateId s, ActionId a) const { return table_.contains({s, a}); }
  /// Throws UnmodeledState when (s, a) never occurred in the data.
  std::span<const DynamicsOutcome> outcomes(StateId s, ActionId a) const;
  const std::map<Key, std::vector<DynamicsOutcome>>& table() const { return table_; }

  /// Counts one observed transition. Call normalize() before querying.
  void record(StateId s, ActionId a, StateId next, double reward);
  void normalize();

private:
  std::map<Key, std::vector<DynamicsOutcome>> table_;
};

class TabularBehavior {
public:
  explicit TabularBehavior(int n_actions = 0) : n_actions_(n_actions) {}

  int n_actions() const { return n_actions_; }
  bool has(StateId s) const { return counts_.contains(s); }
  /// Empirical action distribution; throws UnmodeledState off-support.
  std::vector<double> probabilities(StateId s) const;
  const std::map<StateId, std::vector<std::size_t>>& counts() const { return counts_; }

  void record(StateId s, ActionId a);

private:
  int n_actions_;
  std::map<StateId, std::vector<std::size_t>> counts_;
};

TabularDynamics fit_tabular_dynamics(std::span<const Trajectory> dataset);
TabularBehavior fit_tabular_behavior(std::span<const Trajectory> dataset, int n_actions);

// ---------------------------------------------------------------------------
// Mixture-generalizing return-conditioned policy

/// Return-conditioned policy over full trajectory contexts. A context that
/// matches a stored dataset prefix acts with that prefix's empirical next
/// action; an unseen context acts with the uniform mixture over every stored
/// prefix that ends in the same state.
class MixtureRcPolicy : public ReturnConditionedPolicy {
public:
  struct Prefix {
    std::vector<ContextStep> history;
    StateId state;
    double rtg;
    std::vector<double> action_counts;
  };

  static constexpr double kRtgTolerance = 1e-9;

  MixtureRcPolicy(std::span<const Trajectory> dataset, int n_actions);

  int n_actions() const override { return n_actions_; }
  /// Throws NoGeneralizationTarget when no prefix ends in ctx.state.
  std::vector<double> act(const RcContext& ctx) const override;

  bool is_seen(const RcContext& ctx) const;
  const std::vector<Prefix>& prefixes() const { return prefixes_; }

private:
  const Prefix* find(const RcContext& ctx) const;

  int n_actions_;
  std::vector<Prefix> prefixes_;
};

inline MixtureRcPolicy build_mixture_rc_policy(std::span<const Trajectory> dataset, int n_actions) {
  return MixtureRcPolicy(dataset, n_actions);
}

inline std::vector<double> mixture_act(const MixtureRcPolicy& policy, const RcContext& context) {
  return policy.act(context);
}

}  // namespace rcsl
