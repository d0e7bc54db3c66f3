#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rcsl {

// Steps are 0-based throughout: an episode visits steps 0..H-1 and the
// value tables carry a zero terminal layer at index H.

using StateId = int;
using ActionId = int;

inline constexpr StateId kUnknownState = -1;

struct Outcome {
  StateId state;
  double prob;
};

/// Finite-horizon tabular MDP (H, S, A, mu, T, r). Rewards are either
/// stationary r[s][a] or indexed by step r[h][s][a]. Immutable once built.
class MdpSpec {
public:
  /// `transitions[s * n_actions + a]` lists the successor distribution;
  /// `rewards` has n_states*n_actions entries, or horizon*n_states*n_actions
  /// for step-indexed rewards. Throws std::invalid_argument on bad input.
  MdpSpec(int horizon, int n_states, int n_actions, std::vector<double> initial_dist,
          std::vector<std::vector<Outcome>> transitions, std::vector<double> rewards);

  /// Deterministic transitions given as `next_state[s * n_actions + a]`.
  static MdpSpec deterministic(int horizon, int n_states, int n_actions,
                               std::vector<double> initial_dist,
                               const std::vector<StateId>& next_state,
                               std::vector<double> rewards);

  int horizon() const { return horizon_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  bool is_deterministic() const { return deterministic_; }
  bool has_step_rewards() const { return step_rewards_; }

  std::span<const double> initial_dist() const { return initial_dist_; }
  std::span<const Outcome> outcomes(StateId s, ActionId a) const;
  /// Only valid when is_deterministic().
  StateId next_state(StateId s, ActionId a) const;
  double transition_prob(StateId s, ActionId a, StateId next) const;
  double reward(int step, StateId s, ActionId a) const;

  bool valid_state(StateId s) const { return s >= 0 && s < n_states_; }
  bool valid_action(ActionId a) const { return a >= 0 && a < n_actions_; }

private:
  std::size_t sa(StateId s, ActionId a) const {
    return static_cast<std::size_t>(s) * n_actions_ + a;
  }

  int horizon_;
  int n_states_;
  int n_actions_;
  bool deterministic_ = true;
  bool step_rewards_ = false;
  std::vector<double> initial_dist_;
  std::vector<std::vector<Outcome>> transitions_;
  std::vector<double> rewards_;
};

struct Step {
  StateId state;
  ActionId action;
  double reward;

  bool operator==(const Step&) const = default;
};

/// Full-length episode with its returns-to-go. `final_state` is the state
/// reached after the last action when it was recorded.
class Trajectory {
public:
  Trajectory() = default;
  explicit Trajectory(std::vector<Step> steps, StateId final_state = kUnknownState);

  std::span<const Step> steps() const { return steps_; }
  const Step& operator[](std::size_t h) const { return steps_[h]; }
  std::size_t size() const { return steps_.size(); }
  std::span<const double> rtg() const { return rtg_; }
  double total_return() const { return rtg_.empty() ? 0.0 : rtg_.front(); }
  StateId final_state() const { return final_state_; }
  /// State at step h+1, or final_state() for the last step.
  StateId next_state(std::size_t h) const;

  bool operator==(const Trajectory& other) const {
    return steps_ == other.steps_ && final_state_ == other.final_state_;
  }

private:
  std::vector<Step> steps_;
  std::vector<double> rtg_;
  StateId final_state_ = kUnknownState;
};

struct RtgTriple {
  StateId state;
  double rtg;
  ActionId action;

  auto operator<=>(const RtgTriple&) const = default;
};

struct RtgDataset {
  std::vector<RtgTriple> triples;
  std::size_t source_count = 0;
};

/// Multiset equality of the triples. RTGs match when they differ by at most
/// `rtg_tol`; 0 compares them bitwise. Sums of the same rewards in a different
/// order can differ in the last bit, so datasets built from reordered rewards
/// need a small tolerance.
bool same_multiset(const RtgDataset& a, const RtgDataset& b, double rtg_tol = 0.0);

class MarkovPolicy;

/// Q[h][s][a] and V[h][s] for h in 0..H, with the layer at H all zero.
struct ValueTables {
  int horizon = 0;
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> q_values;
  std::vector<double> v_values;
  double optimal_return = 0.0;

  double q(int h, StateId s, ActionId a) const {
    return q_values[(static_cast<std::size_t>(h) * n_states + s) * n_actions + a];
  }
  double v(int h, StateId s) const { return v_values[static_cast<std::size_t>(h) * n_states + s]; }

  /// Time-dependent greedy policy, ties to the lowest action index.
  MarkovPolicy greedy_policy() const;
};

/// pi[h][s] -> distribution over actions.
class MarkovPolicy {
public:
  MarkovPolicy(int horizon, int n_states, int n_actions, std::vector<double> probs);

  /// Same deterministic action table at every step.
  static MarkovPolicy stationary_deterministic(int horizon, int n_actions,
                                               const std::vector<ActionId>& actions);
  /// Same action distribution table `probs[s * n_actions + a]` at every step.
  static MarkovPolicy stationary(int horizon, int n_states, int n_actions,
                                 const std::vector<double>& probs);

  int horizon() const { return horizon_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  std::span<const double> dist(int h, StateId s) const;
  bool is_deterministic() const;
  bool is_stationary() const;
  /// Point-mass action at (h, s); throws if the row is stochastic.
  ActionId action(int h, StateId s) const;

private:
  int horizon_;
  int n_states_;
  int n_actions_;
  std::vector<double> probs_;
};

struct ContextStep {
  StateId state;
  double rtg;
  ActionId action;
};

/// Everything a return-conditioned policy may look at: completed steps plus
/// the current state and desired return-to-go.
struct RcContext {
  std::vector<ContextStep> history;
  StateId state = 0;
  double rtg = 0.0;

  int step() const { return static_cast<int>(history.size()); }
};

class ReturnConditionedPolicy {
public:
  virtual ~ReturnConditionedPolicy() = default;
  virtual int n_actions() const = 0;
  virtual std::vector<double> act(const RcContext& ctx) const = 0;
};

/// Policies in the Markovian class only see (state, rtg).
class MarkovianRcPolicy : public ReturnConditionedPolicy {
public:
  std::vector<double> act(const RcContext& ctx) const final {
    return act_markov(ctx.state, ctx.rtg);
  }
  virtual std::vector<double> act_markov(StateId s, double rtg) const = 0;
};

/// Wraps a Markov policy; the desired return is ignored.
class RtgBlindPolicy : public ReturnConditionedPolicy {
public:
  explicit RtgBlindPolicy(MarkovPolicy policy) : policy_(std::move(policy)) {}
  int n_actions() const override { return policy_.n_actions(); }
  std::vector<double> act(const RcContext& ctx) const override;

private:
  MarkovPolicy policy_;
};

ValueTables exact_optimal_values(const MdpSpec& mdp);

/// Samples one episode. The stream is derived from (seed, episode).
Trajectory rollout_markov(const MdpSpec& mdp, const MarkovPolicy& policy, std::uint64_t seed,
                          std::uint64_t episode = 0);

/// Return-conditioned evaluation: a_h ~ pi(.|context), g_{h+1} = g_h - r_h.
Trajectory rollout_return_conditioned(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                      double desired_rtg, std::uint64_t seed,
                                      std::uint64_t episode = 0);

/// Actual return of one return-conditioned episode.
double evaluate_return_conditioned(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                   double desired_rtg, std::uint64_t seed,
                                   std::uint64_t episode = 0);

inline constexpr std::size_t kDefaultEnumerationCap = 2'000'000;

/// Exact J(pi, g) by expanding every reachable (context, state) branch with
/// its probability. Throws EnumerationInfeasible past `max_nodes`.
double exact_expected_return_rc(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                double desired_rtg,
                                std::size_t max_nodes = kDefaultEnumerationCap);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t episodes = 0;
};

MonteCarloEstimate monte_carlo_return_rc(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                         double desired_rtg, std::uint64_t seed,
                                         std::size_t episodes);

RtgDataset build_rtg_dataset(std::span<const Trajectory> trajectories);

struct Coverage {
  bool uniform = false;
  bool covers_optimal = false;
};

/// `uniform` asks that every action of every state reachable at some step
/// h < H appears in the data. `covers_optimal` needs a deterministic
/// stationary policy; any other policy is rejected.
Coverage coverage_checks(std::span<const Trajectory> dataset, const MdpSpec& mdp,
                         const MarkovPolicy* optimal_policy = nullptr);

/// States with positive probability of being visited at some step h < H.
std::vector<bool> reachable_states(const MdpSpec& mdp);

}  // namespace rcsl
