#include "rcsl/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <stdexcept>
#include <string>

#include "rcsl/errors.hpp"
#include "rcsl/rng.hpp"

namespace rcsl {
namespace {

constexpr double kSumTolerance = 1e-12;
constexpr double kPolicyTolerance = 1e-9;

void check_distribution(std::span<const double> p, double tol, const char* what) {
  double total = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0) throw std::invalid_argument(std::string(what) + ": negative or non-finite entry");
    total += x;
  }
  if (std::abs(total - 1.0) > tol) {
    throw std::invalid_argument(std::string(what) + ": does not sum to 1 (sum=" + std::to_string(total) + ")");
  }
}

void check_action_dist(const std::vector<double>& p, int n_actions) {
  if (static_cast<int>(p.size()) != n_actions) {
    throw std::logic_error("return-conditioned policy returned wrong number of actions");
  }
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw std::logic_error("return-conditioned policy returned a negative probability");
    total += x;
  }
  if (std::abs(total - 1.0) > kPolicyTolerance) {
    throw std::logic_error("return-conditioned policy output is not a probability vector");
  }
}

StateId sample_initial(const MdpSpec& mdp, CounterRng& rng) {
  return static_cast<StateId>(rng.categorical(mdp.initial_dist()));
}

StateId sample_next(const MdpSpec& mdp, StateId s, ActionId a, CounterRng& rng) {
  auto outs = mdp.outcomes(s, a);
  if (outs.size() == 1) return outs.front().state;
  std::vector<double> w(outs.size());
  for (std::size_t i = 0; i < outs.size(); ++i) w[i] = outs[i].prob;
  return outs[rng.categorical(w)].state;
}

}  // namespace

// ---------------------------------------------------------------------------
// MdpSpec

MdpSpec::MdpSpec(int horizon, int n_states, int n_actions, std::vector<double> initial_dist,
                 std::vector<std::vector<Outcome>> transitions, std::vector<double> rewards)
    : horizon_(horizon),
      n_states_(n_states),
      n_actions_(n_actions),
      initial_dist_(std::move(initial_dist)),
      transitions_(std::move(transitions)),
      rewards_(std::move(rewards)) {
  if (horizon_ < 1 || n_states_ < 1 || n_actions_ < 1) {
    throw std::invalid_argument("MdpSpec: horizon, n_states and n_actions must be positive");
  }
  if (static_cast<int>(initial_dist_.size()) != n_states_) {
    throw std::invalid_argument("MdpSpec: initial_dist has wrong length");
  }
  check_distribution(initial_dist_, kSumTolerance, "MdpSpec initial_dist");

  const std::size_t n_sa = static_cast<std::size_t>(n_states_) * n_actions_;
  if (transitions_.size() != n_sa) throw std::invalid_argument("MdpSpec: transition table has wrong size");
  for (auto& row : transitions_) {
    if (row.empty()) throw std::invalid_argument("MdpSpec: empty transition row");
    std::vector<double> probs;
    for (const auto& o : row) {
      if (!valid_state(o.state)) throw std::invalid_argument("MdpSpec: transition to invalid state");
      probs.push_back(o.prob);
    }
    check_distribution(probs, kSumTolerance, "MdpSpec transition row");
    std::erase_if(row, [](const Outcome& o) { return o.prob == 0.0; });
    if (row.size() != 1) deterministic_ = false;
  }

  if (rewards_.size() == n_sa * static_cast<std::size_t>(horizon_) && horizon_ > 1) {
    step_rewards_ = true;
  } else if (rewards_.size() != n_sa) {
    throw std::invalid_argument("MdpSpec: reward table has wrong size");
  }
  for (double r : rewards_) {
    if (!std::isfinite(r)) throw std::invalid_argument("MdpSpec: non-finite reward");
  }
}

MdpSpec MdpSpec::deterministic(int horizon, int n_states, int n_actions,
                               std::vector<double> initial_dist,
                               const std::vector<StateId>& next_state,
                               std::vector<double> rewards) {
  std::vector<std::vector<Outcome>> rows;
  rows.reserve(next_state.size());
  for (StateId s : next_state) rows.push_back({Outcome{s, 1.0}});
  return MdpSpec(horizon, n_states, n_actions, std::move(initial_dist), std::move(rows),
                 std::move(rewards));
}

std::span<const Outcome> MdpSpec::outcomes(StateId s, ActionId a) const {
  return transitions_.at(sa(s, a));
}

StateId MdpSpec::next_state(StateId s, ActionId a) const {
  const auto& row = transitions_.at(sa(s, a));
  if (row.size() != 1) throw std::logic_error("MdpSpec::next_state on a stochastic transition");
  return row.front().state;
}

double MdpSpec::transition_prob(StateId s, ActionId a, StateId next) const {
  for (const auto& o : transitions_.at(sa(s, a))) {
    if (o.state == next) return o.prob;
  }
  return 0.0;
}

double MdpSpec::reward(int step, StateId s, ActionId a) const {
  if (!step_rewards_) return rewards_[sa(s, a)];
  const std::size_t layer = static_cast<std::size_t>(n_states_) * n_actions_;
  return rewards_[static_cast<std::size_t>(step) * layer + sa(s, a)];
}

// ---------------------------------------------------------------------------
// Trajectory

Trajectory::Trajectory(std::vector<Step> steps, StateId final_state)
    : steps_(std::move(steps)), rtg_(steps_.size()), final_state_(final_state) {
  double g = 0.0;
  for (std::size_t i = steps_.size(); i-- > 0;) {
    g = steps_[i].reward + g;
    rtg_[i] = g;
  }
  // g_H = r_H exactly; the loop above gives r_H + 0.0 which is bitwise r_H.
}

StateId Trajectory::next_state(std::size_t h) const {
  if (h + 1 < steps_.size()) return steps_[h + 1].state;
  return final_state_;
}

bool same_multiset(const RtgDataset& a, const RtgDataset& b, double rtg_tol) {
  if (rtg_tol < 0.0) throw std::invalid_argument("same_multiset: negative tolerance");
  if (a.triples.size() != b.triples.size()) return false;
  // Grouping by (state, action) first keeps near-equal RTGs aligned.
  const auto by_group = [](const RtgTriple& l, const RtgTriple& r) {
    return std::tie(l.state, l.action, l.rtg) < std::tie(r.state, r.action, r.rtg);
  };
  auto x = a.triples;
  auto y = b.triples;
  std::sort(x.begin(), x.end(), by_group);
  std::sort(y.begin(), y.end(), by_group);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].state != y[i].state || x[i].action != y[i].action) return false;
    if (!(std::abs(x[i].rtg - y[i].rtg) <= rtg_tol) && x[i].rtg != y[i].rtg) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Policies

MarkovPolicy::MarkovPolicy(int horizon, int n_states, int n_actions, std::vector<double> probs)
    : horizon_(horizon), n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  if (probs_.size() != static_cast<std::size_t>(horizon_) * n_states_ * n_actions_) {
    throw std::invalid_argument("MarkovPolicy: table has wrong size");
  }
  for (int h = 0; h < horizon_; ++h) {
    for (StateId s = 0; s < n_states_; ++s) check_distribution(dist(h, s), kSumTolerance, "MarkovPolicy row");
  }
}

MarkovPolicy MarkovPolicy::stationary_deterministic(int horizon, int n_actions,
                                                    const std::vector<ActionId>& actions) {
  const int n_states = static_cast<int>(actions.size());
  std::vector<double> probs(static_cast<std::size_t>(horizon) * n_states * n_actions, 0.0);
  for (int h = 0; h < horizon; ++h) {
    for (StateId s = 0; s < n_states; ++s) {
      if (actions[s] < 0 || actions[s] >= n_actions) throw std::invalid_argument("MarkovPolicy: invalid action");
      probs[(static_cast<std::size_t>(h) * n_states + s) * n_actions + actions[s]] = 1.0;
    }
  }
  return MarkovPolicy(horizon, n_states, n_actions, std::move(probs));
}

MarkovPolicy MarkovPolicy::stationary(int horizon, int n_states, int n_actions,
                                      const std::vector<double>& probs) {
  if (probs.size() != static_cast<std::size_t>(n_states) * n_actions) {
    throw std::invalid_argument("MarkovPolicy::stationary: table has wrong size");
  }
  std::vector<double> all;
  all.reserve(probs.size() * horizon);
  for (int h = 0; h < horizon; ++h) all.insert(all.end(), probs.begin(), probs.end());
  return MarkovPolicy(horizon, n_states, n_actions, std::move(all));
}

std::span<const double> MarkovPolicy::dist(int h, StateId s) const {
  const std::size_t off = (static_cast<std::size_t>(h) * n_states_ + s) * n_actions_;
  return std::span<const double>(probs_).subspan(off, n_actions_);
}

bool MarkovPolicy::is_deterministic() const {
  return std::all_of(probs_.begin(), probs_.end(), [](double p) { return p == 0.0 || p == 1.0; });
}

bool MarkovPolicy::is_stationary() const {
  const std::size_t layer = static_cast<std::size_t>(n_states_) * n_actions_;
  for (int h = 1; h < horizon_; ++h) {
    if (!std::equal(probs_.begin(), probs_.begin() + layer, probs_.begin() + h * layer)) return false;
  }
  return true;
}

ActionId MarkovPolicy::action(int h, StateId s) const {
  auto row = dist(h, s);
  for (ActionId a = 0; a < n_actions_; ++a) {
    if (row[a] == 1.0) return a;
  }
  throw std::logic_error("MarkovPolicy::action: row is not a point mass");
}

std::vector<double> RtgBlindPolicy::act(const RcContext& ctx) const {
  auto row = policy_.dist(ctx.step(), ctx.state);
  return {row.begin(), row.end()};
}

MarkovPolicy ValueTables::greedy_policy() const {
  std::vector<double> probs(static_cast<std::size_t>(horizon) * n_states * n_actions, 0.0);
  for (int h = 0; h < horizon; ++h) {
    for (StateId s = 0; s < n_states; ++s) {
      ActionId best = 0;
      for (ActionId a = 1; a < n_actions; ++a) {
        if (q(h, s, a) > q(h, s, best)) best = a;
      }
      probs[(static_cast<std::size_t>(h) * n_states + s) * n_actions + best] = 1.0;
    }
  }
  return MarkovPolicy(horizon, n_states, n_actions, std::move(probs));
}

// ---------------------------------------------------------------------------
// Dynamic programming and simulation

ValueTables exact_optimal_values(const MdpSpec& mdp) {
  const int H = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
  ValueTables vt;
  vt.horizon = H;
  vt.n_states = S;
  vt.n_actions = A;
  vt.q_values.assign(static_cast<std::size_t>(H + 1) * S * A, 0.0);
  vt.v_values.assign(static_cast<std::size_t>(H + 1) * S, 0.0);

  for (int h = H - 1; h >= 0; --h) {
    for (StateId s = 0; s < S; ++s) {
      double best = 0.0;
      for (ActionId a = 0; a < A; ++a) {
        double future = 0.0;
        for (const auto& o : mdp.outcomes(s, a)) future += o.prob * vt.v(h + 1, o.state);
        const double qv = mdp.reward(h, s, a) + future;
        vt.q_values[(static_cast<std::size_t>(h) * S + s) * A + a] = qv;
        if (a == 0 || qv > best) best = qv;
      }
      vt.v_values[static_cast<std::size_t>(h) * S + s] = best;
    }
  }
  double g = 0.0;
  for (StateId s = 0; s < S; ++s) g += mdp.initial_dist()[s] * vt.v(0, s);
  vt.optimal_return = g;
  return vt;
}

Trajectory rollout_markov(const MdpSpec& mdp, const MarkovPolicy& policy, std::uint64_t seed,
                          std::uint64_t episode) {
  if (policy.horizon() != mdp.horizon() || policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("rollout_markov: policy dimensions do not match the MDP");
  }
  CounterRng rng(seed, episode);
  std::vector<Step> steps;
  steps.reserve(mdp.horizon());
  StateId s = sample_initial(mdp, rng);
  for (int h = 0; h < mdp.horizon(); ++h) {
    const auto a = static_cast<ActionId>(rng.categorical(policy.dist(h, s)));
    steps.push_back({s, a, mdp.reward(h, s, a)});
    s = sample_next(mdp, s, a, rng);
  }
  return Trajectory(std::move(steps), s);
}

Trajectory rollout_return_conditioned(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                      double desired_rtg, std::uint64_t seed,
                                      std::uint64_t episode) {
  if (policy.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("rollout_return_conditioned: action count mismatch");
  }
  CounterRng rng(seed, episode);
  RcContext ctx;
  ctx.history.reserve(mdp.horizon());
  ctx.state = sample_initial(mdp, rng);
  ctx.rtg = desired_rtg;
  std::vector<Step> steps;
  steps.reserve(mdp.horizon());
  for (int h = 0; h < mdp.horizon(); ++h) {
    const auto dist = policy.act(ctx);
    check_action_dist(dist, mdp.n_actions());
    const auto a = static_cast<ActionId>(rng.categorical(dist));
    const double r = mdp.reward(h, ctx.state, a);
    steps.push_back({ctx.state, a, r});
    const StateId next = sample_next(mdp, ctx.state, a, rng);
    ctx.history.push_back({ctx.state, ctx.rtg, a});
    ctx.state = next;
    ctx.rtg -= r;
  }
  return Trajectory(std::move(steps), ctx.state);
}

double evaluate_return_conditioned(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                   double desired_rtg, std::uint64_t seed, std::uint64_t episode) {
  const auto traj = rollout_return_conditioned(mdp, policy, desired_rtg, seed, episode);
  double g = 0.0;
  for (const auto& st : traj.steps()) g += st.reward;
  return g;
}

namespace {

struct Enumerator {
  const MdpSpec& mdp;
  const ReturnConditionedPolicy& policy;
  std::size_t max_nodes;
  std::size_t nodes = 0;

  // Expected return-to-go from the node described by ctx.
  double expand(RcContext& ctx) {
    if (++nodes > max_nodes) {
      throw EnumerationInfeasible("exact_expected_return_rc: enumeration infeasible (more than " +
                                  std::to_string(max_nodes) + " nodes)");
    }
    const int h = ctx.step();
    if (h == mdp.horizon()) return 0.0;
    const auto dist = policy.act(ctx);
    check_action_dist(dist, mdp.n_actions());
    const StateId s = ctx.state;
    const double g = ctx.rtg;
    double value = 0.0;
    for (ActionId a = 0; a < mdp.n_actions(); ++a) {
      if (dist[a] == 0.0) continue;
      const double r = mdp.reward(h, s, a);
      double future = 0.0;
      ctx.history.push_back({s, g, a});
      ctx.rtg = g - r;
      for (const auto& o : mdp.outcomes(s, a)) {
        ctx.state = o.state;
        future += o.prob * expand(ctx);
      }
      ctx.history.pop_back();
      value += dist[a] * (r + future);
    }
    ctx.state = s;
    ctx.rtg = g;
    return value;
  }
};

}  // namespace

double exact_expected_return_rc(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                double desired_rtg, std::size_t max_nodes) {
  if (policy.n_actions() != mdp.n_actions()) {
    throw std::invalid_argument("exact_expected_return_rc: action count mismatch");
  }
  Enumerator e{mdp, policy, max_nodes};
  double j = 0.0;
  for (StateId s0 = 0; s0 < mdp.n_states(); ++s0) {
    const double mu = mdp.initial_dist()[s0];
    if (mu == 0.0) continue;
    RcContext ctx;
    ctx.state = s0;
    ctx.rtg = desired_rtg;
    j += mu * e.expand(ctx);
  }
  return j;
}

MonteCarloEstimate monte_carlo_return_rc(const MdpSpec& mdp, const ReturnConditionedPolicy& policy,
                                         double desired_rtg, std::uint64_t seed,
                                         std::size_t episodes) {
  if (episodes == 0) throw std::invalid_argument("monte_carlo_return_rc: zero episodes");
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    const double g = evaluate_return_conditioned(mdp, policy, desired_rtg, seed, i);
    sum += g;
    sum_sq += g * g;
  }
  MonteCarloEstimate est;
  est.episodes = episodes;
  est.mean = sum / static_cast<double>(episodes);
  const double var = std::max(0.0, sum_sq / static_cast<double>(episodes) - est.mean * est.mean);
  est.std_error = std::sqrt(var / static_cast<double>(episodes));
  return est;
}

// ---------------------------------------------------------------------------
// Datasets

RtgDataset build_rtg_dataset(std::span<const Trajectory> trajectories) {
  RtgDataset ds;
  ds.source_count = trajectories.size();
  for (const auto& t : trajectories) {
    for (std::size_t h = 0; h < t.size(); ++h) {
      ds.triples.push_back({t[h].state, t.rtg()[h], t[h].action});
    }
  }
  return ds;
}

std::vector<bool> reachable_states(const MdpSpec& mdp) {
  const int S = mdp.n_states();
  std::vector<bool> frontier(S, false), seen(S, false);
  for (StateId s = 0; s < S; ++s) frontier[s] = mdp.initial_dist()[s] > 0.0;
  for (int h = 0; h < mdp.horizon(); ++h) {
    std::vector<bool> next(S, false);
    for (StateId s = 0; s < S; ++s) {
      if (!frontier[s]) continue;
      seen[s] = true;
      for (ActionId a = 0; a < mdp.n_actions(); ++a) {
        for (const auto& o : mdp.outcomes(s, a)) next[o.state] = true;
      }
    }
    frontier = std::move(next);
  }
  return seen;
}

Coverage coverage_checks(std::span<const Trajectory> dataset, const MdpSpec& mdp,
                         const MarkovPolicy* optimal_policy) {
  if (optimal_policy != nullptr) {
    if (!optimal_policy->is_deterministic()) {
      throw std::invalid_argument("coverage_checks: optimal policy must be deterministic");
    }
    if (!optimal_policy->is_stationary()) {
      throw std::invalid_argument("coverage_checks: optimal policy must be stationary");
    }
    if (optimal_policy->n_states() != mdp.n_states()) {
      throw std::invalid_argument("coverage_checks: policy dimensions do not match the MDP");
    }
  }
  const int S = mdp.n_states(), A = mdp.n_actions();
  std::vector<bool> seen(static_cast<std::size_t>(S) * A, false);
  for (const auto& t : dataset) {
    for (const auto& st : t.steps()) {
      if (mdp.valid_state(st.state) && mdp.valid_action(st.action)) {
        seen[static_cast<std::size_t>(st.state) * A + st.action] = true;
      }
    }
  }
  const auto reachable = reachable_states(mdp);
  Coverage c;
  c.uniform = true;
  for (StateId s = 0; s < S && c.uniform; ++s) {
    if (!reachable[s]) continue;
    for (ActionId a = 0; a < A; ++a) {
      if (!seen[static_cast<std::size_t>(s) * A + a]) {
        c.uniform = false;
        break;
      }
    }
  }
  if (optimal_policy != nullptr) {
    c.covers_optimal = true;
    for (StateId s = 0; s < S; ++s) {
      if (!reachable[s]) continue;
      if (!seen[static_cast<std::size_t>(s) * A + optimal_policy->action(0, s)]) {
        c.covers_optimal = false;
        break;
      }
    }
  }
  return c;
}

}  // namespace rcsl
