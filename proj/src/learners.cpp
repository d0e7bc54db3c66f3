#include "rcsl/learners.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rcsl/errors.hpp"

namespace rcsl {

// ---------------------------------------------------------------------------
// MLP-RCSL

ActionId project_action(double output, int n_actions) {
  if (!std::isfinite(output)) return output > 0.0 ? n_actions - 1 : 0;
  const double nearest = std::floor(output + 0.5);
  return static_cast<ActionId>(std::clamp(nearest, 0.0, static_cast<double>(n_actions - 1)));
}

RcslMlpPolicy::RcslMlpPolicy(Mlp2 net, int n_actions, RcslInputScaling scaling)
    : net_(std::move(net)), n_actions_(n_actions), scaling_(scaling) {
  if (net_.in_dim != 2 || net_.out_dim != 1) {
    throw std::invalid_argument("RcslMlpPolicy: network must map (s, g) to a scalar");
  }
  if (n_actions_ < 1) throw std::invalid_argument("RcslMlpPolicy: n_actions must be positive");
}

double RcslMlpPolicy::raw_output(StateId s, double rtg) const {
  const double x[2] = {s * scaling_.state_scale, rtg * scaling_.rtg_scale};
  return net_.forward(x)[0];
}

ActionId RcslMlpPolicy::action(StateId s, double rtg) const {
  return project_action(raw_output(s, rtg), n_actions_);
}

std::vector<double> RcslMlpPolicy::act_markov(StateId s, double rtg) const {
  std::vector<double> p(n_actions_, 0.0);
  p[action(s, rtg)] = 1.0;
  return p;
}

RegressionSet rcsl_regression_set(const RtgDataset& dataset, const RcslInputScaling& scaling) {
  RegressionSet set(2, 1);
  for (const auto& t : dataset.triples) {
    const double x[2] = {t.state * scaling.state_scale, t.rtg * scaling.rtg_scale};
    const double y[1] = {static_cast<double>(t.action)};
    set.add(x, y);
  }
  return set;
}

RcslTrainResult train_mlp_rcsl(const RtgDataset& dataset, const RcslMlpPolicy& initial,
                               const TrainConfig& config) {
  if (dataset.triples.empty()) throw std::invalid_argument("train_mlp_rcsl: empty dataset");
  for (const auto& t : dataset.triples) {
    if (t.action < 0 || t.action >= initial.n_actions()) {
      throw std::invalid_argument("train_mlp_rcsl: action outside the policy's action range");
    }
  }
  const auto set = rcsl_regression_set(dataset, initial.scaling());
  auto trained = train_mse(initial.net(), set, config);
  return RcslTrainResult{RcslMlpPolicy(std::move(trained.net), initial.n_actions(), initial.scaling()),
                         std::move(trained.loss_curve)};
}

RcslTrainResult train_mlp_rcsl(const RtgDataset& dataset, const RcslTrainSpec& spec,
                               const TrainConfig& config) {
  RcslMlpPolicy initial(Mlp2::random_init(2, spec.width, 1, config.seed), spec.n_actions, spec.scaling);
  return train_mlp_rcsl(dataset, initial, config);
}

// ---------------------------------------------------------------------------
// Q-learning

std::vector<double> QLearner::q_values(StateId s) const {
  const double x[1] = {s * state_scale};
  return q_net.forward(x);
}

ActionId QLearner::greedy_action(StateId s) const {
  const auto q = q_values(s);
  ActionId best = 0;
  for (ActionId a = 1; a < static_cast<ActionId>(q.size()); ++a) {
    if (q[a] > q[best]) best = a;
  }
  return best;
}

MarkovPolicy QLearner::greedy_policy(int horizon) const {
  std::vector<ActionId> actions(n_states);
  for (StateId s = 0; s < n_states; ++s) actions[s] = greedy_action(s);
  return MarkovPolicy::stationary_deterministic(horizon, n_actions, actions);
}

namespace {

struct Transition {
  StateId state;
  ActionId action;
  double reward;
  StateId next;
  bool terminal;
};

double max_output(const Mlp2& net, double x0) {
  const double x[1] = {x0};
  const auto q = net.forward(x);
  return *std::max_element(q.begin(), q.end());
}

}  // namespace

QLearner train_q_learning(std::span<const Trajectory> dataset, int n_states, int n_actions,
                          const TrainConfig& config, const QLearnerOptions& options) {
  if (dataset.empty()) throw std::invalid_argument("train_q_learning: empty dataset");
  if (options.target_update_epochs < 1) {
    throw std::invalid_argument("train_q_learning: target_update_epochs must be >= 1");
  }
  config.validate();

  std::vector<Transition> transitions;
  for (const auto& t : dataset) {
    for (std::size_t h = 0; h < t.size(); ++h) {
      const bool terminal = h + 1 == t.size();
      const StateId next = t.next_state(h);
      if (!terminal && next == kUnknownState) throw std::invalid_argument("train_q_learning: missing next state");
      if (t[h].state < 0 || t[h].state >= n_states || t[h].action < 0 || t[h].action >= n_actions) {
        throw std::invalid_argument("train_q_learning: transition outside the state/action space");
      }
      transitions.push_back({t[h].state, t[h].action, t[h].reward, next, terminal});
    }
  }

  QLearner learner;
  learner.n_states = n_states;
  learner.n_actions = n_actions;
  learner.state_scale = options.state_scale;
  learner.target_update_epochs = options.target_update_epochs;
  learner.train_epochs = config.epochs;

  MseTrainer trainer(Mlp2::random_init(1, options.width, n_actions, config.seed), config);
  RegressionSet set(1, n_actions);
  std::vector<double> y(n_actions, 0.0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (epoch % options.target_update_epochs == 0) {
      learner.target_net = trainer.net();
      // Bootstrap values depend only on the next state; cache them per sync.
      std::vector<double> next_value(n_states);
      for (StateId s = 0; s < n_states; ++s) next_value[s] = max_output(learner.target_net, s * options.state_scale);
      set = RegressionSet(1, n_actions);
      for (const auto& tr : transitions) {
        const double x[1] = {tr.state * options.state_scale};
        std::fill(y.begin(), y.end(), 0.0);
        y[tr.action] = tr.terminal ? tr.reward : tr.reward + next_value[tr.next];
        set.add(x, y, tr.action);
      }
    }
    learner.loss_curve.push_back(trainer.run_epoch(set));
    if (options.on_epoch) options.on_epoch(epoch + 1, trainer.net(), learner.target_net);
  }
  learner.q_net = trainer.net();
  return learner;
}

// ---------------------------------------------------------------------------
// Tabular models

std::span<const DynamicsOutcome> TabularDynamics::outcomes(StateId s, ActionId a) const {
  auto it = table_.find({s, a});
  if (it == table_.end()) {
    throw UnmodeledState("dynamics model has no data for (s=" + std::to_string(s) + ", a=" + std::to_string(a) + ")");
  }
  return it->second;
}

void TabularDynamics::record(StateId s, ActionId a, StateId next, double reward) {
  auto& row = table_[{s, a}];
  for (auto& o : row) {
    if (o.next_state == next && o.reward == reward) {
      ++o.count;
      return;
    }
  }
  row.push_back({next, reward, 1, 0.0});
}

void TabularDynamics::normalize() {
  for (auto& [key, row] : table_) {
    std::size_t total = 0;
    for (const auto& o : row) total += o.count;
    for (auto& o : row) o.prob = static_cast<double>(o.count) / static_cast<double>(total);
  }
}

std::vector<double> TabularBehavior::probabilities(StateId s) const {
  auto it = counts_.find(s);
  if (it == counts_.end()) throw UnmodeledState("behavior model has no data for state " + std::to_string(s));
  std::size_t total = 0;
  for (auto c : it->second) total += c;
  std::vector<double> p(n_actions_);
  for (int a = 0; a < n_actions_; ++a) p[a] = static_cast<double>(it->second[a]) / static_cast<double>(total);
  return p;
}

void TabularBehavior::record(StateId s, ActionId a) {
  if (a < 0 || a >= n_actions_) throw std::invalid_argument("TabularBehavior: action out of range");
  auto& row = counts_[s];
  if (row.empty()) row.assign(n_actions_, 0);
  ++row[a];
}

TabularDynamics fit_tabular_dynamics(std::span<const Trajectory> dataset) {
  if (dataset.empty()) throw std::invalid_argument("fit_tabular_dynamics: empty dataset");
  TabularDynamics model;
  for (const auto& t : dataset) {
    for (std::size_t h = 0; h < t.size(); ++h) model.record(t[h].state, t[h].action, t.next_state(h), t[h].reward);
  }
  model.normalize();
  return model;
}

TabularBehavior fit_tabular_behavior(std::span<const Trajectory> dataset, int n_actions) {
  if (dataset.empty()) throw std::invalid_argument("fit_tabular_behavior: empty dataset");
  TabularBehavior model(n_actions);
  for (const auto& t : dataset) {
    for (const auto& st : t.steps()) model.record(st.state, st.action);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Mixture policy

namespace {

bool same_step(const ContextStep& a, const ContextStep& b) {
  return a.state == b.state && a.action == b.action &&
         std::abs(a.rtg - b.rtg) <= MixtureRcPolicy::kRtgTolerance;
}

bool same_context(const std::vector<ContextStep>& history, StateId state, double rtg,
                  const MixtureRcPolicy::Prefix& p) {
  if (history.size() != p.history.size() || state != p.state ||
      std::abs(rtg - p.rtg) > MixtureRcPolicy::kRtgTolerance) {
    return false;
  }
  return std::equal(history.begin(), history.end(), p.history.begin(), same_step);
}

std::vector<double> normalized(const std::vector<double>& counts) {
  double total = 0.0;
  for (double c : counts) total += c;
  std::vector<double> p(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) p[i] = counts[i] / total;
  return p;
}

}  // namespace

MixtureRcPolicy::MixtureRcPolicy(std::span<const Trajectory> dataset, int n_actions) : n_actions_(n_actions) {
  if (n_actions_ < 1) throw std::invalid_argument("MixtureRcPolicy: n_actions must be positive");
  for (const auto& t : dataset) {
    std::vector<ContextStep> history;
    for (std::size_t h = 0; h < t.size(); ++h) {
      const auto& st = t[h];
      if (st.action < 0 || st.action >= n_actions_) throw std::invalid_argument("MixtureRcPolicy: action out of range");
      const double g = t.rtg()[h];
      auto it = std::find_if(prefixes_.begin(), prefixes_.end(),
                             [&](const Prefix& p) { return same_context(history, st.state, g, p); });
      if (it == prefixes_.end()) {
        prefixes_.push_back({history, st.state, g, std::vector<double>(n_actions_, 0.0)});
        it = std::prev(prefixes_.end());
      }
      it->action_counts[st.action] += 1.0;
      history.push_back({st.state, g, st.action});
    }
  }
}

const MixtureRcPolicy::Prefix* MixtureRcPolicy::find(const RcContext& ctx) const {
  for (const auto& p : prefixes_) {
    if (same_context(ctx.history, ctx.state, ctx.rtg, p)) return &p;
  }
  return nullptr;
}

bool MixtureRcPolicy::is_seen(const RcContext& ctx) const { return find(ctx) != nullptr; }

std::vector<double> MixtureRcPolicy::act(const RcContext& ctx) const {
  if (const Prefix* seen = find(ctx)) return normalized(seen->action_counts);

  std::vector<double> mix(n_actions_, 0.0);
  std::size_t matches = 0;
  for (const auto& p : prefixes_) {
    if (p.state != ctx.state) continue;
    const auto dist = normalized(p.action_counts);
    for (int a = 0; a < n_actions_; ++a) mix[a] += dist[a];
    ++matches;
  }
  if (matches == 0) {
    throw NoGeneralizationTarget("no stored prefix ends in state " + std::to_string(ctx.state));
  }
  for (double& m : mix) m /= static_cast<double>(matches);
  return mix;
}

}  // namespace rcsl
