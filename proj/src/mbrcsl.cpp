#include "rcsl/mbrcsl.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include "rcsl/errors.hpp"
#include "rcsl/rng.hpp"

namespace rcsl {

void RolloutConfig::validate() const {
  if (n_target < 1) throw std::invalid_argument("RolloutConfig: n_target must be >= 1");
  if (max_attempts < n_target) throw std::invalid_argument("RolloutConfig: max_attempts must be >= n_target");
  if (horizon < 0) throw std::invalid_argument("RolloutConfig: negative horizon");
}

namespace {

// One model rollout; nullopt when it leaves the models' support.
std::optional<Trajectory> model_rollout(StateId start, int horizon, const TabularDynamics& dynamics,
                                        const TabularBehavior& behavior, CounterRng& rng) {
  std::vector<Step> steps;
  steps.reserve(horizon);
  StateId s = start;
  for (int h = 0; h < horizon; ++h) {
    if (!behavior.has(s)) return std::nullopt;
    const auto action_probs = behavior.probabilities(s);
    const auto a = static_cast<ActionId>(rng.categorical(action_probs));
    if (!dynamics.has(s, a)) return std::nullopt;
    const auto outs = dynamics.outcomes(s, a);
    std::vector<double> w(outs.size());
    for (std::size_t i = 0; i < outs.size(); ++i) w[i] = outs[i].prob;
    const auto& o = outs[rng.categorical(w)];
    steps.push_back({s, a, o.reward});
    if (o.next_state == kUnknownState && h + 1 < horizon) return std::nullopt;
    s = o.next_state;
  }
  return Trajectory(std::move(steps), s);
}

}  // namespace

RolloutReport generate_rollout_dataset(std::span<const Trajectory> offline, const TabularDynamics& dynamics,
                                       const TabularBehavior& behavior, const RolloutConfig& config) {
  config.validate();
  if (offline.empty()) throw std::invalid_argument("generate_rollout_dataset: empty offline dataset");

  std::vector<StateId> initial_states;
  RolloutReport report;
  report.g_max = -std::numeric_limits<double>::infinity();
  for (const auto& t : offline) {
    if (t.size() == 0) continue;
    initial_states.push_back(t[0].state);
    report.g_max = std::max(report.g_max, t.total_return());
  }
  if (initial_states.empty()) throw std::invalid_argument("generate_rollout_dataset: no initial states");
  const int horizon = config.horizon > 0 ? config.horizon : static_cast<int>(offline.front().size());

  for (std::size_t attempt = 0; attempt < config.max_attempts; ++attempt) {
    CounterRng rng(config.rng_seed, attempt);
    const StateId start = initial_states[rng.below(initial_states.size())];
    auto traj = model_rollout(start, horizon, dynamics, behavior, rng);
    report.attempts_used = attempt + 1;
    if (!traj) {
      ++report.discarded_unmodeled;
      continue;
    }
    if (traj->total_return() > report.g_max) {
      report.rollout_dataset.push_back(std::move(*traj));
      if (report.rollout_dataset.size() == config.n_target) break;
    }
  }
  report.reached_target = report.rollout_dataset.size() == config.n_target;
  report.high_return_rate =
      static_cast<double>(report.rollout_dataset.size()) / static_cast<double>(report.attempts_used);
  if (report.rollout_dataset.empty()) {
    throw NoImprovementDiscoverable("no improvement discoverable: none of " + std::to_string(report.attempts_used) +
                                    " rollouts beat the dataset maximum return " + std::to_string(report.g_max));
  }
  return report;
}

double mean_return_rc(const MdpSpec& mdp, const ReturnConditionedPolicy& policy, double desired_rtg,
                      std::uint64_t seed, int episodes) {
  if (episodes < 1) throw std::invalid_argument("mean_return_rc: episodes must be >= 1");
  double total = 0.0;
  for (int i = 0; i < episodes; ++i) {
    total += evaluate_return_conditioned(mdp, policy, desired_rtg, seed, static_cast<std::uint64_t>(i));
  }
  return total / episodes;
}

MbrcslResult run_mbrcsl(std::span<const Trajectory> offline, const MdpSpec& mdp, const RolloutConfig& rollout_cfg,
                        const TrainConfig& train_cfg, const MbrcslOptions& options) {
  const auto dynamics = fit_tabular_dynamics(offline);
  const auto behavior = fit_tabular_behavior(offline, mdp.n_actions());
  RolloutConfig cfg = rollout_cfg;
  if (cfg.horizon == 0) cfg.horizon = mdp.horizon();
  auto report = generate_rollout_dataset(offline, dynamics, behavior, cfg);

  double desired = -std::numeric_limits<double>::infinity();
  for (const auto& t : report.rollout_dataset) desired = std::max(desired, t.total_return());

  const auto rtg = build_rtg_dataset(report.rollout_dataset);
  RcslTrainSpec spec{mdp.n_actions(), options.width, options.scaling};
  auto trained = train_mlp_rcsl(rtg, spec, train_cfg);
  const double eval = mean_return_rc(mdp, trained.policy, desired, options.eval_seed, options.eval_episodes);
  return MbrcslResult{std::move(trained.policy), std::move(report), desired, eval, std::move(trained.loss_curve)};
}

}  // namespace rcsl
