#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rcsl/learners.hpp"
#include "rcsl/mdp.hpp"
#include "rcsl/nn.hpp"

namespace rcsl {

struct RolloutConfig {
  std::size_t n_target = 100;
  std::size_t max_attempts = 10'000;
  std::uint64_t rng_seed = 0;
  /// Rollout length; 0 takes the length of the offline trajectories.
  int horizon = 0;

  void validate() const;
};

struct RolloutReport {
  std::vector<Trajectory> rollout_dataset;
  double g_max = 0.0;
  std::size_t attempts_used = 0;
  /// Attempts that hit a (state, action) pair the models never saw.
  std::size_t discarded_unmodeled = 0;
  double high_return_rate = 0.0;
  bool reached_target = false;
};

/// Rolls out the behavior model in the learned dynamics from recorded start
/// states and keeps trajectories whose predicted return beats g_max.
/// Attempt i uses RNG stream (rng_seed, i). Throws NoImprovementDiscoverable
/// when no attempt is kept.
RolloutReport generate_rollout_dataset(std::span<const Trajectory> offline, const TabularDynamics& dynamics,
                                       const TabularBehavior& behavior, const RolloutConfig& config);

struct MbrcslOptions {
  int width = 32;
  RcslInputScaling scaling;
  int eval_episodes = 100;
  std::uint64_t eval_seed = 0;
};

struct MbrcslResult {
  RcslMlpPolicy policy;
  RolloutReport report;
  double desired_rtg = 0.0;
  double eval_return = 0.0;
  std::vector<double> loss_curve;
};

/// Fit models, generate and filter rollouts, train the output RCSL policy
/// on them and evaluate it in `mdp` with the best rollout return as the
/// desired return.
MbrcslResult run_mbrcsl(std::span<const Trajectory> offline, const MdpSpec& mdp, const RolloutConfig& rollout_cfg,
                        const TrainConfig& train_cfg, const MbrcslOptions& options);

/// Mean actual return over `episodes` return-conditioned evaluations.
double mean_return_rc(const MdpSpec& mdp, const ReturnConditionedPolicy& policy, double desired_rtg,
                      std::uint64_t seed, int episodes);

}  // namespace rcsl
