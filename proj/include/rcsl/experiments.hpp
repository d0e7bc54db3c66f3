#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rcsl/environments.hpp"
#include "rcsl/nn.hpp"
#include "rcsl/report.hpp"

namespace rcsl {

/// Hidden width given either as a constant ("16") or as a multiple of u
/// ("u", "2u", "0.5u").
class WidthRule {
public:
  static WidthRule parse(const std::string& text);

  int resolve(int u) const;
  const std::string& text() const { return text_; }

private:
  std::string text_;
  double factor_ = 0.0;
  int fixed_ = 0;
};

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 picks the
/// hardware concurrency). The first exception thrown by any body is
/// rethrown after all workers stop.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

// ---------------------------------------------------------------------------
// LinearQ: RCSL vs Q-learning vs the always-0 policy

struct LinearQSimConfig {
  std::vector<int> u_values{16};
  std::vector<WidthRule> rcsl_widths{WidthRule::parse("16")};
  std::vector<WidthRule> ql_widths{WidthRule::parse("16"), WidthRule::parse("u")};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  TrainConfig train;
  int target_update_epochs = 10;
  /// Trajectories per policy in the LinearQ dataset.
  int dataset_n = 1;
  int threads = 0;
};

/// Columns: method, u, width, seed, k, optimal_return, achieved_return, gap,
/// gap_k, final_loss. Methods are "naive", "rcsl" and "ql"; naive rows have
/// width 0 and final_loss 0.
ExperimentReport run_linearq_sim(const LinearQSimConfig& config);

// ---------------------------------------------------------------------------
// Counterexamples

struct RewardAmbiguityConfig {
  std::vector<int> h0_values{1, 2};
  int k0 = 1;
  double r_good = 1.0;
  double r_bad = 0.0;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  TrainConfig train;
  int width = 16;
};

/// Columns: h0, seed, g_star, j_m1, j_m2, max_gap, p_left, first_step_sum,
/// identity_residual, datasets_equal. The policy is trained on the RTG
/// dataset the two MDPs share and evaluated exactly in both.
ExperimentReport run_reward_ambiguity(const RewardAmbiguityConfig& config);

struct StitchingConfig {
  std::vector<std::uint64_t> seeds{0};
  std::size_t mc_episodes = 10'000;
};

/// Columns: seed, g_star, j_exact, j_mc, j_mc_stderr, p_a1.
ExperimentReport run_stitching(const StitchingConfig& config);

// ---------------------------------------------------------------------------
// Grid maze: MBRCSL vs plain RCSL

struct MazeConfig {
  int horizon = kDefaultMazeHorizon;
  int n_detour = 50;
  int n_stitch = 50;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  std::size_t n_target = 100;
  std::size_t max_attempts = 10'000;
  TrainConfig train;
  int width = 32;
  /// Network input is (s / (n_states - 1), g * rtg_scale).
  double rtg_scale = 1.0;
  int eval_episodes = 100;
  int threads = 0;
};

/// Columns: seed, mbrcsl_return, rcsl_return, dataset_max, optimal_return,
/// desired_rtg, g_max, min_kept_return, kept, attempts_used,
/// high_return_rate.
ExperimentReport run_mbrcsl_maze(const MazeConfig& config);

// ---------------------------------------------------------------------------
// Hidden-neuron lower bound

/// Columns: u, n_states, nonzero, lower_bound.
ExperimentReport run_lower_bound(const std::vector<int>& u_values);

}  // namespace rcsl
