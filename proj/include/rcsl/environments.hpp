#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rcsl/mdp.hpp"

namespace rcsl {

// ---------------------------------------------------------------------------
// LinearQ: optimal Q is a two-neuron ReLU function while the reward needs
// a number of neurons linear in the state count.

struct LinearQEnv {
  int u = 0;
  double k = 0.0;  ///< reward granularity 1/(3u+1)
  MdpSpec mdp;
};

/// States 0..3u+2, actions {0,1}, horizon 3u+3, start state 0.
LinearQEnv build_linearq(int u);

/// Closed-form optimal quantities of a LinearQ instance.
class LinearQReference {
public:
  explicit LinearQReference(int u);

  int u() const { return u_; }
  double k() const { return k_; }
  int n_states() const { return 3 * u_ + 3; }
  /// Q*(s, a); throws std::out_of_range for s outside 0..3u+2.
  double q_star(StateId s, ActionId a) const;
  double v_star(StateId s) const;
  ActionId pi_star_action(StateId s) const;
  /// Stationary deterministic optimal policy over the full horizon.
  MarkovPolicy pi_star() const;
  double v_star_0() const { return 2.0 * k_ * (2 * u_ + 1); }

private:
  int u_;
  double k_;
};

inline LinearQReference linearq_reference(int u) { return LinearQReference(u); }

/// 3(3u+3)n optimal trajectories followed by n trajectories of each
/// one-step-deviation policy, deviations ordered by state ascending.
std::vector<Trajectory> build_linearq_dataset(int u, int n, std::uint64_t rng_seed);

// ---------------------------------------------------------------------------
// Reward-ambiguity pair: two single-state MDPs whose datasets produce the
// same (state, rtg, action) triples.

inline constexpr ActionId kActionLeft = 0;
inline constexpr ActionId kActionRight = 1;

struct RewardAmbiguityPair {
  int h0 = 0;
  int k0 = 0;
  double r_good = 0.0;
  double r_bad = 0.0;
  MdpSpec m1;  ///< rewards alternate with the step parity
  MdpSpec m2;  ///< a_L always good, a_R always bad
  std::vector<Trajectory> d1;
  std::vector<Trajectory> d2;

  double optimal_return() const { return 2.0 * h0 * r_good; }
};

RewardAmbiguityPair build_reward_ambiguity_pair(int h0, int k0, double r_good, double r_bad);

// ---------------------------------------------------------------------------
// Three-state chain where every state-action pair is covered yet the best
// dataset trajectory only reaches half the optimal return.

struct StitchCounterexample {
  MdpSpec mdp;
  std::vector<Trajectory> dataset;
};

StitchCounterexample build_stitch_counterexample();

// ---------------------------------------------------------------------------
// Grid maze: six open cells on a 4x2 grid.
//
//   y=1   A  S
//   y=0   B  M  C  G
//        x=0 1  2  3
//
// The shortest S->G route goes S,M,C,G; the scripted detour goes S,A,B,M,C,G.
// Reward is 1 for every transition that ends in the absorbing cell G.

enum class MazeAction : ActionId { Up = 0, Down = 1, Left = 2, Right = 3, Stay = 4 };
inline constexpr int kMazeActions = 5;

struct MazeCell {
  std::string name;
  int x;
  int y;
};

struct GridMaze {
  std::vector<MazeCell> cells;
  StateId start = 0;
  StateId a = 0;
  StateId b = 0;
  StateId m = 0;
  StateId goal = 0;
  MdpSpec mdp;

  StateId cell_at(int x, int y) const;  ///< kUnknownState for walls
  /// Scripted detour S->A->B->M->C->G, padded with Stay.
  std::vector<ActionId> detour_script() const;
  /// Scripted S->M, padded with Stay at M.
  std::vector<ActionId> stitch_script() const;
};

inline constexpr int kDefaultMazeHorizon = 8;

/// Throws std::invalid_argument when the horizon cannot fit the detour.
GridMaze build_grid_maze(int horizon = kDefaultMazeHorizon);

/// n_detour detour trajectories followed by n_stitch stitch trajectories.
/// The scripts are noiseless; the seed does not change the output.
std::vector<Trajectory> generate_maze_dataset(const GridMaze& maze, int n_detour, int n_stitch,
                                              std::uint64_t rng_seed);

/// Replays an action script in a deterministic MDP from its start state.
Trajectory replay_script(const MdpSpec& mdp, StateId start, const std::vector<ActionId>& actions);

}  // namespace rcsl
