#include "rcsl/environments.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace rcsl {
namespace {

bool is_even(int s) { return s % 2 == 0; }

StateId linearq_next(int u, StateId s, ActionId a) {
  if (a == 0) {
    if (s <= u) return s + 1;
    if (s <= 2 * u) return is_even(s) ? 3 * u + 2 : 3 * u + 1;
    return 3 * u + 2;
  }
  if (s <= u) return is_even(s) ? 3 * u + 2 : 3 * u + 1;
  if (s <= 3 * u + 1) return s + 1;
  return 3 * u + 2;
}

// Reward in units of k.
double linearq_reward_units(int u, StateId s, ActionId a) {
  if (a == 0) {
    if (s <= u - 1) return 2.0;
    if (s == u) return 1.5;
    if (s <= 2 * u) return is_even(s) ? -2.0 * s + 4.0 * u + 2.0 : -2.0 * s + 4.0 * u + 1.5;
    return 0.0;
  }
  if (s <= u) return is_even(s) ? -1.0 * s + 3.0 * u + 1.5 : -1.0 * s + 3.0 * u + 1.0;
  if (s <= 3 * u) return 1.0;
  // Q*(s, 1) = k * ReLU(-s + 3u + 1.5) forces the last step of the a=1 chain
  // to pay half a unit.
  if (s == 3 * u + 1) return 0.5;
  return 0.0;
}

double relu(double x) { return x > 0.0 ? x : 0.0; }

std::vector<double> point_mass(int n, int i) {
  std::vector<double> p(n, 0.0);
  p[i] = 1.0;
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// LinearQ

LinearQEnv build_linearq(int u) {
  if (u < 1) throw std::invalid_argument("build_linearq: u must be >= 1");
  const int n_states = 3 * u + 3;
  const double k = 1.0 / (3.0 * u + 1.0);
  std::vector<StateId> next(static_cast<std::size_t>(n_states) * 2);
  std::vector<double> reward(next.size());
  for (StateId s = 0; s < n_states; ++s) {
    for (ActionId a = 0; a < 2; ++a) {
      next[s * 2 + a] = linearq_next(u, s, a);
      reward[s * 2 + a] = linearq_reward_units(u, s, a) * k;
    }
  }
  return LinearQEnv{u, k,
                    MdpSpec::deterministic(n_states, n_states, 2, point_mass(n_states, 0), next,
                                           std::move(reward))};
}

LinearQReference::LinearQReference(int u) : u_(u), k_(1.0 / (3.0 * u + 1.0)) {
  if (u < 1) throw std::invalid_argument("linearq_reference: u must be >= 1");
}

double LinearQReference::q_star(StateId s, ActionId a) const {
  if (s < 0 || s > 3 * u_ + 2) throw std::out_of_range("LinearQReference: state out of range");
  if (a == 0) return 2.0 * k_ * relu(-s + 2.0 * u_ + 1.0);
  if (a == 1) return k_ * relu(-s + 3.0 * u_ + 1.5);
  throw std::out_of_range("LinearQReference: action out of range");
}

double LinearQReference::v_star(StateId s) const { return q_star(s, pi_star_action(s)); }

ActionId LinearQReference::pi_star_action(StateId s) const {
  if (s < 0 || s > 3 * u_ + 2) throw std::out_of_range("LinearQReference: state out of range");
  // Both actions are worth 0 in the absorbing state; take 0 there.
  if (s == 3 * u_ + 2) return 0;
  return s <= u_ ? 0 : 1;
}

MarkovPolicy LinearQReference::pi_star() const {
  std::vector<ActionId> actions(n_states());
  for (StateId s = 0; s < n_states(); ++s) actions[s] = pi_star_action(s);
  return MarkovPolicy::stationary_deterministic(n_states(), 2, actions);
}

std::vector<Trajectory> build_linearq_dataset(int u, int n, std::uint64_t rng_seed) {
  if (n < 1) throw std::invalid_argument("build_linearq_dataset: n must be >= 1");
  const auto env = build_linearq(u);
  const LinearQReference ref(u);
  const int n_states = ref.n_states();

  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(4) * n_states * n);
  std::uint64_t episode = 0;
  const auto optimal = ref.pi_star();
  for (int i = 0; i < 3 * n_states * n; ++i) out.push_back(rollout_markov(env.mdp, optimal, rng_seed, episode++));

  for (StateId t = 0; t < n_states; ++t) {
    std::vector<ActionId> actions(n_states);
    for (StateId s = 0; s < n_states; ++s) actions[s] = ref.pi_star_action(s);
    actions[t] = 1 - actions[t];
    const auto deviation = MarkovPolicy::stationary_deterministic(n_states, 2, actions);
    for (int i = 0; i < n; ++i) out.push_back(rollout_markov(env.mdp, deviation, rng_seed, episode++));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reward ambiguity

RewardAmbiguityPair build_reward_ambiguity_pair(int h0, int k0, double r_good, double r_bad) {
  if (h0 < 1 || k0 < 1) throw std::invalid_argument("build_reward_ambiguity_pair: h0 and k0 must be >= 1");
  if (!(r_good > r_bad)) throw std::invalid_argument("build_reward_ambiguity_pair: need r_good > r_bad");
  const int H = 2 * h0;

  // M1: odd steps (1-based) reward a_R, even steps reward a_L.
  std::vector<double> r1(static_cast<std::size_t>(H) * 2), r2(static_cast<std::size_t>(H) * 2);
  for (int h = 0; h < H; ++h) {
    const bool odd_step = (h + 1) % 2 == 1;
    r1[h * 2 + kActionLeft] = odd_step ? r_bad : r_good;
    r1[h * 2 + kActionRight] = odd_step ? r_good : r_bad;
    r2[h * 2 + kActionLeft] = r_good;
    r2[h * 2 + kActionRight] = r_bad;
  }
  const std::vector<StateId> self{0, 0};
  auto m1 = MdpSpec::deterministic(H, 1, 2, {1.0}, self, std::move(r1));
  auto m2 = MdpSpec::deterministic(H, 1, 2, {1.0}, self, std::move(r2));

  auto play = [H](const MdpSpec& mdp, auto choose) {
    std::vector<Step> steps;
    for (int h = 0; h < H; ++h) {
      const ActionId a = choose(h);
      steps.push_back({0, a, mdp.reward(h, 0, a)});
    }
    return Trajectory(std::move(steps), 0);
  };
  const auto all_left = play(m1, [](int) { return kActionLeft; });
  const auto all_right = play(m1, [](int) { return kActionRight; });
  const auto alt_left = play(m2, [](int h) { return h % 2 == 0 ? kActionLeft : kActionRight; });
  const auto alt_right = play(m2, [](int h) { return h % 2 == 0 ? kActionRight : kActionLeft; });

  std::vector<Trajectory> d1, d2;
  for (int i = 0; i < k0; ++i) d1.push_back(all_left);
  for (int i = 0; i < k0; ++i) d1.push_back(all_right);
  for (int i = 0; i < k0; ++i) d2.push_back(alt_left);
  for (int i = 0; i < k0; ++i) d2.push_back(alt_right);

  return RewardAmbiguityPair{h0, k0, r_good, r_bad, std::move(m1), std::move(m2),
                             std::move(d1), std::move(d2)};
}

// ---------------------------------------------------------------------------
// Stitching counterexample

StitchCounterexample build_stitch_counterexample() {
  // s_1, s_2, s_3 -> 0, 1, 2 and a_1, a_2 -> 0, 1; r(s, a_j) = j - 1.
  const std::vector<StateId> next{1, 1, 2, 2, 2, 2};
  std::vector<double> reward{0.0, 1.0, 0.0, 1.0, 0.0, 1.0};
  auto mdp = MdpSpec::deterministic(2, 3, 2, {1.0, 0.0, 0.0}, next, std::move(reward));
  std::vector<Trajectory> dataset{
      Trajectory({{0, 0, 0.0}, {1, 1, 1.0}}, 2),
      Trajectory({{0, 1, 1.0}, {1, 0, 0.0}}, 2),
  };
  return StitchCounterexample{std::move(mdp), std::move(dataset)};
}

// ---------------------------------------------------------------------------
// Grid maze

StateId GridMaze::cell_at(int x, int y) const {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].x == x && cells[i].y == y) return static_cast<StateId>(i);
  }
  return kUnknownState;
}

namespace {

std::vector<ActionId> pad_script(std::vector<MazeAction> moves, int horizon) {
  std::vector<ActionId> out;
  for (auto m : moves) out.push_back(static_cast<ActionId>(m));
  while (static_cast<int>(out.size()) < horizon) out.push_back(static_cast<ActionId>(MazeAction::Stay));
  return out;
}

}  // namespace

std::vector<ActionId> GridMaze::detour_script() const {
  using enum MazeAction;
  return pad_script({Left, Down, Right, Right, Right}, mdp.horizon());
}

std::vector<ActionId> GridMaze::stitch_script() const {
  return pad_script({MazeAction::Down}, mdp.horizon());
}

Trajectory replay_script(const MdpSpec& mdp, StateId start, const std::vector<ActionId>& actions) {
  if (static_cast<int>(actions.size()) != mdp.horizon()) {
    throw std::invalid_argument("replay_script: script length must equal the horizon");
  }
  std::vector<Step> steps;
  StateId s = start;
  for (int h = 0; h < mdp.horizon(); ++h) {
    const ActionId a = actions[h];
    steps.push_back({s, a, mdp.reward(h, s, a)});
    s = mdp.next_state(s, a);
  }
  return Trajectory(std::move(steps), s);
}

GridMaze build_grid_maze(int horizon) {
  constexpr int kDetourMoves = 5;
  if (horizon < kDetourMoves + 1) {
    throw std::invalid_argument("build_grid_maze: horizon must be at least " +
                                std::to_string(kDetourMoves + 1));
  }
  GridMaze maze{{{"S", 1, 1}, {"A", 0, 1}, {"B", 0, 0}, {"M", 1, 0}, {"C", 2, 0}, {"G", 3, 0}},
                0, 1, 2, 3, 5,
                MdpSpec::deterministic(1, 1, 1, {1.0}, {0}, {0.0})};
  const int n = static_cast<int>(maze.cells.size());

  std::vector<StateId> next(static_cast<std::size_t>(n) * kMazeActions);
  std::vector<double> reward(next.size(), 0.0);
  constexpr std::array<std::array<int, 2>, kMazeActions> kDelta{{{0, 1}, {0, -1}, {-1, 0}, {1, 0}, {0, 0}}};
  for (StateId s = 0; s < n; ++s) {
    for (ActionId a = 0; a < kMazeActions; ++a) {
      StateId to = s;
      if (s != maze.goal) {
        const StateId target = maze.cell_at(maze.cells[s].x + kDelta[a][0], maze.cells[s].y + kDelta[a][1]);
        if (target != kUnknownState) to = target;
      }
      next[s * kMazeActions + a] = to;
      reward[s * kMazeActions + a] = to == maze.goal ? 1.0 : 0.0;
    }
  }
  std::vector<double> init(n, 0.0);
  init[maze.start] = 1.0;
  maze.mdp = MdpSpec::deterministic(horizon, n, kMazeActions, std::move(init), next, std::move(reward));

  // Construction invariants: the optimum is only reachable by stitching.
  const auto values = exact_optimal_values(maze.mdp);
  const auto detour = replay_script(maze.mdp, maze.start, maze.detour_script());
  const auto stitch = replay_script(maze.mdp, maze.start, maze.stitch_script());
  const double dataset_best = std::max(detour.total_return(), stitch.total_return());
  if (!(values.optimal_return > dataset_best)) {
    throw std::logic_error("build_grid_maze: optimal return does not exceed the scripted returns");
  }
  return maze;
}

std::vector<Trajectory> generate_maze_dataset(const GridMaze& maze, int n_detour, int n_stitch,
                                              std::uint64_t /*rng_seed*/) {
  if (n_detour < 0 || n_stitch < 0) throw std::invalid_argument("generate_maze_dataset: negative count");
  std::vector<Trajectory> out;
  const auto detour = replay_script(maze.mdp, maze.start, maze.detour_script());
  const auto stitch = replay_script(maze.mdp, maze.start, maze.stitch_script());
  for (int i = 0; i < n_detour; ++i) out.push_back(detour);
  for (int i = 0; i < n_stitch; ++i) out.push_back(stitch);
  return out;
}

}  // namespace rcsl
