#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "rcsl/environments.hpp"
#include "rcsl/mdp.hpp"
#include "test_util.hpp"

using namespace rcsl;

TEST(LinearQ, Dimensions) {
  for (int u : {1, 3, 10}) {
    const auto env = build_linearq(u);
    EXPECT_EQ(env.mdp.n_states(), 3 * u + 3);
    EXPECT_EQ(env.mdp.n_actions(), 2);
    EXPECT_EQ(env.mdp.horizon(), 3 * u + 3);
    EXPECT_EQ(env.mdp.initial_dist()[0], 1.0);
    EXPECT_TRUE(env.mdp.is_deterministic());
    EXPECT_DOUBLE_EQ(env.k, 1.0 / (3 * u + 1));
  }
  EXPECT_THROW(build_linearq(0), std::invalid_argument);
}

TEST(LinearQ, HandSubstitutedEntries) {
  const auto e1 = build_linearq(1);
  EXPECT_DOUBLE_EQ(e1.k, 0.25);
  EXPECT_DOUBLE_EQ(e1.mdp.reward(0, 0, 0), 0.5);
  EXPECT_EQ(e1.mdp.next_state(1, 0), 2);

  const auto e2 = build_linearq(2);
  EXPECT_NEAR(e2.mdp.reward(0, 3, 0), 0.5, 1e-15);
  EXPECT_EQ(e2.mdp.next_state(3, 0), 3 * 2 + 1);  // odd s in [u+1, 2u]
  EXPECT_EQ(e2.mdp.next_state(4, 0), 3 * 2 + 2);  // even s in [u+1, 2u]
  EXPECT_EQ(e2.mdp.next_state(1, 1), 3 * 2 + 1);  // odd s <= u
  EXPECT_EQ(e2.mdp.next_state(2, 1), 3 * 2 + 2);  // even s <= u
}

TEST(LinearQ, AbsorbingLastState) {
  for (int u = 1; u <= 8; ++u) {
    const auto env = build_linearq(u);
    const StateId last = 3 * u + 2;
    for (ActionId a = 0; a < 2; ++a) EXPECT_EQ(env.mdp.next_state(last, a), last);
    EXPECT_EQ(env.mdp.reward(0, last, 1), 0.0);
    EXPECT_EQ(env.mdp.reward(0, last, 0), 0.0);
  }
}

TEST(LinearQ, RewardsNonNegativeAndBounded) {
  // r(0, 1) = (3u + 1.5) k is the largest reward and sits just above 1.
  for (int u = 1; u <= 40; ++u) {
    const auto env = build_linearq(u);
    const double cap = (3.0 * u + 1.5) * env.k;
    EXPECT_DOUBLE_EQ(env.mdp.reward(0, 0, 1), cap);
    for (StateId s = 0; s < env.mdp.n_states(); ++s) {
      for (ActionId a = 0; a < 2; ++a) {
        EXPECT_GE(env.mdp.reward(0, s, a), 0.0);
        EXPECT_LE(env.mdp.reward(0, s, a), cap);
      }
    }
  }
}

TEST(LinearQ, ClosedFormMatchesBackwardInduction) {
  for (int u = 1; u <= 64; ++u) {
    const auto env = build_linearq(u);
    const auto ref = linearq_reference(u);
    const auto v = exact_optimal_values(env.mdp);
    double worst = 0.0;
    for (StateId s = 0; s < env.mdp.n_states(); ++s) {
      for (ActionId a = 0; a < 2; ++a) worst = std::max(worst, std::abs(ref.q_star(s, a) - v.q(0, s, a)));
    }
    EXPECT_LE(worst, 1e-9) << "u=" << u;
    EXPECT_NEAR(v.optimal_return, ref.v_star_0(), 1e-9);
  }
}

TEST(LinearQ, ReferenceValues) {
  const auto ref = linearq_reference(4);
  EXPECT_NEAR(ref.v_star_0(), 18.0 / 13.0, 1e-15);
  EXPECT_EQ(ref.pi_star_action(5), 1);
  EXPECT_EQ(ref.pi_star_action(4), 0);
  for (ActionId a = 0; a < 2; ++a) EXPECT_EQ(ref.q_star(14, a), 0.0);
  EXPECT_THROW(ref.q_star(15, 0), std::out_of_range);
  EXPECT_THROW(ref.q_star(-1, 0), std::out_of_range);
  EXPECT_TRUE(ref.pi_star().is_deterministic());
}

TEST(LinearQDataset, CountsAndOrdering) {
  const int u = 2, n = 2;
  const auto data = build_linearq_dataset(u, n, 5);
  const int S = 3 * u + 3;
  ASSERT_EQ(data.size(), static_cast<std::size_t>(4 * S * n));
  const double vstar = linearq_reference(u).v_star_0();
  for (int i = 0; i < 3 * S * n; ++i) EXPECT_NEAR(data[i].total_return(), vstar, 1e-12);
  for (const auto& t : data) EXPECT_EQ(t.size(), static_cast<std::size_t>(S));
  EXPECT_THROW(build_linearq_dataset(u, 0, 0), std::invalid_argument);
}

TEST(LinearQDataset, LaterDeviationsCollideWithEarlierOnes) {
  // A deviation at s' in [u+1, 2u+1] lowers the RTG at s = 2u+1-s' to
  // exactly Q*(s, 1), the context the deviation at s labels with action 1.
  for (int u : {1, 2, 5, 8}) {
    const auto env = build_linearq(u);
    const auto ref = linearq_reference(u);
    const auto rtg = build_rtg_dataset(build_linearq_dataset(u, 1, 0));
    for (StateId s = 0; s <= u; ++s) {
      bool saw0 = false, saw1 = false;
      for (const auto& t : rtg.triples) {
        if (t.state != s || std::abs(t.rtg - ref.q_star(s, 1)) > env.k / 10) continue;
        (t.action == 0 ? saw0 : saw1) = true;
      }
      EXPECT_TRUE(saw0 && saw1) << "u=" << u << " s=" << s;
    }
    // Those u+1 contexts, (s, Q*(s, 0)) for s in [u+1, 2u], and the absorbing
    // state at RTG 0.
    EXPECT_EQ(rcsl::testing::label_conflicts(rtg, 2, env.k / 2).conflicting_contexts,
              static_cast<std::size_t>(2 * u + 2));
  }
}

TEST(LinearQDataset, SeedDoesNotChangeContent) {
  EXPECT_EQ(build_linearq_dataset(3, 1, 0), build_linearq_dataset(3, 1, 99));
}

TEST(LinearQDataset, SuboptimalActionCarriesItsQValue) {
  for (int u : {2, 5, 8}) {
    const auto ref = linearq_reference(u);
    const auto data = build_linearq_dataset(u, 1, 0);
    std::set<StateId> seen;
    for (const auto& t : data) {
      for (std::size_t h = 0; h < t.size(); ++h) {
        const auto& st = t[h];
        if (st.action == ref.pi_star_action(st.state)) continue;
        seen.insert(st.state);
        EXPECT_NEAR(t.rtg()[h], ref.q_star(st.state, st.action), ref.k() / 10) << "u=" << u << " s=" << st.state;
      }
    }
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(3 * u + 3));
  }
}

TEST(RewardAmbiguity, Shapes) {
  for (int h0 : {1, 3}) {
    for (int k0 : {1, 2}) {
      const auto p = build_reward_ambiguity_pair(h0, k0, 1.0, 0.0);
      for (const auto* m : {&p.m1, &p.m2}) {
        EXPECT_EQ(m->n_states(), 1);
        EXPECT_EQ(m->n_actions(), 2);
        EXPECT_EQ(m->horizon(), 2 * h0);
      }
      EXPECT_EQ(p.d1.size(), static_cast<std::size_t>(2 * k0));
      EXPECT_EQ(p.d2.size(), static_cast<std::size_t>(2 * k0));
    }
  }
  EXPECT_THROW(build_reward_ambiguity_pair(1, 1, 0.0, 0.0), std::invalid_argument);
  EXPECT_THROW(build_reward_ambiguity_pair(0, 1, 1.0, 0.0), std::invalid_argument);
}

TEST(RewardAmbiguity, FirstTripleAndOptimum) {
  const auto p = build_reward_ambiguity_pair(1, 1, 1.0, 0.0);
  const auto rtg = build_rtg_dataset(p.d1);
  EXPECT_EQ(rtg.triples.front(), (RtgTriple{0, 1.0, kActionLeft}));
  EXPECT_EQ(exact_optimal_values(p.m1).optimal_return, 2.0);
  EXPECT_EQ(exact_optimal_values(p.m2).optimal_return, 2.0);
}

TEST(RewardAmbiguity, RtgDatasetsAreIdenticalAcrossParameters) {
  const double rewards[][2] = {{1.0, 0.0}, {0.7, 0.1}, {2.5, -1.25}, {1e-3, 1e-4}, {0.3, 0.2}};
  for (int h0 = 1; h0 <= 5; ++h0) {
    for (int k0 = 1; k0 <= 3; ++k0) {
      for (const auto& r : rewards) {
        const auto p = build_reward_ambiguity_pair(h0, k0, r[0], r[1]);
        EXPECT_TRUE(same_multiset(build_rtg_dataset(p.d1), build_rtg_dataset(p.d2), 1e-9))
            << "h0=" << h0 << " k0=" << k0 << " r=" << r[0] << "," << r[1];
        EXPECT_DOUBLE_EQ(exact_optimal_values(p.m1).optimal_return, 2 * h0 * r[0]);
      }
    }
  }
}

TEST(RewardAmbiguity, DatasetRewardsMatchTheirMdp) {
  const auto p = build_reward_ambiguity_pair(2, 1, 1.0, 0.0);
  for (const auto& t : p.d1) {
    for (std::size_t h = 0; h < t.size(); ++h) EXPECT_EQ(t[h].reward, p.m1.reward(static_cast<int>(h), 0, t[h].action));
  }
  for (const auto& t : p.d2) {
    for (std::size_t h = 0; h < t.size(); ++h) EXPECT_EQ(t[h].reward, p.m2.reward(static_cast<int>(h), 0, t[h].action));
  }
}

TEST(StitchCounterexample, Structure) {
  const auto inst = build_stitch_counterexample();
  const auto v = exact_optimal_values(inst.mdp);
  EXPECT_EQ(v.optimal_return, 2.0);
  const auto pi = v.greedy_policy();
  EXPECT_EQ(pi.action(0, 0), 1);
  EXPECT_EQ(pi.action(1, 1), 1);
  ASSERT_EQ(inst.dataset.size(), 2u);
  for (const auto& t : inst.dataset) EXPECT_EQ(t.total_return(), 1.0);
  EXPECT_TRUE(coverage_checks(inst.dataset, inst.mdp).uniform);
}

TEST(GridMaze, LayoutAndScripts) {
  const auto maze = build_grid_maze();
  EXPECT_EQ(maze.mdp.n_actions(), kMazeActions);
  EXPECT_EQ(maze.mdp.horizon(), 8);
  EXPECT_EQ(maze.cell_at(1, 1), maze.start);
  EXPECT_EQ(maze.cell_at(0, 1), maze.a);
  EXPECT_EQ(maze.cell_at(0, 0), maze.b);
  EXPECT_EQ(maze.cell_at(1, 0), maze.m);
  EXPECT_EQ(maze.cell_at(3, 0), maze.goal);
  EXPECT_EQ(maze.cell_at(2, 1), kUnknownState);

  const auto detour = replay_script(maze.mdp, maze.start, maze.detour_script());
  const auto stitch = replay_script(maze.mdp, maze.start, maze.stitch_script());
  EXPECT_EQ(detour.total_return(), 4.0);
  EXPECT_EQ(stitch.total_return(), 0.0);
  EXPECT_EQ(exact_optimal_values(maze.mdp).optimal_return, 6.0);

  std::vector<StateId> visited;
  for (const auto& st : detour.steps()) visited.push_back(st.state);
  EXPECT_EQ(visited[1], maze.a);
  EXPECT_EQ(visited[2], maze.b);
  EXPECT_EQ(visited[3], maze.m);
}

TEST(GridMaze, BlockedMovesStayAndGoalAbsorbs) {
  const auto maze = build_grid_maze();
  const auto up = static_cast<ActionId>(MazeAction::Up);
  const auto right = static_cast<ActionId>(MazeAction::Right);
  EXPECT_EQ(maze.mdp.next_state(maze.start, up), maze.start);
  EXPECT_EQ(maze.mdp.next_state(maze.start, right), maze.start);
  for (ActionId a = 0; a < kMazeActions; ++a) {
    EXPECT_EQ(maze.mdp.next_state(maze.goal, a), maze.goal);
    EXPECT_EQ(maze.mdp.reward(0, maze.goal, a), 1.0);
  }
}

TEST(GridMaze, OptimalPathPassesThroughM) {
  const auto maze = build_grid_maze();
  const auto pi = exact_optimal_values(maze.mdp).greedy_policy();
  const auto t = rollout_markov(maze.mdp, pi, 0);
  EXPECT_EQ(t.total_return(), 6.0);
  EXPECT_EQ(t[1].state, maze.m);
}

TEST(GridMaze, HorizonTooShort) {
  EXPECT_THROW(build_grid_maze(5), std::invalid_argument);
  EXPECT_NO_THROW(build_grid_maze(6));
}

TEST(GridMaze, DatasetComposition) {
  const auto maze = build_grid_maze();
  const auto data = generate_maze_dataset(maze, 3, 2, 0);
  ASSERT_EQ(data.size(), 5u);
  double best = 0.0;
  for (const auto& t : data) best = std::max(best, t.total_return());
  EXPECT_LT(best, exact_optimal_values(maze.mdp).optimal_return);

  // Every transition of the optimal route S->M->C->G appears somewhere.
  const auto pi = exact_optimal_values(maze.mdp).greedy_policy();
  const auto opt = rollout_markov(maze.mdp, pi, 0);
  for (std::size_t h = 0; h < 3; ++h) {
    bool found = false;
    for (const auto& t : data) {
      for (const auto& st : t.steps()) found |= st.state == opt[h].state && st.action == opt[h].action;
    }
    EXPECT_TRUE(found) << "step " << h;
  }
}
