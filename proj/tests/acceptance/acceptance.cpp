// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Runtime limits are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "rcsl/analysis.hpp"
#include "rcsl/environments.hpp"
#include "rcsl/experiments.hpp"
#include "rcsl/learners.hpp"
#include "rcsl/mdp.hpp"
#include "rcsl/nn.hpp"
#include "rcsl/rng.hpp"
#include "test_util.hpp"

using namespace rcsl;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double time_limit_s;
  std::function<Verdict()> run;
};

// Boundary slack for gaps that land exactly on k/2 up to rounding.
constexpr double kGapSlack = 1e-9;

Verdict closed_form_q() {
  double worst = 0.0;
  int worst_u = 0;
  for (int u = 1; u <= 64; ++u) {
    const auto env = build_linearq(u);
    const auto ref = linearq_reference(u);
    const auto v = exact_optimal_values(env.mdp);
    for (StateId s = 0; s < env.mdp.n_states(); ++s) {
      for (ActionId a = 0; a < 2; ++a) {
        const double err = std::abs(ref.q_star(s, a) - v.q(0, s, a));
        if (err > worst) {
          worst = err;
          worst_u = u;
        }
      }
    }
  }
  return {worst <= 1e-9, "max |Q_closed - Q_dp| = " + format_cell(worst) + " (u=" + std::to_string(worst_u) + ")"};
}

Verdict analytic_policy() {
  Verdict out;
  for (int u : {2, 4, 8, 16}) {
    const auto env = build_linearq(u);
    const auto ref = linearq_reference(u);
    const RcslMlpPolicy pi(build_analytic_rcsl_policy(u), 2, {1.0, 1.0 / env.k});
    if (pi.net().width != 16) out.pass = false;
    const auto rtg = build_rtg_dataset(build_linearq_dataset(u, 1, 0));
    const double grid = env.k / 2;
    const auto conflicts = rcsl::testing::label_conflicts(rtg, 2, grid);
    const auto e = rcsl::testing::classification_errors(pi, rtg, conflicts, grid);
    const double g = evaluate_return_conditioned(env.mdp, pi, ref.v_star_0(), 0);
    out.pass &= e.errors == 0 && std::abs(g - ref.v_star_0()) <= env.k / 10;
    out.detail += "u=" + std::to_string(u) + ": errors " + std::to_string(e.errors) + "/" +
                  std::to_string(rtg.triples.size()) + " (outside label conflicts " +
                  std::to_string(e.outside_conflicts) + ", conflicting contexts " +
                  std::to_string(conflicts.conflicting_contexts) + ", floor " +
                  std::to_string(conflicts.irreducible_errors) + "), |J-V*|/k " +
                  format_cell(std::abs(g - ref.v_star_0()) / env.k) + "; ";
  }
  return out;
}

Verdict lower_bound() {
  Verdict out;
  for (int u = 16; u <= 160; u += 16) {
    const auto cert = linearq_lower_bound(u);
    if (cert.min_hidden_neurons != static_cast<std::size_t>((u - 2) / 2)) {
      out.pass = false;
      out.detail += "u=" + std::to_string(u) + " gave " + std::to_string(cert.min_hidden_neurons) + "; ";
    }
  }
  out.detail += "u=16 -> " + std::to_string(linearq_lower_bound(16).min_hidden_neurons) + ", u=160 -> " +
                std::to_string(linearq_lower_bound(160).min_hidden_neurons);
  return out;
}

Verdict linearq_separation() {
  LinearQSimConfig cfg;
  cfg.u_values = {16, 32};
  cfg.seeds = {0, 1, 2, 3};
  const auto report = run_linearq_sim(cfg);

  struct Tally {
    int hits = 0;
    int total = 0;
    std::string gaps;
  };
  std::map<std::string, Tally> cells;
  for (const auto& row : report.rows()) {
    const auto method = std::get<std::string>(row.at("method"));
    if (method == "naive") continue;
    const double gap_k = cell_as_double(row.at("gap_k"));
    const double k = cell_as_double(row.at("k"));
    const double gap = cell_as_double(row.at("gap"));
    const bool hit = method == "rcsl" ? gap <= k / 2 + kGapSlack : gap >= k / 2 - kGapSlack;
    auto& t = cells[method + " u=" + format_cell(row.at("u")) + " w=" + format_cell(row.at("width"))];
    t.hits += hit;
    ++t.total;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.4g", t.gaps.empty() ? "" : ",", gap_k);
    t.gaps += buf;
  }
  Verdict out;
  for (const auto& [name, t] : cells) {
    out.pass &= 4 * t.hits >= 3 * t.total;
    out.detail += name + " " + std::to_string(t.hits) + "/" + std::to_string(t.total) + " [gap_k " + t.gaps + "]; ";
  }
  return out;
}

Verdict reward_ambiguity() {
  RewardAmbiguityConfig cfg;
  cfg.h0_values = {1, 2};
  cfg.r_good = 1.0;
  cfg.r_bad = 0.0;
  const auto report = run_reward_ambiguity(cfg);
  Verdict out;
  double min_gap = 1e300, max_residual = 0.0;
  for (const auto& row : report.rows()) {
    min_gap = std::min(min_gap, cell_as_double(row.at("max_gap")));
    max_residual = std::max(max_residual, cell_as_double(row.at("identity_residual")));
  }
  out.pass = min_gap >= 0.5 - 1e-9 && max_residual <= 1e-12;
  out.detail = "min worst-case gap " + format_cell(min_gap) + ", max identity residual " + format_cell(max_residual) +
               " over " + std::to_string(report.rows().size()) + " runs";
  return out;
}

Verdict stitching() {
  const auto inst = build_stitch_counterexample();
  const auto pi = build_mixture_rc_policy(inst.dataset, 2);
  const double g_star = exact_optimal_values(inst.mdp).optimal_return;
  const double j = exact_expected_return_rc(inst.mdp, pi, 2.0);
  RcContext ctx;
  ctx.state = 0;
  ctx.rtg = 2.0;
  const double p = pi.act(ctx)[0];
  return {std::abs(j - 1.0) <= 1e-12 && j < g_star && g_star == 2.0 && std::abs(p - 0.5) <= 1e-12,
          "J(pi,2) = " + format_cell(j) + ", g* = " + format_cell(g_star) + ", P(a1|s1,2) = " + format_cell(p)};
}

Verdict maze() {
  MazeConfig cfg;
  cfg.seeds = {0, 1, 2, 3};
  const auto report = run_mbrcsl_maze(cfg);
  int filter_ok = 0, beats = 0, optimal = 0, rcsl_bounded = 0;
  std::string mb, rc;
  for (const auto& row : report.rows()) {
    const double dmax = cell_as_double(row.at("dataset_max"));
    const double mret = cell_as_double(row.at("mbrcsl_return"));
    const double rret = cell_as_double(row.at("rcsl_return"));
    filter_ok += cell_as_double(row.at("min_kept_return")) > cell_as_double(row.at("g_max"));
    beats += mret > dmax;
    optimal += mret == cell_as_double(row.at("optimal_return"));
    rcsl_bounded += rret <= dmax;
    mb += (mb.empty() ? "" : ",") + format_cell(mret);
    rc += (rc.empty() ? "" : ",") + format_cell(rret);
  }
  const int n = static_cast<int>(report.rows().size());
  return {filter_ok == n && 4 * beats >= 3 * n && 2 * optimal >= n && rcsl_bounded == n,
          "(a) filter " + std::to_string(filter_ok) + "/" + std::to_string(n) + " (b) MBRCSL returns [" + mb +
              "] beat max " + std::to_string(beats) + "/" + std::to_string(n) + ", optimal " + std::to_string(optimal) +
              "/" + std::to_string(n) + " (c) RCSL returns [" + rc + "] within max " + std::to_string(rcsl_bounded) +
              "/" + std::to_string(n)};
}

double gradient_check_worst() {
  double worst = 0.0;
  const double h = 1e-5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const int in_dim = 1 + static_cast<int>(seed % 3), width = 2 + static_cast<int>(seed % 7);
    const int out_dim = 1 + static_cast<int>(seed % 2);
    CounterRng rng(seed, 99);
    RegressionSet data(in_dim, out_dim);
    for (int i = 0; i < 16; ++i) {
      std::vector<double> x(in_dim), y(out_dim);
      for (auto& v : x) v = 2 * rng.uniform() - 1;
      for (auto& v : y) v = 2 * rng.uniform() - 1;
      data.add(x, y, out_dim > 1 && i % 2 ? static_cast<int>(rng.below(out_dim)) : -1);
    }
    auto net = Mlp2::random_init(in_dim, width, out_dim, seed + 1000);
    const auto grad = mse_gradient(net, data);
    const auto g = grad.tensors();
    auto p = net.tensors();
    for (std::size_t t = 0; t < p.size(); ++t) {
      for (std::size_t i = 0; i < p[t].size(); ++i) {
        const double saved = p[t][i];
        p[t][i] = saved + h;
        const double up = mse_loss(net, data);
        p[t][i] = saved - h;
        const double down = mse_loss(net, data);
        p[t][i] = saved;
        const double numeric = (up - down) / (2 * h);
        worst = std::max(worst, std::abs(numeric - g[t][i]) / std::max({std::abs(numeric), std::abs(g[t][i]), 1e-6}));
      }
    }
  }
  return worst;
}

Verdict hygiene() {
  Verdict out;
  const double worst = gradient_check_worst();
  out.pass &= worst < 1e-4;

  LinearQSimConfig lq;
  lq.u_values = {4};
  lq.seeds = {0, 1};
  lq.train.epochs = 30;
  lq.threads = 1;
  const auto a = run_linearq_sim(lq).to_csv();
  lq.threads = 4;
  const bool lq_same = a == run_linearq_sim(lq).to_csv();

  MazeConfig mz;
  mz.seeds = {5};
  mz.train.epochs = 20;
  mz.eval_episodes = 2;
  const bool maze_same = run_mbrcsl_maze(mz).to_csv() == run_mbrcsl_maze(mz).to_csv();

  const auto env = build_linearq(5);
  const auto pi = MarkovPolicy::stationary(env.mdp.horizon(), env.mdp.n_states(), 2,
                                           std::vector<double>(2 * env.mdp.n_states(), 0.5));
  bool rollouts_same = true;
  for (std::uint64_t e = 0; e < 20; ++e) rollouts_same &= rollout_markov(env.mdp, pi, 3, e) == rollout_markov(env.mdp, pi, 3, e);

  bool multiset_equal = true;
  int pairs = 0;
  for (int h0 = 1; h0 <= 6; ++h0) {
    for (int k0 = 1; k0 <= 3; ++k0) {
      for (auto [g, b] : {std::pair{1.0, 0.0}, {0.9, 0.3}, {2.0, -1.0}, {0.1, 0.07}}) {
        const auto pair = build_reward_ambiguity_pair(h0, k0, g, b);
        multiset_equal &= same_multiset(build_rtg_dataset(pair.d1), build_rtg_dataset(pair.d2), 1e-9);
        ++pairs;
      }
    }
  }
  out.pass &= lq_same && maze_same && rollouts_same && multiset_equal;
  out.detail = "max grad rel err " + format_cell(worst) + " (20 nets); reproducible: linearq " + (lq_same ? "yes" : "no") +
               ", maze " + (maze_same ? "yes" : "no") + ", rollouts " + (rollouts_same ? "yes" : "no") +
               "; D1/D2 RTG multisets equal in " + (multiset_equal ? "all " : "NOT all ") + std::to_string(pairs) +
               " configurations";
  return out;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "closed-form Q* equals backward induction, u=1..64", 1.0, closed_form_q},
      {2, "analytic 16-unit RCSL policy: zero error and optimal return", 1.0, analytic_policy},
      {3, "hidden-neuron lower bound equals (u-2)/2", 1.0, lower_bound},
      {4, "LinearQ: RCSL reaches optimum, Q-learning does not", 600.0, linearq_separation},
      {5, "reward ambiguity: worst-case gap >= 1/2 and first-step identity", 60.0, reward_ambiguity},
      {6, "stitching counterexample: J = 1 < g* = 2, P(a1) = 1/2", 1.0, stitching},
      {7, "maze: MBRCSL stitches, plain RCSL does not", 300.0, maze},
      {8, "gradients, reproducibility, dataset indistinguishability", 120.0, hygiene},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s [%d] %s (%.2fs, limit %.0fs%s)\n      %s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                c.time_limit_s, in_time ? "" : ", too slow", o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
