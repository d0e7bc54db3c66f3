#include "rcsl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "rcsl/learners.hpp"
#include "rcsl/mbrcsl.hpp"
#include "rcsl/mdp.hpp"
#include "rcsl/analysis.hpp"

namespace rcsl {

WidthRule WidthRule::parse(const std::string& text) {
  WidthRule rule;
  rule.text_ = text;
  if (text.empty()) throw std::invalid_argument("width rule: empty");
  try {
    if (text.back() == 'u') {
      const std::string factor = text.substr(0, text.size() - 1);
      std::size_t used = 0;
      rule.factor_ = factor.empty() ? 1.0 : std::stod(factor, &used);
      if (!factor.empty() && used != factor.size()) throw std::invalid_argument(text);
      if (!(rule.factor_ > 0.0)) throw std::invalid_argument(text);
    } else {
      std::size_t used = 0;
      rule.fixed_ = std::stoi(text, &used);
      if (used != text.size() || rule.fixed_ < 1) throw std::invalid_argument(text);
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("width rule: expected a positive integer or a multiple of u, got '" + text + "'");
  }
  return rule;
}

int WidthRule::resolve(int u) const {
  if (fixed_ > 0) return fixed_;
  return std::max(1, static_cast<int>(std::lround(factor_ * u)));
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads) : std::thread::hardware_concurrency();
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------

namespace {

struct LinearQCell {
  std::string method;
  int u;
  int width;
  std::uint64_t seed;
};

}  // namespace

ExperimentReport run_linearq_sim(const LinearQSimConfig& config) {
  config.train.validate();
  ExperimentReport report("linearq-sim", {"method", "u", "width", "seed", "k", "optimal_return", "achieved_return",
                                          "gap", "gap_k", "final_loss"});
  report.set_param("epochs", std::to_string(config.train.epochs));
  report.set_param("learning_rate", std::to_string(config.train.learning_rate));
  report.set_param("batch_size", std::to_string(config.train.batch_size));
  report.set_param("target_update_epochs", std::to_string(config.target_update_epochs));
  report.set_param("dataset_n", std::to_string(config.dataset_n));

  std::vector<LinearQCell> cells;
  for (int u : config.u_values) {
    if (u < 1) throw std::invalid_argument("linearq-sim: u must be >= 1");
    for (auto seed : config.seeds) cells.push_back({"naive", u, 0, seed});
    for (const auto& w : config.rcsl_widths) {
      for (auto seed : config.seeds) cells.push_back({"rcsl", u, w.resolve(u), seed});
    }
    std::vector<int> ql_widths;
    for (const auto& w : config.ql_widths) {
      const int width = w.resolve(u);
      if (std::find(ql_widths.begin(), ql_widths.end(), width) == ql_widths.end()) ql_widths.push_back(width);
    }
    for (int width : ql_widths) {
      for (auto seed : config.seeds) cells.push_back({"ql", u, width, seed});
    }
  }

  std::vector<ReportRow> rows(cells.size());
  parallel_for(cells.size(), config.threads, [&](std::size_t i) {
    const auto& cell = cells[i];
    const auto env = build_linearq(cell.u);
    const int n_states = env.mdp.n_states();
    const double optimal = exact_optimal_values(env.mdp).optimal_return;
    const double state_scale = 1.0 / (n_states - 1);
    TrainConfig train = config.train;
    train.seed = cell.seed;

    double achieved = 0.0;
    double loss = 0.0;
    if (cell.method == "naive") {
      const auto naive = MarkovPolicy::stationary_deterministic(env.mdp.horizon(), 2, std::vector<ActionId>(n_states, 0));
      achieved = rollout_markov(env.mdp, naive, cell.seed).total_return();
    } else {
      const auto data = build_linearq_dataset(cell.u, config.dataset_n, cell.seed);
      if (cell.method == "rcsl") {
        RcslTrainSpec spec{2, cell.width, {state_scale, 1.0 / env.k}};
        auto trained = train_mlp_rcsl(build_rtg_dataset(data), spec, train);
        achieved = evaluate_return_conditioned(env.mdp, trained.policy, optimal, cell.seed);
        loss = trained.loss_curve.back();
      } else {
        QLearnerOptions options;
        options.width = cell.width;
        options.target_update_epochs = config.target_update_epochs;
        options.state_scale = state_scale;
        auto learner = train_q_learning(data, n_states, 2, train, options);
        achieved = rollout_markov(env.mdp, learner.greedy_policy(env.mdp.horizon()), cell.seed).total_return();
        loss = learner.loss_curve.back();
      }
    }
    const double gap = optimal - achieved;
    rows[i] = ReportRow{{"method", cell.method},
                        {"u", std::int64_t{cell.u}},
                        {"width", std::int64_t{cell.width}},
                        {"seed", static_cast<std::int64_t>(cell.seed)},
                        {"k", env.k},
                        {"optimal_return", optimal},
                        {"achieved_return", achieved},
                        {"gap", gap},
                        {"gap_k", gap / env.k},
                        {"final_loss", loss}};
  });
  for (auto& r : rows) report.add_row(std::move(r));
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport run_reward_ambiguity(const RewardAmbiguityConfig& config) {
  config.train.validate();
  ExperimentReport report("reward-ambiguity", {"h0", "seed", "g_star", "j_m1", "j_m2", "max_gap", "p_left",
                                               "first_step_sum", "identity_residual", "datasets_equal"});
  report.set_param("k0", std::to_string(config.k0));
  report.set_param("r_good", std::to_string(config.r_good));
  report.set_param("r_bad", std::to_string(config.r_bad));
  report.set_param("width", std::to_string(config.width));

  for (int h0 : config.h0_values) {
    const auto pair = build_reward_ambiguity_pair(h0, config.k0, config.r_good, config.r_bad);
    const auto rtg1 = build_rtg_dataset(pair.d1);
    const auto rtg2 = build_rtg_dataset(pair.d2);
    const bool equal = same_multiset(rtg1, rtg2, 1e-9);
    const double g_star = exact_optimal_values(pair.m1).optimal_return;
    const int H = pair.m1.horizon();

    for (auto seed : config.seeds) {
      TrainConfig train = config.train;
      train.seed = seed;
      RcslTrainSpec spec{2, config.width, {1.0, 1.0 / H}};
      const auto trained = train_mlp_rcsl(rtg1, spec, train);
      const double j1 = exact_expected_return_rc(pair.m1, trained.policy, g_star);
      const double j2 = exact_expected_return_rc(pair.m2, trained.policy, g_star);

      const double p_left = trained.policy.act_markov(0, g_star)[kActionLeft];
      const double first1 = p_left * pair.m1.reward(0, 0, kActionLeft) + (1 - p_left) * pair.m1.reward(0, 0, kActionRight);
      const double first2 = p_left * pair.m2.reward(0, 0, kActionLeft) + (1 - p_left) * pair.m2.reward(0, 0, kActionRight);
      const double sum = first1 + first2;
      report.add_row({{"h0", std::int64_t{h0}},
                      {"seed", static_cast<std::int64_t>(seed)},
                      {"g_star", g_star},
                      {"j_m1", j1},
                      {"j_m2", j2},
                      {"max_gap", std::max(std::abs(g_star - j1), std::abs(g_star - j2))},
                      {"p_left", p_left},
                      {"first_step_sum", sum},
                      {"identity_residual", std::abs(sum - (config.r_good + config.r_bad))},
                      {"datasets_equal", std::int64_t{equal ? 1 : 0}}});
    }
  }
  return report;
}

ExperimentReport run_stitching(const StitchingConfig& config) {
  ExperimentReport report("stitching", {"seed", "g_star", "j_exact", "j_mc", "j_mc_stderr", "p_a1"});
  report.set_param("mc_episodes", std::to_string(config.mc_episodes));
  const auto inst = build_stitch_counterexample();
  const auto policy = build_mixture_rc_policy(inst.dataset, inst.mdp.n_actions());
  const double g_star = exact_optimal_values(inst.mdp).optimal_return;
  const double j = exact_expected_return_rc(inst.mdp, policy, g_star);
  RcContext start;
  start.state = 0;
  start.rtg = g_star;
  const double p_a1 = policy.act(start)[0];
  for (auto seed : config.seeds) {
    const auto mc = monte_carlo_return_rc(inst.mdp, policy, g_star, seed, config.mc_episodes);
    report.add_row({{"seed", static_cast<std::int64_t>(seed)},
                    {"g_star", g_star},
                    {"j_exact", j},
                    {"j_mc", mc.mean},
                    {"j_mc_stderr", mc.std_error},
                    {"p_a1", p_a1}});
  }
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport run_mbrcsl_maze(const MazeConfig& config) {
  config.train.validate();
  ExperimentReport report("mbrcsl-maze", {"seed", "mbrcsl_return", "rcsl_return", "dataset_max", "optimal_return",
                                          "desired_rtg", "g_max", "min_kept_return", "kept", "attempts_used",
                                          "high_return_rate"});
  report.set_param("horizon", std::to_string(config.horizon));
  report.set_param("n_detour", std::to_string(config.n_detour));
  report.set_param("n_stitch", std::to_string(config.n_stitch));
  report.set_param("n_target", std::to_string(config.n_target));
  report.set_param("max_attempts", std::to_string(config.max_attempts));
  report.set_param("width", std::to_string(config.width));
  report.set_param("rtg_scale", std::to_string(config.rtg_scale));
  report.set_param("epochs", std::to_string(config.train.epochs));

  const auto maze = build_grid_maze(config.horizon);
  const double optimal = exact_optimal_values(maze.mdp).optimal_return;
  const RcslInputScaling scaling{1.0 / (maze.mdp.n_states() - 1), config.rtg_scale};

  std::vector<ReportRow> rows(config.seeds.size());
  parallel_for(config.seeds.size(), config.threads, [&](std::size_t i) {
    const auto seed = config.seeds[i];
    const auto offline = generate_maze_dataset(maze, config.n_detour, config.n_stitch, seed);
    double dataset_max = -std::numeric_limits<double>::infinity();
    for (const auto& t : offline) dataset_max = std::max(dataset_max, t.total_return());

    TrainConfig train = config.train;
    train.seed = seed;
    RolloutConfig rollout{config.n_target, config.max_attempts, seed, config.horizon};
    MbrcslOptions options{config.width, scaling, config.eval_episodes, seed};
    const auto result = run_mbrcsl(offline, maze.mdp, rollout, train, options);

    double min_kept = std::numeric_limits<double>::infinity();
    for (const auto& t : result.report.rollout_dataset) min_kept = std::min(min_kept, t.total_return());

    RcslTrainSpec spec{maze.mdp.n_actions(), config.width, scaling};
    const auto plain = train_mlp_rcsl(build_rtg_dataset(offline), spec, train);
    const double plain_return = mean_return_rc(maze.mdp, plain.policy, optimal, seed, config.eval_episodes);

    rows[i] = ReportRow{{"seed", static_cast<std::int64_t>(seed)},
                        {"mbrcsl_return", result.eval_return},
                        {"rcsl_return", plain_return},
                        {"dataset_max", dataset_max},
                        {"optimal_return", optimal},
                        {"desired_rtg", result.desired_rtg},
                        {"g_max", result.report.g_max},
                        {"min_kept_return", min_kept},
                        {"kept", static_cast<std::int64_t>(result.report.rollout_dataset.size())},
                        {"attempts_used", static_cast<std::int64_t>(result.report.attempts_used)},
                        {"high_return_rate", result.report.high_return_rate}};
  });
  for (auto& r : rows) report.add_row(std::move(r));
  return report;
}

// ---------------------------------------------------------------------------

ExperimentReport run_lower_bound(const std::vector<int>& u_values) {
  ExperimentReport report("lower-bound", {"u", "n_states", "nonzero", "lower_bound"});
  for (int u : u_values) {
    const auto cert = linearq_lower_bound(u);
    report.add_row({{"u", std::int64_t{u}},
                    {"n_states", std::int64_t{3 * u + 3}},
                    {"nonzero", static_cast<std::int64_t>(cert.nonzero_count)},
                    {"lower_bound", static_cast<std::int64_t>(cert.min_hidden_neurons)}});
  }
  return report;
}

}  // namespace rcsl
