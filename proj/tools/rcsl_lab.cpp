// rcsl-lab: experiment driver for the return-conditioned learning library.
//
// Exit codes: 0 success, 1 usage error, 2 failed check or pipeline error.

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcsl/environments.hpp"
#include "rcsl/errors.hpp"
#include "rcsl/experiments.hpp"
#include "rcsl/io.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

struct Output {
  std::string path;
  std::string format = "csv";
};

struct TrainFlags {
  int epochs = 300;
  double lr = 1e-3;
  int batch_size = 64;
  int threads = 0;

  rcsl::TrainConfig config() const {
    rcsl::TrainConfig c;
    c.epochs = epochs;
    c.learning_rate = lr;
    c.batch_size = batch_size;
    return c;
  }
};

void add_output_flags(CLI::App* cmd, Output& out) {
  cmd->add_option("--out", out.path, "Output file (default: stdout)");
  cmd->add_option("--format", out.format, "Report format")->check(CLI::IsMember({"csv", "json"}));
}

void add_train_flags(CLI::App* cmd, TrainFlags& t) {
  cmd->add_option("--epochs", t.epochs, "Training epochs")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", t.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", t.batch_size, "Minibatch size")->check(CLI::PositiveNumber);
  cmd->add_option("--threads", t.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << text;
}

void emit(const rcsl::ExperimentReport& report, const Output& out) {
  write_text(out.path, out.format == "json" ? report.to_json().dump(2) + "\n" : report.to_csv());
}

std::vector<rcsl::WidthRule> parse_widths(const std::vector<std::string>& texts) {
  std::vector<rcsl::WidthRule> out;
  for (const auto& t : texts) out.push_back(rcsl::WidthRule::parse(t));
  return out;
}

// Checks print to stderr and turn the exit code into kExitFailure.
struct Checks {
  bool ok = true;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      std::cerr << "check failed: " << what << "\n";
    }
  }
  int exit_code() const { return ok ? 0 : kExitFailure; }
};

std::string fmt(double x) { return rcsl::format_cell(x); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Return-conditioned supervised learning experiments"};
  app.require_subcommand(1);

  std::vector<std::uint64_t> seeds{0, 1, 2, 3};
  auto add_seeds = [&](CLI::App* cmd) {
    cmd->add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',');
  };

  // linearq-sim
  Output lq_out;
  TrainFlags lq_train;
  std::vector<int> lq_u{16};
  std::vector<std::string> lq_width;
  int lq_n = 1;
  auto* lq = app.add_subcommand("linearq-sim", "Train RCSL and Q-learning on LinearQ and report return gaps");
  lq->add_option("--u", lq_u, "Comma-separated LinearQ sizes")->delimiter(',')->check(CLI::PositiveNumber);
  lq->add_option("--width", lq_width,
                 "Hidden widths for both learners, e.g. 16,u,2u (default: RCSL 16, Q-learning 16 and u)")
      ->delimiter(',');
  lq->add_option("--dataset-n", lq_n, "Trajectories per dataset policy")->check(CLI::PositiveNumber);
  add_seeds(lq);
  add_train_flags(lq, lq_train);
  add_output_flags(lq, lq_out);

  // counterexample
  Output ce_out;
  TrainFlags ce_train;
  std::string ce_kind;
  std::vector<int> ce_h0{1, 2};
  int ce_k0 = 1;
  double r_good = 1.0, r_bad = 0.0;
  int ce_width = 16;
  std::size_t mc_episodes = 10'000;
  auto* ce = app.add_subcommand("counterexample", "Check the reward-ambiguity and stitching counterexamples");
  ce->add_option("--kind", ce_kind, "Which counterexample")
      ->required()
      ->check(CLI::IsMember({"reward-ambiguity", "stitching"}));
  ce->add_option("--h0", ce_h0, "Half-horizons (reward-ambiguity)")->delimiter(',')->check(CLI::PositiveNumber);
  ce->add_option("--k0", ce_k0, "Copies of each trajectory (reward-ambiguity)")->check(CLI::PositiveNumber);
  ce->add_option("--r-good", r_good, "Good reward (reward-ambiguity)");
  ce->add_option("--r-bad", r_bad, "Bad reward (reward-ambiguity)");
  ce->add_option("--width", ce_width, "Policy hidden width (reward-ambiguity)")->check(CLI::PositiveNumber);
  ce->add_option("--mc-episodes", mc_episodes, "Monte Carlo episodes (stitching)")->check(CLI::PositiveNumber);
  add_seeds(ce);
  add_train_flags(ce, ce_train);
  add_output_flags(ce, ce_out);

  // mbrcsl-maze
  Output mz_out;
  TrainFlags mz_train;
  rcsl::MazeConfig mz;
  auto* maze = app.add_subcommand("mbrcsl-maze", "Compare MBRCSL with plain RCSL on the grid maze");
  maze->add_option("--horizon", mz.horizon, "Episode length")->check(CLI::Range(6, 1000));
  maze->add_option("--n-detour", mz.n_detour, "Detour trajectories in the dataset")->check(CLI::PositiveNumber);
  maze->add_option("--n-stitch", mz.n_stitch, "Stitch trajectories in the dataset")->check(CLI::PositiveNumber);
  maze->add_option("--n-target", mz.n_target, "Rollouts to keep")->check(CLI::PositiveNumber);
  maze->add_option("--max-attempts", mz.max_attempts, "Rollout attempt cap")->check(CLI::PositiveNumber);
  maze->add_option("--width", mz.width, "Policy hidden width")->check(CLI::PositiveNumber);
  maze->add_option("--rtg-scale", mz.rtg_scale, "Scale applied to the return-to-go input")->check(CLI::PositiveNumber);
  maze->add_option("--eval-episodes", mz.eval_episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  add_seeds(maze);
  add_train_flags(maze, mz_train);
  add_output_flags(maze, mz_out);

  // lower-bound
  Output lb_out;
  std::vector<int> lb_u;
  for (int u = 16; u <= 160; u += 16) lb_u.push_back(u);
  auto* lb = app.add_subcommand("lower-bound", "Hidden-neuron lower bound for the LinearQ reward");
  lb->add_option("--u", lb_u, "Comma-separated LinearQ sizes (each >= 3)")->delimiter(',')->check(CLI::Range(3, 1 << 20));
  add_output_flags(lb, lb_out);

  // env build
  std::string env_kind, env_out, env_dataset;
  int env_u = 16, env_h0 = 1, env_k0 = 1, env_n = 1;
  std::uint64_t env_seed = 0;
  auto* env = app.add_subcommand("env", "Environment utilities");
  env->require_subcommand(1);
  auto* build = env->add_subcommand("build", "Write an environment and its dataset as JSON");
  build->add_option("--kind", env_kind, "Environment")
      ->required()
      ->check(CLI::IsMember({"linearq", "reward-ambiguity", "stitching", "maze"}));
  build->add_option("--u", env_u, "LinearQ size")->check(CLI::PositiveNumber);
  build->add_option("--n", env_n, "LinearQ trajectories per policy; maze trajectories per script")
      ->check(CLI::PositiveNumber);
  build->add_option("--h0", env_h0, "Reward-ambiguity half-horizon")->check(CLI::PositiveNumber);
  build->add_option("--k0", env_k0, "Reward-ambiguity copies")->check(CLI::PositiveNumber);
  build->add_option("--seed", env_seed, "Dataset seed");
  build->add_option("--out", env_out, "Output JSON file (default: stdout)");
  build->add_option("--dataset", env_dataset, "Also write the dataset as JSON lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (lq->parsed()) {
      rcsl::LinearQSimConfig cfg;
      cfg.u_values = lq_u;
      if (!lq_width.empty()) cfg.rcsl_widths = cfg.ql_widths = parse_widths(lq_width);
      cfg.seeds = seeds;
      cfg.train = lq_train.config();
      cfg.threads = lq_train.threads;
      cfg.dataset_n = lq_n;
      emit(rcsl::run_linearq_sim(cfg), lq_out);
      return 0;
    }

    if (ce->parsed()) {
      Checks checks;
      if (ce_kind == "reward-ambiguity") {
        rcsl::RewardAmbiguityConfig cfg;
        cfg.h0_values = ce_h0;
        cfg.k0 = ce_k0;
        cfg.r_good = r_good;
        cfg.r_bad = r_bad;
        cfg.seeds = seeds;
        cfg.train = ce_train.config();
        cfg.width = ce_width;
        const auto report = rcsl::run_reward_ambiguity(cfg);
        emit(report, ce_out);
        const double bound = (r_good - r_bad) / 2.0;
        for (const auto& row : report.rows()) {
          const std::string where = "h0=" + rcsl::format_cell(row.at("h0")) + " seed=" + rcsl::format_cell(row.at("seed"));
          const double gap = rcsl::cell_as_double(row.at("max_gap"));
          checks.require(gap >= bound - 1e-9, where + ": max gap " + fmt(gap) + " < " + fmt(bound) + " (J_M1=" +
                                                  rcsl::format_cell(row.at("j_m1")) +
                                                  ", J_M2=" + rcsl::format_cell(row.at("j_m2")) + ")");
          const double residual = rcsl::cell_as_double(row.at("identity_residual"));
          checks.require(residual <= 1e-12, where + ": first-step rewards sum to " +
                                                rcsl::format_cell(row.at("first_step_sum")) + ", expected " +
                                                fmt(r_good + r_bad));
          checks.require(rcsl::cell_as_double(row.at("datasets_equal")) == 1.0,
                         where + ": RTG datasets of the two MDPs differ");
        }
      } else {
        rcsl::StitchingConfig cfg;
        cfg.seeds = seeds;
        cfg.mc_episodes = mc_episodes;
        const auto report = rcsl::run_stitching(cfg);
        emit(report, ce_out);
        for (const auto& row : report.rows()) {
          const double j = rcsl::cell_as_double(row.at("j_exact"));
          const double g = rcsl::cell_as_double(row.at("g_star"));
          checks.require(j < g, "J(pi, g*) = " + fmt(j) + " is not below g* = " + fmt(g));
        }
      }
      return checks.exit_code();
    }

    if (maze->parsed()) {
      mz.seeds = seeds;
      mz.train = mz_train.config();
      mz.threads = mz_train.threads;
      emit(rcsl::run_mbrcsl_maze(mz), mz_out);
      return 0;
    }

    if (lb->parsed()) {
      emit(rcsl::run_lower_bound(lb_u), lb_out);
      return 0;
    }

    if (build->parsed()) {
      using rcsl::io::json;
      auto traj_array = [](const std::vector<rcsl::Trajectory>& ts) {
        json a = json::array();
        for (const auto& t : ts) a.push_back(rcsl::io::trajectory_to_json(t));
        return a;
      };
      json doc{{"kind", env_kind}};
      std::vector<rcsl::Trajectory> dataset;
      if (env_kind == "linearq") {
        const auto e = rcsl::build_linearq(env_u);
        dataset = rcsl::build_linearq_dataset(env_u, env_n, env_seed);
        doc["u"] = env_u;
        doc["k"] = e.k;
        doc["mdp"] = rcsl::io::mdp_to_json(e.mdp);
      } else if (env_kind == "reward-ambiguity") {
        const auto p = rcsl::build_reward_ambiguity_pair(env_h0, env_k0, r_good, r_bad);
        doc["h0"] = env_h0;
        doc["k0"] = env_k0;
        doc["m1"] = rcsl::io::mdp_to_json(p.m1);
        doc["m2"] = rcsl::io::mdp_to_json(p.m2);
        doc["d2"] = traj_array(p.d2);
        dataset = p.d1;
      } else if (env_kind == "stitching") {
        const auto s = rcsl::build_stitch_counterexample();
        doc["mdp"] = rcsl::io::mdp_to_json(s.mdp);
        dataset = s.dataset;
      } else {
        const auto m = rcsl::build_grid_maze();
        json cells = json::array();
        for (const auto& c : m.cells) cells.push_back({{"name", c.name}, {"x", c.x}, {"y", c.y}});
        doc["cells"] = std::move(cells);
        doc["mdp"] = rcsl::io::mdp_to_json(m.mdp);
        dataset = rcsl::generate_maze_dataset(m, env_n, env_n, env_seed);
      }
      doc[env_kind == "reward-ambiguity" ? "d1" : "dataset"] = traj_array(dataset);
      write_text(env_out, doc.dump(2) + "\n");
      if (!env_dataset.empty()) {
        std::ostringstream lines;
        rcsl::io::write_jsonl(lines, dataset);
        write_text(env_dataset, lines.str());
      }
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
