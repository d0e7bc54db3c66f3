#include "rcsl/io.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

namespace rcsl::io {

json mdp_to_json(const MdpSpec& mdp) {
  const int H = mdp.horizon(), S = mdp.n_states(), A = mdp.n_actions();
  json j;
  j["horizon"] = H;
  j["n_states"] = S;
  j["n_actions"] = A;
  j["initial_dist"] = std::vector<double>(mdp.initial_dist().begin(), mdp.initial_dist().end());
  j["deterministic"] = mdp.is_deterministic();

  json transition = json::array();
  for (StateId s = 0; s < S; ++s) {
    json row = json::array();
    for (ActionId a = 0; a < A; ++a) {
      if (mdp.is_deterministic()) {
        row.push_back(mdp.next_state(s, a));
      } else {
        std::vector<double> p(S, 0.0);
        for (const auto& o : mdp.outcomes(s, a)) p[o.state] = o.prob;
        row.push_back(p);
      }
    }
    transition.push_back(std::move(row));
  }
  j["transition"] = std::move(transition);

  auto reward_layer = [&](int h) {
    json layer = json::array();
    for (StateId s = 0; s < S; ++s) {
      std::vector<double> r(A);
      for (ActionId a = 0; a < A; ++a) r[a] = mdp.reward(h, s, a);
      layer.push_back(r);
    }
    return layer;
  };
  j["step_rewards"] = mdp.has_step_rewards();
  if (mdp.has_step_rewards()) {
    json all = json::array();
    for (int h = 0; h < H; ++h) all.push_back(reward_layer(h));
    j["reward"] = std::move(all);
  } else {
    j["reward"] = reward_layer(0);
  }
  return j;
}

MdpSpec mdp_from_json(const json& j) {
  const int H = j.at("horizon").get<int>();
  const int S = j.at("n_states").get<int>();
  const int A = j.at("n_actions").get<int>();
  auto initial = j.at("initial_dist").get<std::vector<double>>();
  const bool deterministic = j.at("deterministic").get<bool>();

  const auto& tr = j.at("transition");
  if (static_cast<int>(tr.size()) != S) throw std::invalid_argument("mdp json: transition has wrong state count");
  std::vector<std::vector<Outcome>> rows;
  for (StateId s = 0; s < S; ++s) {
    if (static_cast<int>(tr[s].size()) != A) throw std::invalid_argument("mdp json: transition has wrong action count");
    for (ActionId a = 0; a < A; ++a) {
      if (deterministic) {
        rows.push_back({Outcome{tr[s][a].get<StateId>(), 1.0}});
      } else {
        const auto p = tr[s][a].get<std::vector<double>>();
        if (static_cast<int>(p.size()) != S) throw std::invalid_argument("mdp json: transition row has wrong length");
        std::vector<Outcome> row;
        for (StateId n = 0; n < S; ++n) {
          if (p[n] != 0.0) row.push_back({n, p[n]});
        }
        rows.push_back(std::move(row));
      }
    }
  }

  std::vector<double> rewards;
  const bool step_rewards = j.value("step_rewards", false);
  auto append_layer = [&](const json& layer) {
    if (static_cast<int>(layer.size()) != S) throw std::invalid_argument("mdp json: reward has wrong state count");
    for (StateId s = 0; s < S; ++s) {
      const auto r = layer[s].get<std::vector<double>>();
      if (static_cast<int>(r.size()) != A) throw std::invalid_argument("mdp json: reward has wrong action count");
      rewards.insert(rewards.end(), r.begin(), r.end());
    }
  };
  if (step_rewards) {
    if (static_cast<int>(j.at("reward").size()) != H) throw std::invalid_argument("mdp json: reward has wrong step count");
    for (const auto& layer : j.at("reward")) append_layer(layer);
  } else {
    append_layer(j.at("reward"));
  }
  return MdpSpec(H, S, A, std::move(initial), std::move(rows), std::move(rewards));
}

json trajectory_to_json(const Trajectory& t) {
  json steps = json::array();
  for (const auto& st : t.steps()) steps.push_back(json::array({st.state, st.action, st.reward}));
  json j{{"steps", std::move(steps)}};
  if (t.final_state() != kUnknownState) j["final_state"] = t.final_state();
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  std::vector<Step> steps;
  for (const auto& st : j.at("steps")) {
    if (!st.is_array() || st.size() != 3) throw std::invalid_argument("trajectory json: each step must be [s,a,r]");
    steps.push_back({st[0].get<StateId>(), st[1].get<ActionId>(), st[2].get<double>()});
  }
  return Trajectory(std::move(steps), j.value("final_state", kUnknownState));
}

void write_jsonl(std::ostream& out, std::span<const Trajectory> trajectories) {
  for (const auto& t : trajectories) out << trajectory_to_json(t).dump() << '\n';
}

std::vector<Trajectory> read_jsonl(std::istream& in) {
  std::vector<Trajectory> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(trajectory_from_json(json::parse(line)));
  }
  return out;
}

json mlp_to_json(const Mlp2& net) {
  auto matrix = [](const std::vector<double>& flat, int rows, int cols) {
    json m = json::array();
    for (int r = 0; r < rows; ++r) {
      m.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(r) * cols,
                                      flat.begin() + static_cast<std::ptrdiff_t>(r + 1) * cols));
    }
    return m;
  };
  return json{{"w1", matrix(net.w1, net.width, net.in_dim)},
              {"b1", net.b1},
              {"w2", matrix(net.w2, net.out_dim, net.width)},
              {"b2", net.b2}};
}

Mlp2 mlp_from_json(const json& j) {
  const auto w1 = j.at("w1").get<std::vector<std::vector<double>>>();
  const auto w2 = j.at("w2").get<std::vector<std::vector<double>>>();
  if (w1.empty() || w2.empty()) throw std::invalid_argument("mlp json: empty weight matrix");
  Mlp2 net = Mlp2::zeros(static_cast<int>(w1.front().size()), static_cast<int>(w1.size()),
                         static_cast<int>(w2.size()));
  for (int r = 0; r < net.width; ++r) {
    if (static_cast<int>(w1[r].size()) != net.in_dim) throw std::invalid_argument("mlp json: ragged w1");
    for (int c = 0; c < net.in_dim; ++c) net.w1_at(r, c) = w1[r][c];
  }
  for (int r = 0; r < net.out_dim; ++r) {
    if (static_cast<int>(w2[r].size()) != net.width) throw std::invalid_argument("mlp json: w2 does not match width");
    for (int c = 0; c < net.width; ++c) net.w2_at(r, c) = w2[r][c];
  }
  net.b1 = j.at("b1").get<std::vector<double>>();
  net.b2 = j.at("b2").get<std::vector<double>>();
  if (static_cast<int>(net.b1.size()) != net.width || static_cast<int>(net.b2.size()) != net.out_dim) {
    throw std::invalid_argument("mlp json: bias length mismatch");
  }
  return net;
}

json rcsl_policy_to_json(const RcslMlpPolicy& policy) {
  return json{{"net", mlp_to_json(policy.net())},
              {"n_actions", policy.n_actions()},
              {"state_scale", policy.scaling().state_scale},
              {"rtg_scale", policy.scaling().rtg_scale}};
}

json q_learner_to_json(const QLearner& learner) {
  return json{{"q_net", mlp_to_json(learner.q_net)},
              {"target_net", mlp_to_json(learner.target_net)},
              {"state_scale", learner.state_scale},
              {"target_update_epochs", learner.target_update_epochs},
              {"train_epochs", learner.train_epochs}};
}

json dynamics_to_json(const TabularDynamics& model) {
  json j = json::object();
  for (const auto& [key, row] : model.table()) {
    json outs = json::array();
    for (const auto& o : row) {
      outs.push_back({{"next_state", o.next_state}, {"reward", o.reward}, {"count", o.count}, {"prob", o.prob}});
    }
    j[std::to_string(key.first) + "," + std::to_string(key.second)] = std::move(outs);
  }
  return j;
}

json behavior_to_json(const TabularBehavior& model) {
  json j = json::object();
  for (const auto& [s, counts] : model.counts()) {
    j[std::to_string(s)] = {{"counts", counts}, {"probs", model.probabilities(s)}};
  }
  return j;
}

json rollout_report_to_json(const RolloutReport& report) {
  return json{{"g_max", report.g_max},
              {"kept", report.rollout_dataset.size()},
              {"attempts_used", report.attempts_used},
              {"discarded_unmodeled", report.discarded_unmodeled},
              {"high_return_rate", report.high_return_rate},
              {"reached_target", report.reached_target}};
}

json certificate_to_json(int u, const LowerBoundCertificate& cert) {
  return json{{"u", u}, {"nonzero", cert.nonzero_count}, {"lower_bound", cert.min_hidden_neurons}};
}

}  // namespace rcsl::io
