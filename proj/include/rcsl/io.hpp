#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "rcsl/analysis.hpp"
#include "rcsl/learners.hpp"
#include "rcsl/mbrcsl.hpp"
#include "rcsl/mdp.hpp"
#include "rcsl/nn.hpp"

namespace rcsl::io {

using nlohmann::json;

/// {"horizon","n_states","n_actions","initial_dist","deterministic",
///  "transition","reward","step_rewards"}. Deterministic transitions are a
/// [s][a] next-state table, stochastic ones a [s][a][s'] probability table.
json mdp_to_json(const MdpSpec& mdp);
MdpSpec mdp_from_json(const json& j);

/// {"steps":[[s,a,r],...]} plus "final_state" when known.
json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const json& j);

/// One trajectory per line.
void write_jsonl(std::ostream& out, std::span<const Trajectory> trajectories);
std::vector<Trajectory> read_jsonl(std::istream& in);

/// {"w1":[[..]],"b1":[..],"w2":[[..]],"b2":[..]}
json mlp_to_json(const Mlp2& net);
Mlp2 mlp_from_json(const json& j);

json rcsl_policy_to_json(const RcslMlpPolicy& policy);
json q_learner_to_json(const QLearner& learner);

/// Maps keyed by "s,a" (dynamics) and "s" (behavior).
json dynamics_to_json(const TabularDynamics& model);
json behavior_to_json(const TabularBehavior& model);

/// Summary fields; the rollout trajectories go through write_jsonl.
json rollout_report_to_json(const RolloutReport& report);

/// {"u":16,"nonzero":14,"lower_bound":7}
json certificate_to_json(int u, const LowerBoundCertificate& cert);

}  // namespace rcsl::io
