#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opeval/rng.hpp"

namespace opeval {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

// One Q-annotated step of an episode. Q annotations are stored on the
// transition rather than recomputed from a table, so externally logged data
// with no table goes through the same metric code path.
struct Transition {
  int t = 1;  // 1-based step index
  StateId state = 0;
  ActionId action = 0;
  double reward = 0.0;
  double q_sa = 0.0;
  double q_greedy_s = 0.0;                  // max_a Q(s_t, a)
  std::optional<double> q_greedy_next;      // max_a Q(s_{t+1}, a); absent iff terminal
  bool annotated = false;
};

struct Episode {
  std::string id;
  std::vector<Transition> transitions;
  double final_reward = 0.0;

  int length() const { return static_cast<int>(transitions.size()); }
  bool successful() const { return final_reward == 1.0; }
  double total_return() const {
    double sum = 0.0;
    for (const auto& tr : transitions) sum += tr.reward;
    return sum;
  }
};

struct Dataset {
  std::vector<Episode> episodes;
  std::string env_id;
  std::string behavior_descriptor;
  std::uint64_t seed = 0;
};

struct QTable {
  std::size_t state_count = 0;
  std::size_t action_count = 0;
  std::vector<double> values;  // row-major [state][action]
  std::string id;

  QTable() = default;
  QTable(std::size_t states, std::size_t actions, std::string table_id = "")
      : state_count(states),
        action_count(actions),
        values(states * actions, 0.0),
        id(std::move(table_id)) {}

  double& at(StateId s, ActionId a) { return values[s * action_count + a]; }
  double at(StateId s, ActionId a) const { return values[s * action_count + a]; }
};

struct Policy {
  enum class Kind { Argmax, UniformRandom, EpsilonGreedy };
  Kind kind = Kind::UniformRandom;
  QTable table;         // used by Argmax and EpsilonGreedy
  double epsilon = 0.0;

  static Policy argmax_of(QTable q) {
    Policy p;
    p.kind = Kind::Argmax;
    p.table = std::move(q);
    return p;
  }
  static Policy uniform_random() { return Policy{}; }
  static Policy epsilon_greedy(QTable q, double eps) {
    if (eps < 0.0 || eps > 1.0) throw std::invalid_argument("epsilon outside [0,1]");
    Policy p;
    p.kind = Kind::EpsilonGreedy;
    p.table = std::move(q);
    p.epsilon = eps;
    return p;
  }
};

// Greedy action with deterministic tie-break to the lowest action index.
inline ActionId argmax_action(const QTable& q, StateId s) {
  if (s >= q.state_count) throw std::invalid_argument("state index out of range");
  ActionId best = 0;
  double best_v = q.at(s, 0);
  for (ActionId a = 1; a < q.action_count; ++a) {
    if (q.at(s, a) > best_v) {
      best_v = q.at(s, a);
      best = a;
    }
  }
  return best;
}

struct LabelSummary {
  std::size_t n_transitions = 0;
  std::size_t n_positive = 0;
  // One entry per transition in episode-major order; true iff the owning
  // episode ended in success.
  std::vector<bool> labels;
};

// Labels are derived from episode outcomes, never stored on transitions.
inline LabelSummary label_positives(const Dataset& d) {
  LabelSummary out;
  for (const auto& ep : d.episodes) {
    const bool pos = ep.successful();
    for (std::size_t i = 0; i < ep.transitions.size(); ++i) {
      out.labels.push_back(pos);
      ++out.n_transitions;
      if (pos) ++out.n_positive;
    }
  }
  return out;
}

// Exact action distribution of a policy at state s (used by DP oracles).
inline std::vector<double> action_probabilities(const Policy& p, StateId s,
                                                std::size_t n_actions) {
  std::vector<double> probs(n_actions, 0.0);
  switch (p.kind) {
    case Policy::Kind::Argmax:
      probs[argmax_action(p.table, s)] = 1.0;
      break;
    case Policy::Kind::UniformRandom:
      for (auto& v : probs) v = 1.0 / static_cast<double>(n_actions);
      break;
    case Policy::Kind::EpsilonGreedy: {
      for (auto& v : probs) v = p.epsilon / static_cast<double>(n_actions);
      probs[argmax_action(p.table, s)] += 1.0 - p.epsilon;
      break;
    }
  }
  return probs;
}

inline ActionId sample_action(const Policy& p, StateId s, std::size_t n_actions,
                              RngStream& rng) {
  switch (p.kind) {
    case Policy::Kind::Argmax:
      return argmax_action(p.table, s);
    case Policy::Kind::UniformRandom:
      return static_cast<ActionId>(rng.uniform_int(n_actions));
    case Policy::Kind::EpsilonGreedy:
      if (rng.uniform() < p.epsilon)
        return static_cast<ActionId>(rng.uniform_int(n_actions));
      return argmax_action(p.table, s);
  }
  throw std::logic_error("unreachable policy kind");
}

// Structural checks shared by file ingestion and in-memory construction.
// binary_strict additionally enforces {0,1} terminal rewards and zero
// intermediate rewards.
void validate_dataset(const Dataset& d, bool binary_strict);

// Verifies transition Q annotations against a table they were supposedly
// produced from. Throws std::invalid_argument describing the first mismatch.
void validate_annotations(const Dataset& d, const QTable& q);

}  // namespace opeval
