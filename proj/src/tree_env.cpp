#include "opeval/tree_env.hpp"

#include <sstream>
#include <stdexcept>

namespace opeval {

namespace {

// Distribution over the executed action given the chosen one.
inline void slip_probs(double slip, ActionId chosen, double out[2]) {
  out[0] = slip / 2.0;
  out[1] = slip / 2.0;
  out[chosen] += 1.0 - slip;
}

// Success probability of every state under the given policy.
std::vector<double> policy_values(const TreeEnv& env, const Policy& p) {
  const std::size_t n = env.state_count();
  std::vector<double> v(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    const StateId s = static_cast<StateId>(i);
    if (env.is_leaf(s)) {
      v[s] = env.is_success(s) ? 1.0 : 0.0;
      continue;
    }
    const auto pi = action_probabilities(p, s, TreeEnv::kActions);
    double val = 0.0;
    for (ActionId a = 0; a < TreeEnv::kActions; ++a) {
      if (pi[a] == 0.0) continue;
      double pa[2];
      slip_probs(env.slip, a, pa);
      for (ActionId e = 0; e < TreeEnv::kActions; ++e)
        val += pi[a] * pa[e] * v[env.child(s, e)];
    }
    v[s] = val;
  }
  return v;
}

}  // namespace

TreeEnv::TreeEnv(int depth_levels, std::set<StateId> success, double slip_prob)
    : depth(depth_levels), success_leaves(std::move(success)), slip(slip_prob) {
  if (depth < 2) throw std::invalid_argument("tree depth must be at least 2");
  if (slip < 0.0 || slip > 1.0) throw std::invalid_argument("slip outside [0,1]");
  if (success_leaves.empty())
    throw std::invalid_argument("success_leaves must be non-empty");
  for (StateId leaf : success_leaves)
    if (leaf < first_leaf() || leaf >= state_count())
      throw std::invalid_argument("success_leaves must contain leaf states");
}

std::string TreeEnv::id() const {
  std::ostringstream os;
  os << "tree-d" << depth << "-slip" << slip << "-succ";
  for (StateId leaf : success_leaves) os << "_" << leaf;
  return os.str();
}

StateId tree_reset(const TreeEnv& env, RngStream& rng) {
  return static_cast<StateId>(rng.uniform_int(env.internal_count()));
}

StepResult tree_step(const TreeEnv& env, StateId s, ActionId a, RngStream& rng) {
  if (s >= env.state_count() || env.is_leaf(s))
    throw std::invalid_argument("tree_step requires an internal state");
  if (a >= TreeEnv::kActions) throw std::invalid_argument("invalid action");
  ActionId executed = a;
  if (env.slip > 0.0 && rng.uniform() < env.slip)
    executed = static_cast<ActionId>(rng.uniform_int(TreeEnv::kActions));
  StepResult out;
  out.next = env.child(s, executed);
  out.terminal = env.is_leaf(out.next);
  out.reward = (out.terminal && env.is_success(out.next)) ? 1.0 : 0.0;
  return out;
}

double exact_return(const TreeEnv& env, const Policy& p, StartDistribution starts) {
  const auto v = policy_values(env, p);
  double sum = 0.0;
  std::size_t count = 0;
  if (starts == StartDistribution::kAllInternal) {
    for (StateId s = 0; s < env.first_leaf(); ++s) sum += v[s];
    count = env.internal_count();
  } else {
    const auto feas = feasibility_labels(env);
    for (StateId s = 0; s < env.first_leaf(); ++s)
      if (feas.feasible(s)) {
        sum += v[s];
        ++count;
      }
    if (count == 0)
      throw std::invalid_argument("no feasible internal starts");
  }
  return sum / static_cast<double>(count);
}

double monte_carlo_return(const TreeEnv& env, const Policy& p, int n_episodes,
                          RngStream& rng) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  double total = 0.0;
  for (int i = 0; i < n_episodes; ++i) {
    StateId s = tree_reset(env, rng);
    while (true) {
      const ActionId a = sample_action(p, s, TreeEnv::kActions, rng);
      const StepResult step = tree_step(env, s, a, rng);
      if (step.terminal) {
        total += step.reward;
        break;
      }
      s = step.next;
    }
  }
  return total / n_episodes;
}

FeasibilityMap feasibility_labels(const TreeEnv& env) {
  FeasibilityMap map;
  map.state_count = env.state_count();
  map.state_feasible.assign(map.state_count, false);
  map.pair_feasible.assign(map.state_count * TreeEnv::kActions, false);
  for (std::size_t i = map.state_count; i-- > 0;) {
    const StateId s = static_cast<StateId>(i);
    if (env.is_leaf(s)) {
      map.state_feasible[s] = env.is_success(s);
      continue;
    }
    for (ActionId a = 0; a < TreeEnv::kActions; ++a) {
      bool feasible = false;
      if (env.slip > 0.0) {
        // Both children are reachable with positive probability.
        feasible = map.state_feasible[env.child(s, 0)] ||
                   map.state_feasible[env.child(s, 1)];
      } else {
        feasible = map.state_feasible[env.child(s, a)];
      }
      map.pair_feasible[s * TreeEnv::kActions + a] = feasible;
      if (feasible) map.state_feasible[s] = true;
    }
  }
  return map;
}

MistakeBound first_mistake_error(const TreeEnv& env, const Policy& p) {
  const auto feas = feasibility_labels(env);
  MistakeBound out;

  // c: worst case over feasible pairs of the probability the executed action
  // lands in a catastrophic state.
  for (StateId s = 0; s < env.first_leaf(); ++s) {
    for (ActionId a = 0; a < TreeEnv::kActions; ++a) {
      if (!feas.feasible(s, a)) continue;
      double pa[2];
      slip_probs(env.slip, a, pa);
      double to_bad = 0.0;
      for (ActionId e = 0; e < TreeEnv::kActions; ++e)
        if (!feas.state_feasible[env.child(s, e)]) to_bad += pa[e];
      if (to_bad > out.c) out.c = to_bad;
    }
  }

  // epsilon_t: propagate mass conditioned on feasible actions and feasible
  // next states; mass that terminates at a leaf leaves the distribution.
  const int T = env.max_horizon();
  std::vector<double> mass(env.state_count(), 0.0);
  std::size_t feasible_starts = 0;
  for (StateId s = 0; s < env.first_leaf(); ++s)
    if (feas.feasible(s)) ++feasible_starts;
  for (StateId s = 0; s < env.first_leaf(); ++s)
    if (feas.feasible(s)) mass[s] = 1.0 / static_cast<double>(feasible_starts);

  double eps_sum = 0.0;
  for (int t = 1; t <= T; ++t) {
    double total = 0.0;
    for (StateId s = 0; s < env.first_leaf(); ++s) total += mass[s];
    std::vector<double> next_mass(env.state_count(), 0.0);
    if (total > 0.0) {
      double mistake = 0.0;
      for (StateId s = 0; s < env.first_leaf(); ++s) {
        if (mass[s] == 0.0) continue;
        const auto pi = action_probabilities(p, s, TreeEnv::kActions);
        for (ActionId a = 0; a < TreeEnv::kActions; ++a) {
          if (pi[a] == 0.0) continue;
          if (!feas.feasible(s, a)) {
            mistake += mass[s] * pi[a];
            continue;
          }
          double pa[2];
          slip_probs(env.slip, a, pa);
          for (ActionId e = 0; e < TreeEnv::kActions; ++e) {
            const StateId nxt = env.child(s, e);
            if (!env.is_leaf(nxt) && feas.state_feasible[nxt])
              next_mass[nxt] += mass[s] * pi[a] * pa[e];
          }
        }
      }
      eps_sum += mistake / total;
      // Renormalize the surviving mass for the next step's conditioning.
      double surviving = 0.0;
      for (StateId s = 0; s < env.first_leaf(); ++s) surviving += next_mass[s];
      if (surviving > 0.0)
        for (StateId s = 0; s < env.first_leaf(); ++s) next_mass[s] /= surviving;
    }
    mass = std::move(next_mass);
  }

  out.epsilon = eps_sum / static_cast<double>(T);
  out.bound = 1.0 - static_cast<double>(T) * (out.epsilon + out.c);
  return out;
}

QTable optimal_q(const TreeEnv& env) {
  QTable q(env.state_count(), TreeEnv::kActions, env.id() + "-optimal");
  std::vector<double> v(env.state_count(), 0.0);
  for (std::size_t i = env.state_count(); i-- > 0;) {
    const StateId s = static_cast<StateId>(i);
    if (env.is_leaf(s)) {
      v[s] = env.is_success(s) ? 1.0 : 0.0;
      q.at(s, 0) = q.at(s, 1) = v[s];
      continue;
    }
    for (ActionId a = 0; a < TreeEnv::kActions; ++a) {
      double pa[2];
      slip_probs(env.slip, a, pa);
      q.at(s, a) = pa[0] * v[env.child(s, 0)] + pa[1] * v[env.child(s, 1)];
    }
    v[s] = q.at(s, argmax_action(q, s));
  }
  return q;
}

}  // namespace opeval
