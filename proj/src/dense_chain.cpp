#include "opeval/dense_chain.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>

namespace opeval {

namespace {

struct ChainStep {
  StateId next;
  double reward;
};

ChainStep chain_step(const DenseChainEnv& env, StateId pos, ActionId a) {
  if (a == 0 && pos < static_cast<StateId>(env.length))
    return {pos + 1, env.step_rewards[pos]};
  return {pos, 0.0};  // stall, or advance pressed at the end of the chain
}

}  // namespace

DenseChainEnv::DenseChainEnv(int len, std::vector<double> rewards)
    : length(len), step_rewards(std::move(rewards)) {
  if (length < 1) throw std::invalid_argument("chain length must be >= 1");
  if (step_rewards.size() != static_cast<std::size_t>(length))
    throw std::invalid_argument("need one step reward per position");
}

double chain_exact_return(const DenseChainEnv& env, const Policy& p) {
  const int T = env.horizon();
  std::vector<double> v(env.state_count(), 0.0);
  for (int t = T - 1; t >= 0; --t) {
    std::vector<double> prev(env.state_count(), 0.0);
    for (StateId s = 0; s < env.state_count(); ++s) {
      const auto pi = action_probabilities(p, s, DenseChainEnv::kActions);
      double val = 0.0;
      for (ActionId a = 0; a < DenseChainEnv::kActions; ++a) {
        if (pi[a] == 0.0) continue;
        const ChainStep step = chain_step(env, s, a);
        val += pi[a] * (step.reward + v[step.next]);
      }
      prev[s] = val;
    }
    v = std::move(prev);
  }
  return v[0];
}

std::vector<double> chain_achievable_returns(const DenseChainEnv& env) {
  // Advances happen in order, so achievable returns are the prefix sums.
  std::vector<double> out;
  double acc = 0.0;
  out.push_back(acc);
  for (int i = 0; i < env.length; ++i) {
    acc += env.step_rewards[i];
    out.push_back(acc);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Dataset collect_chain_dataset(const DenseChainEnv& env, const Policy& behavior,
                              int n_episodes, const QTable& q, RngStream& rng) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  Dataset d;
  d.env_id = "chain-l" + std::to_string(env.length);
  for (int e = 0; e < n_episodes; ++e) {
    Episode ep;
    ep.id = "ep-" + std::to_string(e);
    StateId pos = 0;
    for (int t = 1; t <= env.horizon(); ++t) {
      const ActionId a = sample_action(behavior, pos, DenseChainEnv::kActions, rng);
      const ChainStep step = chain_step(env, pos, a);
      Transition tr;
      tr.t = t;
      tr.state = pos;
      tr.action = a;
      tr.reward = step.reward;
      tr.q_sa = q.at(pos, a);
      tr.q_greedy_s = q.at(pos, argmax_action(q, pos));
      if (t < env.horizon())
        tr.q_greedy_next = q.at(step.next, argmax_action(q, step.next));
      tr.annotated = true;
      ep.transitions.push_back(tr);
      pos = step.next;
    }
    ep.final_reward = ep.transitions.back().reward;
    d.episodes.push_back(std::move(ep));
  }
  return d;
}

AugmentedEnv augment(const DenseChainEnv& env, std::size_t max_states) {
  AugmentedEnv aug;
  aug.base = env;
  std::size_t total = 0;
  std::vector<std::pair<StateId, double>> frontier{{0, 0.0}};
  for (int t = 0; t <= env.horizon(); ++t) {
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    total += frontier.size();
    if (total > max_states)
      throw std::invalid_argument("accumulated-reward state set exceeds limit");
    aug.states_at_step.push_back(frontier);
    if (t == env.horizon()) break;
    std::vector<std::pair<StateId, double>> next;
    for (const auto& [pos, acc] : frontier) {
      for (ActionId a = 0; a < DenseChainEnv::kActions; ++a) {
        const ChainStep step = chain_step(env, pos, a);
        next.emplace_back(step.next, acc + step.reward);
      }
    }
    frontier = std::move(next);
  }
  return aug;
}

double augmented_exact_return(const AugmentedEnv& aug, const Policy& p) {
  const int T = aug.base.horizon();
  // Terminal payout is the accumulated reward.
  std::map<std::pair<StateId, double>, double> value;
  for (const auto& st : aug.states_at_step[T]) value[st] = st.second;
  for (int t = T - 1; t >= 0; --t) {
    std::map<std::pair<StateId, double>, double> prev;
    for (const auto& [pos, acc] : aug.states_at_step[t]) {
      const auto pi = action_probabilities(p, pos, DenseChainEnv::kActions);
      double val = 0.0;
      for (ActionId a = 0; a < DenseChainEnv::kActions; ++a) {
        if (pi[a] == 0.0) continue;
        const ChainStep step = chain_step(aug.base, pos, a);
        val += pi[a] * value.at({step.next, acc + step.reward});
      }
      prev[{pos, acc}] = val;
    }
    value = std::move(prev);
  }
  return value.at({0, 0.0});
}

}  // namespace opeval
