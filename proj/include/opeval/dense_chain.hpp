#pragma once

#include <cstddef>
#include <vector>

#include "opeval/types.hpp"

namespace opeval {

// Small deterministic dense-reward testbed. States are positions 0..length;
// action 0 advances one position and pays step_rewards[pos], action 1 stalls
// for zero reward. Episodes run for exactly `length` steps, so the set of
// achievable returns is the set of reachable reward prefix sums.
struct DenseChainEnv {
  int length = 4;
  std::vector<double> step_rewards;  // reward for advancing from position p

  DenseChainEnv() = default;
  DenseChainEnv(int len, std::vector<double> rewards);

  std::size_t state_count() const { return static_cast<std::size_t>(length) + 1; }
  static constexpr std::size_t kActions = 2;  // 0 = advance, 1 = stall
  int horizon() const { return length; }
};

// Exact expected return via DP over (step, position).
double chain_exact_return(const DenseChainEnv& env, const Policy& p);

// Distinct episode returns achievable by any policy, sorted ascending.
std::vector<double> chain_achievable_returns(const DenseChainEnv& env);

// Rollouts with Q annotations drawn from the given table.
Dataset collect_chain_dataset(const DenseChainEnv& env, const Policy& behavior,
                              int n_episodes, const QTable& q, RngStream& rng);

// Return-equivalent reduction: state becomes (position, accumulated reward),
// intermediate rewards vanish, the whole return is paid at the final step.
struct AugmentedEnv {
  DenseChainEnv base;
  // Reachable (position, accumulated reward) pairs, indexed per step.
  std::vector<std::vector<std::pair<StateId, double>>> states_at_step;

  // Q'(s, r, a) = r + Q(s, a).
  static double q_lift(const QTable& base_q, StateId s, double accumulated,
                       ActionId a) {
    return accumulated + base_q.at(s, a);
  }
};

// Enumerates reachable augmented states; throws std::invalid_argument if the
// accumulated-reward set exceeds max_states.
AugmentedEnv augment(const DenseChainEnv& env, std::size_t max_states = 1u << 20);

// Exact expected return of the lifted policy (base policy applied to the
// position component) in the augmented environment.
double augmented_exact_return(const AugmentedEnv& aug, const Policy& p);

}  // namespace opeval
