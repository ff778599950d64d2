#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "opeval/types.hpp"

namespace opeval {

// Full binary tree MDP in heap order: root is state 0, children of i are
// 2i+1 and 2i+2. Leaves are terminal; reward 1 iff the reached leaf is a
// success leaf. With slip probability > 0 the environment replaces the chosen
// action by a uniform draw over both actions.
struct TreeEnv {
  int depth = 6;                       // levels; leaves live at level depth-1
  std::set<StateId> success_leaves;
  double slip = 0.0;

  TreeEnv() = default;
  TreeEnv(int depth_levels, std::set<StateId> success, double slip_prob = 0.0);

  std::size_t state_count() const { return (std::size_t{1} << depth) - 1; }
  StateId first_leaf() const { return (StateId{1} << (depth - 1)) - 1; }
  std::size_t internal_count() const { return first_leaf(); }
  static constexpr std::size_t kActions = 2;

  bool is_leaf(StateId s) const { return s >= first_leaf(); }
  StateId child(StateId s, ActionId a) const { return 2 * s + 1 + a; }
  bool is_success(StateId leaf) const { return success_leaves.count(leaf) > 0; }

  // Maximum episode length from any start (root to leaf).
  int max_horizon() const { return depth - 1; }

  std::string id() const;
};

struct StepResult {
  StateId next = 0;
  double reward = 0.0;
  bool terminal = false;
};

// Uniform draw over internal (non-leaf) nodes.
StateId tree_reset(const TreeEnv& env, RngStream& rng);

StepResult tree_step(const TreeEnv& env, StateId s, ActionId a, RngStream& rng);

enum class StartDistribution {
  kAllInternal,       // uniform over every internal node (the experiment setup)
  kFeasibleInternal,  // uniform over internal nodes where success is still possible
};

// Exact expected return by backward induction over the tree, slip included.
double exact_return(const TreeEnv& env, const Policy& p,
                    StartDistribution starts = StartDistribution::kAllInternal);

// Sampling counterpart of exact_return.
double monte_carlo_return(const TreeEnv& env, const Policy& p, int n_episodes,
                          RngStream& rng);

struct FeasibilityMap {
  std::size_t state_count = 0;
  std::vector<bool> pair_feasible;   // [state * 2 + action], internal states only
  std::vector<bool> state_feasible;  // [state], leaves feasible iff success

  bool feasible(StateId s, ActionId a) const { return pair_feasible[s * 2 + a]; }
  bool feasible(StateId s) const { return state_feasible[s]; }
};

// Backward-induction feasibility labels: (s,a) is feasible iff some next state
// reachable with positive probability after a still admits success.
FeasibilityMap feasibility_labels(const TreeEnv& env);

struct MistakeBound {
  double epsilon = 0.0;  // (1/T) sum of per-step first-mistake probabilities
  double c = 0.0;        // worst-case slip-to-catastrophic probability
  double bound = 0.0;    // 1 - T(epsilon + c), T = depth - 1
};

// Exact propagation of the no-prior-mistake state distribution. The
// accompanying return bound uses feasible starts; see exact_return with
// kFeasibleInternal for the matching ground truth.
MistakeBound first_mistake_error(const TreeEnv& env, const Policy& p);

// Bellman-optimal tabular Q for the tree (success probability under optimal
// continuation, slip included). Leaf rows are the leaf's outcome value.
QTable optimal_q(const TreeEnv& env);

}  // namespace opeval
