#include "opeval/types.hpp"

#include <cmath>
#include <sstream>

namespace opeval {

namespace {

[[noreturn]] void fail(const std::string& episode_id, int step, const std::string& what) {
  std::ostringstream os;
  os << "episode '" << episode_id << "' step " << step << ": " << what;
  throw std::invalid_argument(os.str());
}

}  // namespace

void validate_dataset(const Dataset& d, bool binary_strict) {
  if (d.episodes.empty()) throw std::invalid_argument("dataset has no episodes");
  for (const auto& ep : d.episodes) {
    if (ep.transitions.empty()) fail(ep.id, 0, "episode has no transitions");
    const int T = ep.length();
    for (int i = 0; i < T; ++i) {
      const Transition& tr = ep.transitions[i];
      if (tr.t != i + 1) fail(ep.id, tr.t, "step indices must be 1-based and contiguous");
      const bool terminal = (i == T - 1);
      if (tr.q_greedy_next.has_value() == terminal)
        fail(ep.id, tr.t, terminal ? "terminal step must not carry q_greedy_next"
                                   : "non-terminal step must carry q_greedy_next");
      if (tr.annotated) {
        if (!std::isfinite(tr.q_sa) || !std::isfinite(tr.q_greedy_s) ||
            (tr.q_greedy_next && !std::isfinite(*tr.q_greedy_next)))
          fail(ep.id, tr.t, "non-finite Q annotation");
        if (tr.q_greedy_s < tr.q_sa)
          fail(ep.id, tr.t, "q_greedy_s must dominate q_sa");
      }
    }
    if (ep.transitions.back().reward != ep.final_reward)
      fail(ep.id, T, "final_reward must equal the last transition's reward");
    if (binary_strict) {
      if (ep.final_reward != 0.0 && ep.final_reward != 1.0)
        fail(ep.id, T, "binary mode requires terminal reward in {0,1}");
      for (int i = 0; i + 1 < T; ++i)
        if (ep.transitions[i].reward != 0.0)
          fail(ep.id, ep.transitions[i].t, "binary mode requires zero intermediate rewards");
    }
  }
}

void validate_annotations(const Dataset& d, const QTable& q) {
  for (const auto& ep : d.episodes) {
    const int T = ep.length();
    for (int i = 0; i < T; ++i) {
      const Transition& tr = ep.transitions[i];
      if (!tr.annotated) fail(ep.id, tr.t, "transition is not annotated");
      if (tr.state >= q.state_count || tr.action >= q.action_count)
        fail(ep.id, tr.t, "state/action out of range for the table");
      if (tr.q_sa != q.at(tr.state, tr.action))
        fail(ep.id, tr.t, "q_sa does not match the table");
      if (tr.q_greedy_s != q.at(tr.state, argmax_action(q, tr.state)))
        fail(ep.id, tr.t, "q_greedy_s does not match the table");
      if (i + 1 < T) {
        const StateId next = ep.transitions[i + 1].state;
        if (*tr.q_greedy_next != q.at(next, argmax_action(q, next)))
          fail(ep.id, tr.t, "q_greedy_next does not match the table");
      }
    }
  }
}

}  // namespace opeval
