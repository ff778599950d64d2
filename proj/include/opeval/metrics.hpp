#pragma once

#include <string>
#include <vector>

#include "opeval/types.hpp"

namespace opeval {

// PU class prior p(y=1). Default 1 is the right choice for binary reward MDPs
// with feasible starts; other values exist for the prior-sweep study.
struct PriorConfig {
  double p_positive = 1.0;
};

enum class MetricName { kOpc, kSoftOpc, kTdErr, kSumAdv, kMccErr, kExtOpc };

enum class Orientation { kHigherBetter, kLowerBetter };

const char* metric_label(MetricName m);
Orientation metric_orientation(MetricName m);

struct MetricScore {
  MetricName metric_name = MetricName::kOpc;
  double value = 0.0;
  Orientation orientation = Orientation::kHigherBetter;
  // Set when the score is Q-independent by construction (e.g. no positive
  // transitions at p=1); degenerate scores carry value 0 and must not be
  // ranked against real ones.
  bool degenerate = false;
};

// One point on the annotated number line of the threshold sweep.
struct AnnotatedPoint {
  double q = 0.0;
  double weight_all = 1.0;
  double weight_pos = 0.0;  // > 0 only for positive-labeled transitions
};

// OPC leaves transitions unweighted; SoftOPC's 1/T weighting is built into
// its per-episode averaging. The switch exists for study only.
enum class TransitionWeighting { kUnweighted, kPerEpisode };

// max over thresholds b of  p * P+(Q > b) - P(Q > b), one sort plus a linear
// suffix scan. Duplicate Q values enter the suffix atomically.
MetricScore opc(const Dataset& d, const PriorConfig& prior = {},
                TransitionWeighting weighting = TransitionWeighting::kUnweighted);

// O(N^2) oracle: re-counts the objective at every candidate threshold.
MetricScore opc_bruteforce(const Dataset& d, const PriorConfig& prior = {},
                           TransitionWeighting weighting = TransitionWeighting::kUnweighted);

// Shared sweep core for externally constructed points (used by both routes
// above and by the dense-reward extension).
MetricScore opc_from_points(std::vector<AnnotatedPoint> points, double p_positive);
MetricScore opc_bruteforce_from_points(const std::vector<AnnotatedPoint>& points,
                                       double p_positive);

// p * mean(per-episode mean Q over successful episodes) - mean over all
// episodes; the per-episode mean is the 1/T weighting.
MetricScore soft_opc(const Dataset& d, const PriorConfig& prior = {});

// Mean squared 1-step Bellman residual; zero continuation value at terminal
// steps.
MetricScore td_error(const Dataset& d, double gamma = 1.0);

// How the outer expectation of the advantage-sum baseline is taken.
enum class AdvantageAggregation { kAllStarts, kFirstStartOnly };

// Mean discounted advantage tail sum over all (episode, start index) pairs,
// each episode weighted 1/T. Lower is better.
MetricScore sum_advantages(const Dataset& d, double gamma = 1.0,
                           AdvantageAggregation agg = AdvantageAggregation::kAllStarts);

// Mean squared error to the Monte-Carlo-corrected target
// r_t + sum_{t'>t} gamma^(t'-t) (r_t' - A_t'), per-episode 1/T weighting.
MetricScore mcc_error(const Dataset& d, double gamma = 1.0);

// Dense-reward extension: relabel success as episode return >= c, lift each
// annotation by the reward accumulated before the step, then run OPC.
MetricScore thresholded_opc(const Dataset& d, double threshold,
                            const PriorConfig& prior = {});

// c_1 + sum_i (c_i - c_{i-1}) * thresholded_opc(d, c_i) over the sorted
// distinct episode returns. A ranking score, not a calibrated return
// estimate: thresholded_opc is a correlate of P(R >= c_i), not a probability.
MetricScore extended_opc(const Dataset& d, const PriorConfig& prior = {});

}  // namespace opeval
