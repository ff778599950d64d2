#include "opeval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace opeval {

const char* metric_label(MetricName m) {
  switch (m) {
    case MetricName::kOpc: return "OPC";
    case MetricName::kSoftOpc: return "SoftOPC";
    case MetricName::kTdErr: return "TDErr";
    case MetricName::kSumAdv: return "SumAdv";
    case MetricName::kMccErr: return "MCCErr";
    case MetricName::kExtOpc: return "ExtOPC";
  }
  return "?";
}

Orientation metric_orientation(MetricName m) {
  switch (m) {
    case MetricName::kOpc:
    case MetricName::kSoftOpc:
    case MetricName::kExtOpc:
      return Orientation::kHigherBetter;
    default:
      return Orientation::kLowerBetter;
  }
}

namespace {

void require_nonempty(const Dataset& d) {
  if (d.episodes.empty()) throw std::invalid_argument("empty dataset");
  for (const auto& ep : d.episodes)
    if (ep.transitions.empty()) throw std::invalid_argument("episode with no transitions");
}

void require_annotated(const Dataset& d) {
  require_nonempty(d);
  for (const auto& ep : d.episodes)
    for (const auto& tr : ep.transitions)
      if (!tr.annotated)
        throw std::invalid_argument("dataset is missing Q annotations");
}

std::vector<AnnotatedPoint> binary_points(const Dataset& d,
                                          TransitionWeighting weighting) {
  std::vector<AnnotatedPoint> points;
  for (const auto& ep : d.episodes) {
    const double w = weighting == TransitionWeighting::kPerEpisode
                         ? 1.0 / static_cast<double>(ep.length())
                         : 1.0;
    const bool pos = ep.successful();
    for (const auto& tr : ep.transitions)
      points.push_back({tr.q_sa, w, pos ? w : 0.0});
  }
  return points;
}

MetricScore make_score(MetricName name, double value, bool degenerate = false) {
  return MetricScore{name, degenerate ? 0.0 : value, metric_orientation(name),
                     degenerate};
}

}  // namespace

MetricScore opc_from_points(std::vector<AnnotatedPoint> points, double p_positive) {
  if (points.empty()) throw std::invalid_argument("no transitions");
  double w_all = 0.0, w_pos = 0.0;
  for (const auto& pt : points) {
    w_all += pt.weight_all;
    w_pos += pt.weight_pos;
  }
  if (w_pos == 0.0) return make_score(MetricName::kOpc, 0.0, /*degenerate=*/true);

  std::sort(points.begin(), points.end(),
            [](const AnnotatedPoint& a, const AnnotatedPoint& b) { return a.q > b.q; });
  double best = 0.0;  // b = +inf keeps the suffix empty
  double cum_all = 0.0, cum_pos = 0.0;
  std::size_t i = 0;
  while (i < points.size()) {
    std::size_t j = i;
    // Equal Q values enter the suffix together.
    while (j < points.size() && points[j].q == points[i].q) {
      cum_all += points[j].weight_all;
      cum_pos += points[j].weight_pos;
      ++j;
    }
    best = std::max(best, p_positive * cum_pos / w_pos - cum_all / w_all);
    i = j;
  }
  return make_score(MetricName::kOpc, best);
}

MetricScore opc_bruteforce_from_points(const std::vector<AnnotatedPoint>& points,
                                       double p_positive) {
  if (points.empty()) throw std::invalid_argument("no transitions");
  double w_all = 0.0, w_pos = 0.0;
  std::vector<double> candidates;
  for (const auto& pt : points) {
    w_all += pt.weight_all;
    w_pos += pt.weight_pos;
    candidates.push_back(pt.q);
  }
  if (w_pos == 0.0) return make_score(MetricName::kOpc, 0.0, /*degenerate=*/true);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()),
                   candidates.end());
  double best = 0.0;  // b = +inf
  for (double v : candidates) {
    // Threshold just below v: the suffix is every point with q >= v.
    double sel_all = 0.0, sel_pos = 0.0;
    for (const auto& pt : points) {
      if (pt.q >= v) {
        sel_all += pt.weight_all;
        sel_pos += pt.weight_pos;
      }
    }
    best = std::max(best, p_positive * sel_pos / w_pos - sel_all / w_all);
  }
  return make_score(MetricName::kOpc, best);
}

MetricScore opc(const Dataset& d, const PriorConfig& prior,
                TransitionWeighting weighting) {
  require_annotated(d);
  return opc_from_points(binary_points(d, weighting), prior.p_positive);
}

MetricScore opc_bruteforce(const Dataset& d, const PriorConfig& prior,
                           TransitionWeighting weighting) {
  require_annotated(d);
  return opc_bruteforce_from_points(binary_points(d, weighting), prior.p_positive);
}

MetricScore soft_opc(const Dataset& d, const PriorConfig& prior) {
  require_annotated(d);
  double all_sum = 0.0, pos_sum = 0.0;
  std::size_t n_pos = 0;
  for (const auto& ep : d.episodes) {
    double mean_q = 0.0;
    for (const auto& tr : ep.transitions) mean_q += tr.q_sa;
    mean_q /= static_cast<double>(ep.length());
    all_sum += mean_q;
    if (ep.successful()) {
      pos_sum += mean_q;
      ++n_pos;
    }
  }
  if (n_pos == 0) return make_score(MetricName::kSoftOpc, 0.0, /*degenerate=*/true);
  const double value = prior.p_positive * pos_sum / static_cast<double>(n_pos) -
                       all_sum / static_cast<double>(d.episodes.size());
  return make_score(MetricName::kSoftOpc, value);
}

MetricScore td_error(const Dataset& d, double gamma) {
  require_annotated(d);
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma outside [0,1]");
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& ep : d.episodes) {
    for (const auto& tr : ep.transitions) {
      const double next_v = tr.q_greedy_next.value_or(0.0);
      const double resid = tr.q_sa - (tr.reward + gamma * next_v);
      sum += resid * resid;
      ++n;
    }
  }
  return make_score(MetricName::kTdErr, sum / static_cast<double>(n));
}

MetricScore sum_advantages(const Dataset& d, double gamma,
                           AdvantageAggregation agg) {
  require_annotated(d);
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma outside [0,1]");
  double total = 0.0;
  for (const auto& ep : d.episodes) {
    const int T = ep.length();
    std::vector<double> tails(T, 0.0);
    double acc = 0.0;
    for (int t = T - 1; t >= 0; --t) {
      const Transition& tr = ep.transitions[t];
      acc = (tr.q_sa - tr.q_greedy_s) + gamma * acc;
      tails[t] = acc;
    }
    if (agg == AdvantageAggregation::kFirstStartOnly) {
      total += tails[0];
    } else {
      double ep_sum = 0.0;
      for (double v : tails) ep_sum += v;
      total += ep_sum / static_cast<double>(T);
    }
  }
  return make_score(MetricName::kSumAdv, total / static_cast<double>(d.episodes.size()));
}

MetricScore mcc_error(const Dataset& d, double gamma) {
  require_annotated(d);
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma outside [0,1]");
  double total = 0.0;
  for (const auto& ep : d.episodes) {
    const int T = ep.length();
    double ep_sum = 0.0;
    double acc = 0.0;  // sum_{t' > t} gamma^(t'-t) (r_t' - A_t')
    for (int t = T - 1; t >= 0; --t) {
      const Transition& tr = ep.transitions[t];
      const double target = tr.reward + gamma * acc;
      const double resid = tr.q_sa - target;
      ep_sum += resid * resid;
      acc = (tr.reward - (tr.q_sa - tr.q_greedy_s)) + gamma * acc;
    }
    total += ep_sum / static_cast<double>(T);
  }
  return make_score(MetricName::kMccErr, total / static_cast<double>(d.episodes.size()));
}

MetricScore thresholded_opc(const Dataset& d, double threshold,
                            const PriorConfig& prior) {
  require_annotated(d);
  std::vector<AnnotatedPoint> points;
  for (const auto& ep : d.episodes) {
    const bool pos = ep.total_return() >= threshold;
    double accumulated = 0.0;  // reward collected before the current step
    for (const auto& tr : ep.transitions) {
      points.push_back({accumulated + tr.q_sa, 1.0, pos ? 1.0 : 0.0});
      accumulated += tr.reward;
    }
  }
  return opc_from_points(std::move(points), prior.p_positive);
}

MetricScore extended_opc(const Dataset& d, const PriorConfig& prior) {
  require_annotated(d);
  std::vector<double> returns;
  for (const auto& ep : d.episodes) returns.push_back(ep.total_return());
  std::sort(returns.begin(), returns.end());
  returns.erase(std::unique(returns.begin(), returns.end()), returns.end());

  double total = returns.front();
  bool degenerate = false;
  for (std::size_t i = 1; i < returns.size(); ++i) {
    const MetricScore part = thresholded_opc(d, returns[i], prior);
    degenerate = degenerate || part.degenerate;
    total += (returns[i] - returns[i - 1]) * part.value;
  }
  return make_score(MetricName::kExtOpc, total, degenerate);
}

}  // namespace opeval
