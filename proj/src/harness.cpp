#include "opeval/harness.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <stdexcept>
#include <thread>

#include "opeval/stats.hpp"

namespace opeval {

void ExperimentConfig::validate() const {
  if (n_qfunctions < 2)
    throw std::invalid_argument("n_qfunctions must be >= 2 (correlation needs variance)");
  if (n_validation_episodes < 1)
    throw std::invalid_argument("n_validation_episodes must be >= 1");
  if (gamma < 0.0 || gamma > 1.0) throw std::invalid_argument("gamma outside [0,1]");
  if (n_threads < 1) throw std::invalid_argument("n_threads must be >= 1");
}

const std::vector<MetricName>& experiment_metrics() {
  static const std::vector<MetricName> metrics = {
      MetricName::kTdErr, MetricName::kSumAdv, MetricName::kMccErr,
      MetricName::kOpc, MetricName::kSoftOpc};
  return metrics;
}

QTable generate_random_q(const TreeEnv& env, const QDistribution& dist, int index,
                         RngStream& rng) {
  const double max = dist.kind == QDistribution::Kind::kPerIndex
                         ? static_cast<double>(index + 1)
                         : dist.max;
  QTable q(env.state_count(), TreeEnv::kActions, "q-" + std::to_string(index));
  for (auto& v : q.values) v = rng.uniform(max);
  return q;
}

Dataset collect_dataset(const TreeEnv& env, const Policy& behavior, int n_episodes,
                        RngStream& rng) {
  if (n_episodes < 1) throw std::invalid_argument("n_episodes must be >= 1");
  Dataset d;
  d.env_id = env.id();
  for (int e = 0; e < n_episodes; ++e) {
    Episode ep;
    ep.id = "ep-" + std::to_string(e);
    StateId s = tree_reset(env, rng);
    int t = 1;
    while (true) {
      const ActionId a = sample_action(behavior, s, TreeEnv::kActions, rng);
      const StepResult step = tree_step(env, s, a, rng);
      Transition tr;
      tr.t = t;
      tr.state = s;
      tr.action = a;
      tr.reward = step.reward;
      if (!step.terminal) tr.q_greedy_next = 0.0;  // placeholder until annotated
      ep.transitions.push_back(tr);
      if (step.terminal) break;
      s = step.next;
      ++t;
    }
    ep.final_reward = ep.transitions.back().reward;
    d.episodes.push_back(std::move(ep));
  }
  return d;
}

Dataset annotate(const Dataset& d, const QTable& q) {
  Dataset out = d;
  for (auto& ep : out.episodes) {
    const int T = ep.length();
    for (int i = 0; i < T; ++i) {
      Transition& tr = ep.transitions[i];
      if (tr.state >= q.state_count || tr.action >= q.action_count)
        throw std::invalid_argument("state/action out of range for the table");
      tr.q_sa = q.at(tr.state, tr.action);
      tr.q_greedy_s = q.at(tr.state, argmax_action(q, tr.state));
      if (i + 1 < T) {
        const StateId next = ep.transitions[i + 1].state;
        tr.q_greedy_next = q.at(next, argmax_action(q, next));
      }
      tr.annotated = true;
    }
  }
  return out;
}

CorrelationSummary correlate(MetricName metric, const std::vector<MetricReport>& reports) {
  std::vector<double> xs, ys;
  for (const auto& row : reports) {
    if (row.degenerate_flags.count(metric)) continue;
    xs.push_back(row.scores.at(metric));
    ys.push_back(row.true_return);
  }
  CorrelationSummary out;
  out.metric_name = metric;
  out.n_models = xs.size();
  try {
    out.spearman = spearman(xs, ys);
    out.r_squared = r_squared(xs, ys);
  } catch (const std::invalid_argument&) {
    out.defined = false;
    out.spearman = 0.0;
    out.r_squared = 0.0;
  }
  return out;
}

namespace {

// Deterministic parallel map: the kth slot only ever depends on k.
void parallel_for(int n, int n_threads, const std::function<void(int)>& body) {
  if (n_threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> workers;
  std::atomic<int> counter{0};
  for (int w = 0; w < n_threads; ++w) {
    workers.emplace_back([&]() {
      int i;
      while ((i = counter.fetch_add(1)) < n) body(i);
    });
  }
  for (auto& t : workers) t.join();
}

MetricReport evaluate_table(const ExperimentConfig& cfg, const Dataset& dataset,
                            const QTable& q) {
  MetricReport row;
  row.q_id = q.id;
  const Dataset annotated = annotate(dataset, q);
  std::vector<MetricScore> scores = {
      td_error(annotated, cfg.gamma),
      sum_advantages(annotated, cfg.gamma),
      mcc_error(annotated, cfg.gamma),
      opc(annotated),
      soft_opc(annotated),
  };
  for (const auto& s : scores) {
    row.scores[s.metric_name] = s.value;
    if (s.degenerate) row.degenerate_flags.insert(s.metric_name);
  }
  row.true_return = exact_return(cfg.env, Policy::argmax_of(q));
  return row;
}

ExperimentResult run_with_tables(
    const ExperimentConfig& cfg, const Dataset& dataset,
    const std::function<QTable(int)>& make_table) {
  ExperimentResult result;
  result.reports.resize(cfg.n_qfunctions);
  parallel_for(cfg.n_qfunctions, cfg.n_threads, [&](int k) {
    result.reports[k] = evaluate_table(cfg, dataset, make_table(k));
  });
  for (MetricName m : experiment_metrics())
    result.summaries.push_back(correlate(m, result.reports));
  return result;
}

}  // namespace

ExperimentResult run_correlation_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  RngStream data_rng(child_seed(cfg.master_seed, kDatasetStream));
  const Dataset dataset =
      collect_dataset(cfg.env, cfg.behavior, cfg.n_validation_episodes, data_rng);
  return run_with_tables(cfg, dataset, [&](int k) {
    RngStream rng(child_seed(cfg.master_seed, kQTableStreamBase + k));
    return generate_random_q(cfg.env, cfg.q_distribution, k, rng);
  });
}

PriorSweepResult prior_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.prior_grid.empty()) throw std::invalid_argument("prior grid is empty");
  RngStream data_rng(child_seed(cfg.master_seed, kDatasetStream));
  const Dataset dataset =
      collect_dataset(cfg.env, cfg.behavior, cfg.n_validation_episodes, data_rng);

  // Per-table state reused across the prior grid.
  struct TableEval {
    std::vector<AnnotatedPoint> points;  // sorted descending by q
    double pos_mean_sum = 0.0;           // sum of per-episode means, successes
    std::size_t n_pos_episodes = 0;
    double all_mean_sum = 0.0;
    double true_return = 0.0;
    MetricReport baseline_row;
  };
  std::vector<TableEval> evals(cfg.n_qfunctions);
  parallel_for(cfg.n_qfunctions, cfg.n_threads, [&](int k) {
    RngStream rng(child_seed(cfg.master_seed, kQTableStreamBase + k));
    const QTable q = generate_random_q(cfg.env, cfg.q_distribution, k, rng);
    const Dataset annotated = annotate(dataset, q);
    TableEval ev;
    for (const auto& ep : annotated.episodes) {
      double mean_q = 0.0;
      for (const auto& tr : ep.transitions) {
        ev.points.push_back({tr.q_sa, 1.0, ep.successful() ? 1.0 : 0.0});
        mean_q += tr.q_sa;
      }
      mean_q /= static_cast<double>(ep.length());
      ev.all_mean_sum += mean_q;
      if (ep.successful()) {
        ev.pos_mean_sum += mean_q;
        ++ev.n_pos_episodes;
      }
    }
    std::sort(ev.points.begin(), ev.points.end(),
              [](const AnnotatedPoint& a, const AnnotatedPoint& b) { return a.q > b.q; });
    ev.true_return = exact_return(cfg.env, Policy::argmax_of(q));
    ev.baseline_row.q_id = q.id;
    ev.baseline_row.true_return = ev.true_return;
    for (const auto& s : {td_error(annotated, cfg.gamma),
                          sum_advantages(annotated, cfg.gamma),
                          mcc_error(annotated, cfg.gamma)}) {
      ev.baseline_row.scores[s.metric_name] = s.value;
      if (s.degenerate) ev.baseline_row.degenerate_flags.insert(s.metric_name);
    }
    evals[k] = std::move(ev);
  });

  PriorSweepResult result;
  std::vector<MetricReport> baseline_rows;
  for (const auto& ev : evals) baseline_rows.push_back(ev.baseline_row);
  for (MetricName m :
       {MetricName::kTdErr, MetricName::kSumAdv, MetricName::kMccErr})
    result.baselines.push_back(correlate(m, baseline_rows));

  for (double p : cfg.prior_grid) {
    std::vector<MetricReport> rows;
    for (const auto& ev : evals) {
      MetricReport row;
      row.true_return = ev.true_return;
      const MetricScore o = opc_from_points(ev.points, p);
      row.scores[MetricName::kOpc] = o.value;
      if (o.degenerate) row.degenerate_flags.insert(MetricName::kOpc);
      if (ev.n_pos_episodes == 0) {
        row.scores[MetricName::kSoftOpc] = 0.0;
        row.degenerate_flags.insert(MetricName::kSoftOpc);
      } else {
        row.scores[MetricName::kSoftOpc] =
            p * ev.pos_mean_sum / static_cast<double>(ev.n_pos_episodes) -
            ev.all_mean_sum / static_cast<double>(cfg.n_validation_episodes);
      }
      rows.push_back(std::move(row));
    }
    PriorSweepPoint point;
    point.prior = p;
    point.opc = correlate(MetricName::kOpc, rows);
    point.soft_opc = correlate(MetricName::kSoftOpc, rows);
    result.points.push_back(point);
  }
  return result;
}

std::vector<MagnitudeRegimeResult> magnitude_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  RngStream data_rng(child_seed(cfg.master_seed, kDatasetStream));
  const Dataset dataset =
      collect_dataset(cfg.env, cfg.behavior, cfg.n_validation_episodes, data_rng);

  const std::vector<std::pair<std::string, QDistribution>> regimes = {
      {"U[0,1]", {QDistribution::Kind::kSharedUniform, 1.0}},
      {"U[0,k]", {QDistribution::Kind::kPerIndex, 1.0}},
      {"U[0,1000]", {QDistribution::Kind::kSharedUniform, 1000.0}},
  };
  std::vector<MagnitudeRegimeResult> out;
  for (std::size_t r = 0; r < regimes.size(); ++r) {
    // Independent draws per regime; regime 0 reuses the plain experiment's
    // streams so its run coincides with run_correlation_experiment.
    const std::uint64_t stream_base =
        kQTableStreamBase + r * static_cast<std::uint64_t>(cfg.n_qfunctions);
    MagnitudeRegimeResult regime;
    regime.regime = regimes[r].first;
    regime.result = run_with_tables(cfg, dataset, [&, dist = regimes[r].second,
                                                   stream_base](int k) {
      RngStream rng(child_seed(cfg.master_seed, stream_base + k));
      return generate_random_q(cfg.env, dist, k, rng);
    });
    out.push_back(std::move(regime));
  }
  return out;
}

std::vector<SlipSweepPoint> stochastic_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.slip_grid.empty()) throw std::invalid_argument("slip grid is empty");
  std::vector<SlipSweepPoint> out;
  for (double slip : cfg.slip_grid) {
    ExperimentConfig point_cfg = cfg;
    point_cfg.env = TreeEnv(cfg.env.depth, cfg.env.success_leaves, slip);
    SlipSweepPoint point;
    point.slip = slip;
    point.result = run_correlation_experiment(point_cfg);
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace opeval
