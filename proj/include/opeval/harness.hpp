#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "opeval/metrics.hpp"
#include "opeval/tree_env.hpp"
#include "opeval/types.hpp"

namespace opeval {

struct QDistribution {
  enum class Kind {
    kSharedUniform,  // every table U[0, max]
    kPerIndex,       // kth table U[0, k+1]
  };
  Kind kind = Kind::kSharedUniform;
  double max = 1.0;
};

struct ExperimentConfig {
  TreeEnv env{6, {31}, 0.0};
  int n_qfunctions = 1000;
  QDistribution q_distribution{};
  int n_validation_episodes = 1000;
  Policy behavior = Policy::uniform_random();
  std::vector<double> prior_grid;  // for prior_sweep
  std::vector<double> slip_grid;   // for the stochastic sweep
  std::uint64_t master_seed = 0;
  double gamma = 1.0;  // baseline metrics only; the MDPs themselves use 1
  int n_threads = 1;

  void validate() const;
};

// Row type of every experiment output.
struct MetricReport {
  std::string q_id;
  double true_return = 0.0;
  std::map<MetricName, double> scores;
  std::set<MetricName> degenerate_flags;
};

struct CorrelationSummary {
  MetricName metric_name = MetricName::kOpc;
  double r_squared = 0.0;
  double spearman = 0.0;
  std::size_t n_models = 0;  // non-degenerate rows actually correlated
  bool defined = true;       // false when correlation is undefined (zero variance)
};

struct ExperimentResult {
  std::vector<MetricReport> reports;
  std::vector<CorrelationSummary> summaries;
};

// The five metrics every correlation experiment evaluates, in output order.
const std::vector<MetricName>& experiment_metrics();

// Seed streams derived from master_seed. Stream 0 collects the validation
// dataset; stream 1+k generates the kth Q-function.
constexpr std::uint64_t kDatasetStream = 0;
constexpr std::uint64_t kQTableStreamBase = 1;

QTable generate_random_q(const TreeEnv& env, const QDistribution& dist, int index,
                         RngStream& rng);

// Full rollouts without Q annotations; annotations come later per table.
Dataset collect_dataset(const TreeEnv& env, const Policy& behavior, int n_episodes,
                        RngStream& rng);

// Copy of d with Q fields filled from the table.
Dataset annotate(const Dataset& d, const QTable& q);

CorrelationSummary correlate(MetricName metric, const std::vector<MetricReport>& reports);

// One shared validation dataset, re-annotated per generated Q-function;
// exact-DP true returns. Deterministic given master_seed, regardless of
// n_threads.
ExperimentResult run_correlation_experiment(const ExperimentConfig& cfg);

struct PriorSweepPoint {
  double prior = 1.0;
  CorrelationSummary opc;
  CorrelationSummary soft_opc;
};

struct PriorSweepResult {
  std::vector<PriorSweepPoint> points;
  std::vector<CorrelationSummary> baselines;  // prior-independent, computed once
};

PriorSweepResult prior_sweep(const ExperimentConfig& cfg);

struct MagnitudeRegimeResult {
  std::string regime;  // "U[0,1]", "U[0,k]", "U[0,1000]"
  ExperimentResult result;
};

// Three regimes sharing the validation dataset and the per-table uniform
// draws, so each regime's kth table is a positive scaling of the U[0,1] one.
std::vector<MagnitudeRegimeResult> magnitude_sweep(const ExperimentConfig& cfg);

struct SlipSweepPoint {
  double slip = 0.0;
  ExperimentResult result;
};

// run_correlation_experiment at every slip level in cfg.slip_grid.
std::vector<SlipSweepPoint> stochastic_sweep(const ExperimentConfig& cfg);

}  // namespace opeval
