#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "opeval/harness.hpp"
#include "opeval/io.hpp"

namespace fs = std::filesystem;
using namespace opeval;

namespace {

int threads_from_env() {
  if (const char* raw = std::getenv("OPEVAL_THREADS")) {
    const int n = std::atoi(raw);
    if (n >= 1) return n;
  }
  return 1;
}

struct CommonOpts {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed_override;
};

io::LoadedConfig load(const CommonOpts& opts) {
  io::LoadedConfig loaded = io::load_config(opts.config_path);
  if (opts.seed_override) loaded.config.master_seed = *opts.seed_override;
  loaded.config.n_threads = threads_from_env();
  return loaded;
}

int cmd_collect(const CommonOpts& opts) {
  const io::LoadedConfig loaded = load(opts);
  const ExperimentConfig& cfg = loaded.config;
  RngStream rng(child_seed(cfg.master_seed, kDatasetStream));
  Dataset d = collect_dataset(cfg.env, cfg.behavior, cfg.n_validation_episodes, rng);
  d.seed = cfg.master_seed;
  d.behavior_descriptor = "uniform-random";
  io::write_episode_log(opts.out, d);
  std::cout << "wrote " << d.episodes.size() << " episodes to " << opts.out << "\n";
  return io::kExitOk;
}

int cmd_score(const std::string& log_path, const std::string& qtable_path,
              double prior, double gamma, bool binary_strict, bool extended) {
  Dataset d = io::read_episode_log(log_path, binary_strict);
  if (!qtable_path.empty()) {
    const QTable q = io::read_qtable(qtable_path);
    d = annotate(d, q);
  }
  for (const auto& ep : d.episodes)
    for (const auto& tr : ep.transitions)
      if (!tr.annotated)
        throw io::ValidationError(
            "log has no Q annotations and no Q-table was supplied");
  const PriorConfig p{prior};
  std::vector<MetricScore> scores = {
      td_error(d, gamma), sum_advantages(d, gamma), mcc_error(d, gamma),
      opc(d, p),          soft_opc(d, p),
  };
  if (extended) scores.push_back(extended_opc(d, p));
  std::cout << io::score_csv(scores);
  for (const auto& s : scores)
    if (!s.degenerate) return io::kExitOk;
  return io::kExitDegenerateOnly;
}

int cmd_correlate(const CommonOpts& opts) {
  const io::LoadedConfig loaded = load(opts);
  fs::create_directories(opts.out);
  const ExperimentResult result = run_correlation_experiment(loaded.config);
  io::write_reports_csv((fs::path(opts.out) / "reports.csv").string(), result.reports);
  io::write_summary_csv((fs::path(opts.out) / "summary.csv").string(), result.summaries);
  io::write_manifest((fs::path(opts.out) / "manifest.json").string(), loaded,
                     loaded.config.master_seed);
  std::cout << "wrote " << result.reports.size() << " report rows to " << opts.out << "\n";
  return io::kExitOk;
}

int cmd_sweep(const std::string& kind, const CommonOpts& opts) {
  const io::LoadedConfig loaded = load(opts);
  const ExperimentConfig& cfg = loaded.config;
  fs::create_directories(opts.out);
  const fs::path out_dir(opts.out);
  std::ofstream sweep((out_dir / "sweep.csv").string(), std::ios::binary);
  if (!sweep) throw io::IoError("cannot open sweep.csv for writing");

  if (kind == "prior") {
    const PriorSweepResult result = prior_sweep(cfg);
    sweep << "prior,metric,r_squared,spearman,n_models,defined\n";
    auto emit = [&](double prior, const CorrelationSummary& s) {
      sweep << io::format_double(prior) << ',' << metric_label(s.metric_name) << ','
            << io::format_double(s.r_squared) << ',' << io::format_double(s.spearman)
            << ',' << s.n_models << ',' << (s.defined ? "true" : "false") << '\n';
    };
    for (const auto& point : result.points) {
      emit(point.prior, point.opc);
      emit(point.prior, point.soft_opc);
    }
    io::write_summary_csv((out_dir / "baselines.csv").string(), result.baselines);
  } else if (kind == "stochastic") {
    const auto points = stochastic_sweep(cfg);
    sweep << "slip,metric,r_squared,spearman,n_models,defined\n";
    for (const auto& point : points) {
      for (const auto& s : point.result.summaries)
        sweep << io::format_double(point.slip) << ',' << metric_label(s.metric_name)
              << ',' << io::format_double(s.r_squared) << ','
              << io::format_double(s.spearman) << ',' << s.n_models << ','
              << (s.defined ? "true" : "false") << '\n';
      std::ostringstream name;
      name << "summary_slip_" << point.slip << ".csv";
      io::write_summary_csv((out_dir / name.str()).string(), point.result.summaries);
    }
  } else if (kind == "magnitude") {
    const auto regimes = magnitude_sweep(cfg);
    sweep << "regime,metric,r_squared,spearman,n_models,defined\n";
    int idx = 0;
    for (const auto& regime : regimes) {
      for (const auto& s : regime.result.summaries)
        sweep << regime.regime << ',' << metric_label(s.metric_name) << ','
              << io::format_double(s.r_squared) << ',' << io::format_double(s.spearman)
              << ',' << s.n_models << ',' << (s.defined ? "true" : "false") << '\n';
      io::write_summary_csv(
          (out_dir / ("summary_regime_" + std::to_string(idx++) + ".csv")).string(),
          regime.result.summaries);
    }
  } else {
    throw io::ValidationError("sweep kind must be prior, stochastic, or magnitude");
  }
  io::write_manifest((out_dir / "manifest.json").string(), loaded, cfg.master_seed);
  std::cout << "wrote sweep results to " << opts.out << "\n";
  return io::kExitOk;
}

int cmd_validate(const std::string& log_path, bool binary_strict) {
  const Dataset d = io::read_episode_log(log_path, binary_strict);
  const LabelSummary labels = label_positives(d);
  std::cout << "ok: " << d.episodes.size() << " episodes, " << labels.n_transitions
            << " transitions, " << labels.n_positive << " positive\n";
  return io::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classification-based off-policy evaluation toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", opts.config_path, "config file (JSON)")->required();
    auto* seed = cmd->add_option("--seed", seed_value, "override the config master seed");
    seed->each([&](const std::string&) { opts.seed_override = seed_value; });
    if (needs_out) cmd->add_option("--out", opts.out, "output path")->required();
  };

  auto* collect = app.add_subcommand("collect", "roll out a validation episode log");
  add_common(collect, true);

  auto* score = app.add_subcommand("score", "score one log with every metric");
  std::string log_path, qtable_path;
  double prior = 1.0, gamma = 1.0;
  bool binary_strict = false, extended = false;
  score->add_option("--log", log_path, "episode log (JSONL)")->required();
  score->add_option("--qtable", qtable_path, "Q-table file; omit if the log is annotated");
  score->add_option("--prior", prior, "PU class prior p(y=1)");
  score->add_option("--gamma", gamma, "discount for baseline metrics");
  score->add_flag("--binary-strict", binary_strict, "enforce binary reward invariants");
  score->add_flag("--extended", extended, "also report the dense-reward ExtOPC score");

  auto* correlate = app.add_subcommand("correlate", "run the correlation experiment");
  add_common(correlate, true);

  auto* sweep = app.add_subcommand("sweep", "prior / stochastic / magnitude sweeps");
  std::string kind;
  sweep->add_option("--kind", kind, "prior|stochastic|magnitude")->required();
  add_common(sweep, true);

  auto* validate = app.add_subcommand("validate", "check an episode log");
  validate->add_option("--log", log_path, "episode log (JSONL)")->required();
  validate->add_flag("--binary-strict", binary_strict, "enforce binary reward invariants");

  CLI11_PARSE(app, argc, argv);

  try {
    if (collect->parsed()) return cmd_collect(opts);
    if (score->parsed())
      return cmd_score(log_path, qtable_path, prior, gamma, binary_strict, extended);
    if (correlate->parsed()) return cmd_correlate(opts);
    if (sweep->parsed()) return cmd_sweep(kind, opts);
    if (validate->parsed()) return cmd_validate(log_path, binary_strict);
  } catch (const io::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return io::kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return io::kExitValidation;
  } catch (const io::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return io::kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io::kExitIo;
  }
  return io::kExitOk;
}
