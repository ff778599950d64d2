#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "opeval/harness.hpp"
#include "opeval/metrics.hpp"
#include "opeval/types.hpp"

namespace opeval::io {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitDegenerateOnly = 2;
inline constexpr int kExitIo = 3;

// Raised for malformed inputs; message carries file/line context.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// 17 significant digits; re-parsing reproduces the double bit-exactly.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& bytes);

// --- episode logs (JSON lines, one EpisodeRecord per line) ---

void write_episode_log(const std::string& path, const Dataset& d);
// Rejections carry the offending line number. binary_strict additionally
// enforces the binary reward MDP invariants.
Dataset read_episode_log(const std::string& path, bool binary_strict);

// --- Q-table files ---

void write_qtable(const std::string& path, const QTable& q);
QTable read_qtable(const std::string& path);

// --- config ---

struct LoadedConfig {
  ExperimentConfig config;
  nlohmann::json echo;       // parsed document, for the manifest
  std::string raw;           // exact file bytes, for hashing
};

// Strict parse: unknown keys are errors, not warnings.
LoadedConfig load_config(const std::string& path);

// --- tabular outputs ---

void write_reports_csv(const std::string& path, const std::vector<MetricReport>& rows);
void write_summary_csv(const std::string& path,
                       const std::vector<CorrelationSummary>& rows);
std::string score_csv(const std::vector<MetricScore>& scores);

void write_manifest(const std::string& path, const LoadedConfig& cfg,
                    std::uint64_t master_seed);

}  // namespace opeval::io
