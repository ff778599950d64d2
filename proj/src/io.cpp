#include "opeval/io.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace opeval::io {

using nlohmann::json;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

[[noreturn]] void fail_line(const std::string& path, std::size_t line,
                            const std::string& what) {
  std::ostringstream os;
  os << path << ":" << line << ": " << what;
  throw ValidationError(os.str());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  return f;
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& context) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ValidationError(context + ": unknown key '" + key + "'");
  }
}

}  // namespace

void write_episode_log(const std::string& path, const Dataset& d) {
  auto f = open_out(path);
  for (const auto& ep : d.episodes) {
    json steps = json::array();
    for (const auto& tr : ep.transitions) {
      json step{{"t", tr.t},
                {"state", tr.state},
                {"action", tr.action},
                {"reward", tr.reward}};
      if (tr.annotated) {
        step["q_sa"] = tr.q_sa;
        step["q_greedy_s"] = tr.q_greedy_s;
        step["q_greedy_next"] =
            tr.q_greedy_next ? json(*tr.q_greedy_next) : json(nullptr);
      }
      steps.push_back(std::move(step));
    }
    json record{{"episode_id", ep.id},
                {"final_reward", ep.final_reward},
                {"steps", std::move(steps)}};
    f << record.dump() << '\n';
  }
}

Dataset read_episode_log(const std::string& path, bool binary_strict) {
  auto f = open_in(path);
  Dataset d;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail_line(path, line_no, std::string("invalid JSON: ") + e.what());
    }
    try {
      reject_unknown_keys(record, {"episode_id", "final_reward", "steps"}, "record");
      Episode ep;
      ep.id = record.at("episode_id").get<std::string>();
      ep.final_reward = record.at("final_reward").get<double>();
      const json& steps = record.at("steps");
      if (!steps.is_array() || steps.empty())
        throw ValidationError("steps must be a non-empty array");
      const std::size_t T = steps.size();
      for (std::size_t i = 0; i < T; ++i) {
        const json& step = steps[i];
        reject_unknown_keys(
            step, {"t", "state", "action", "reward", "q_sa", "q_greedy_s", "q_greedy_next"},
            "step");
        Transition tr;
        tr.t = step.at("t").get<int>();
        tr.state = step.at("state").get<StateId>();
        tr.action = step.at("action").get<ActionId>();
        tr.reward = step.at("reward").get<double>();
        const bool terminal = (i + 1 == T);
        const bool has_q = step.contains("q_sa") || step.contains("q_greedy_s");
        if (has_q) {
          tr.q_sa = step.at("q_sa").get<double>();
          tr.q_greedy_s = step.at("q_greedy_s").get<double>();
          tr.annotated = true;
          const json& next = step.at("q_greedy_next");
          if (terminal != next.is_null())
            throw ValidationError("q_greedy_next must be null exactly at the last step");
          if (!next.is_null()) tr.q_greedy_next = next.get<double>();
        } else if (!terminal) {
          tr.q_greedy_next = 0.0;  // structural placeholder, not an annotation
        }
        ep.transitions.push_back(tr);
      }
      d.episodes.push_back(std::move(ep));
    } catch (const json::exception& e) {
      fail_line(path, line_no, e.what());
    } catch (const ValidationError& e) {
      fail_line(path, line_no, e.what());
    } catch (const std::invalid_argument& e) {
      fail_line(path, line_no, e.what());
    }
  }
  if (d.episodes.empty()) throw ValidationError(path + ": log contains no episodes");
  try {
    validate_dataset(d, binary_strict);
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return d;
}

void write_qtable(const std::string& path, const QTable& q) {
  json rows = json::array();
  for (std::size_t s = 0; s < q.state_count; ++s) {
    json row = json::array();
    for (std::size_t a = 0; a < q.action_count; ++a)
      row.push_back(q.at(static_cast<StateId>(s), static_cast<ActionId>(a)));
    rows.push_back(std::move(row));
  }
  json doc{{"id", q.id},
           {"state_count", q.state_count},
           {"action_count", q.action_count},
           {"values", std::move(rows)}};
  open_out(path) << doc.dump(2) << '\n';
}

QTable read_qtable(const std::string& path) {
  json doc;
  try {
    doc = json::parse(open_in(path));
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  try {
    reject_unknown_keys(doc, {"id", "state_count", "action_count", "values"}, path);
    QTable q(doc.at("state_count").get<std::size_t>(),
             doc.at("action_count").get<std::size_t>(),
             doc.value("id", ""));
    const json& rows = doc.at("values");
    if (rows.size() != q.state_count)
      throw ValidationError("values row count does not match state_count");
    for (std::size_t s = 0; s < q.state_count; ++s) {
      if (rows[s].size() != q.action_count)
        throw ValidationError("values column count does not match action_count");
      for (std::size_t a = 0; a < q.action_count; ++a) {
        const double v = rows[s][a].get<double>();
        if (!std::isfinite(v)) throw ValidationError("non-finite Q value");
        q.at(static_cast<StateId>(s), static_cast<ActionId>(a)) = v;
      }
    }
    return q;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

LoadedConfig load_config(const std::string& path) {
  LoadedConfig out;
  {
    auto f = open_in(path);
    std::ostringstream buf;
    buf << f.rdbuf();
    out.raw = buf.str();
  }
  json doc;
  try {
    doc = json::parse(out.raw);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
  try {
    reject_unknown_keys(doc,
                        {"env", "n_qfunctions", "q_distribution", "n_validation_episodes",
                         "behavior", "prior_grid", "slip_grid", "master_seed", "gamma"},
                        path);
    ExperimentConfig cfg;
    if (doc.contains("env")) {
      const json& env = doc["env"];
      reject_unknown_keys(env, {"type", "depth", "success_leaves", "slip"}, "env");
      if (env.value("type", "tree") != "tree")
        throw ValidationError("env.type must be 'tree'");
      const int depth = env.value("depth", 6);
      std::set<StateId> succ;
      if (env.contains("success_leaves"))
        for (const auto& leaf : env["success_leaves"]) succ.insert(leaf.get<StateId>());
      else
        succ.insert((StateId{1} << (depth - 1)) - 1);  // leftmost leaf
      cfg.env = TreeEnv(depth, std::move(succ), env.value("slip", 0.0));
    }
    cfg.n_qfunctions = doc.value("n_qfunctions", cfg.n_qfunctions);
    cfg.n_validation_episodes =
        doc.value("n_validation_episodes", cfg.n_validation_episodes);
    if (doc.contains("q_distribution")) {
      const json& dist = doc["q_distribution"];
      reject_unknown_keys(dist, {"kind", "max"}, "q_distribution");
      const std::string kind = dist.value("kind", "uniform");
      if (kind == "uniform") {
        cfg.q_distribution = {QDistribution::Kind::kSharedUniform, dist.value("max", 1.0)};
      } else if (kind == "per_index") {
        cfg.q_distribution = {QDistribution::Kind::kPerIndex, 1.0};
      } else {
        throw ValidationError("q_distribution.kind must be 'uniform' or 'per_index'");
      }
    }
    if (doc.contains("behavior")) {
      const json& b = doc["behavior"];
      reject_unknown_keys(b, {"kind"}, "behavior");
      if (b.value("kind", "uniform") != "uniform")
        throw ValidationError("behavior.kind must be 'uniform'");
    }
    if (doc.contains("prior_grid"))
      cfg.prior_grid = doc["prior_grid"].get<std::vector<double>>();
    if (doc.contains("slip_grid"))
      cfg.slip_grid = doc["slip_grid"].get<std::vector<double>>();
    cfg.master_seed = doc.value("master_seed", std::uint64_t{0});
    cfg.gamma = doc.value("gamma", 1.0);
    cfg.validate();
    out.config = std::move(cfg);
    out.echo = std::move(doc);
    return out;
  } catch (const json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

void write_reports_csv(const std::string& path, const std::vector<MetricReport>& rows) {
  auto f = open_out(path);
  f << "q_id,true_return";
  for (MetricName m : experiment_metrics()) f << ',' << metric_label(m);
  f << ",degenerate\n";
  for (const auto& row : rows) {
    f << row.q_id << ',' << format_double(row.true_return);
    for (MetricName m : experiment_metrics()) f << ',' << format_double(row.scores.at(m));
    f << ',';
    bool first = true;
    for (MetricName m : row.degenerate_flags) {
      if (!first) f << ';';
      f << metric_label(m);
      first = false;
    }
    f << '\n';
  }
}

void write_summary_csv(const std::string& path,
                       const std::vector<CorrelationSummary>& rows) {
  auto f = open_out(path);
  f << "metric,r_squared,spearman,n_models,defined\n";
  for (const auto& row : rows) {
    f << metric_label(row.metric_name) << ',' << format_double(row.r_squared) << ','
      << format_double(row.spearman) << ',' << row.n_models << ','
      << (row.defined ? "true" : "false") << '\n';
  }
}

std::string score_csv(const std::vector<MetricScore>& scores) {
  std::ostringstream os;
  os << "metric,value,orientation,degenerate\n";
  for (const auto& s : scores) {
    os << metric_label(s.metric_name) << ',' << format_double(s.value) << ','
       << (s.orientation == Orientation::kHigherBetter ? "higher-better" : "lower-better")
       << ',' << (s.degenerate ? "true" : "false") << '\n';
  }
  return os.str();
}

void write_manifest(const std::string& path, const LoadedConfig& cfg,
                    std::uint64_t master_seed) {
  char hash[20];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a64(cfg.raw)));
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  json doc{{"artifact_version", "0.1.0"},
           {"master_seed", master_seed},
           {"config", cfg.echo},
           {"config_fnv1a64", hash},
           {"created_unix_ms",
            std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
  open_out(path) << doc.dump(2) << '\n';
}

}  // namespace opeval::io
