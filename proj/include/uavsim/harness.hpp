#pragma once

// Experiment runner: wires policies to the environment, runs seeded episodes,
// aggregates per-episode metrics and writes CSV / JSON / gnuplot artifacts.

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsim/config.hpp"
#include "uavsim/edge_env.hpp"
#include "uavsim/layout.hpp"
#include "uavsim/llm/http_transport.hpp"
#include "uavsim/llm/llm_policy.hpp"
#include "uavsim/meta_controller.hpp"
#include "uavsim/policies.hpp"

namespace uavsim {

struct MetricsRow {
  int episode = 0;
  double total_reward = 0.0;
  double transport_reward = 0.0;
  double telecom_reward = 0.0;
  double step_count = 0.0;  // mean steps flown per UAV
  double collision_rate = 0.0;
  double transport_cost = 0.0;
  double telecom_cost = 0.0;
  long handover_count = 0;

  bool operator==(const MetricsRow&) const = default;
};

inline constexpr std::array<const char*, 8> kMetricNames{"total_reward",   "transport_reward", "telecom_reward",
                                                         "step_count",     "collision_rate",   "transport_cost",
                                                         "telecom_cost",   "handover_count"};
inline constexpr const char* kMetricsSchema = "uavsim-metrics-v1";

inline double metric_value(const MetricsRow& r, std::size_t i) {
  switch (i) {
    case 0: return r.total_reward;
    case 1: return r.transport_reward;
    case 2: return r.telecom_reward;
    case 3: return r.step_count;
    case 4: return r.collision_rate;
    case 5: return r.transport_cost;
    case 6: return r.telecom_cost;
    case 7: return static_cast<double>(r.handover_count);
  }
  throw std::out_of_range("metric index");
}

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return {buf.data(), end};
}

inline double parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::runtime_error("bad number '" + std::string(s) + "'");
  return v;
}

inline std::string metrics_csv_header() {
  std::string h = "episode";
  for (const char* n : kMetricNames) h += std::string(",") + n;
  return h;
}

inline std::string metrics_csv_line(const MetricsRow& r) {
  std::string out = std::to_string(r.episode);
  for (std::size_t i = 0; i < kMetricNames.size(); ++i) {
    out += ',';
    out += i == 7 ? std::to_string(r.handover_count) : format_double(metric_value(r, i));
  }
  return out;
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << metrics_csv_header() << '\n';
  for (const auto& r : rows) out << metrics_csv_line(r) << '\n';
}

inline std::vector<MetricsRow> read_metrics_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != metrics_csv_header()) throw std::runtime_error("metrics.csv: unexpected header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(',')) {
      f.push_back(rest.substr(0, pos));
      rest.remove_prefix(pos + 1);
    }
    f.push_back(rest);
    if (f.size() != kMetricNames.size() + 1) throw std::runtime_error("metrics.csv: wrong field count");
    MetricsRow r;
    r.episode = static_cast<int>(parse_double(f[0]));
    r.total_reward = parse_double(f[1]);
    r.transport_reward = parse_double(f[2]);
    r.telecom_reward = parse_double(f[3]);
    r.step_count = parse_double(f[4]);
    r.collision_rate = parse_double(f[5]);
    r.transport_cost = parse_double(f[6]);
    r.telecom_cost = parse_double(f[7]);
    r.handover_count = static_cast<long>(parse_double(f[8]));
    rows.push_back(r);
  }
  return rows;
}

struct MetricStat {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

/// Mean and population stddev of every metric over the last `window` rows (all rows if fewer).
inline std::array<MetricStat, kMetricNames.size()> summarize(const std::vector<MetricsRow>& rows,
                                                             std::size_t window = SIZE_MAX) {
  std::array<MetricStat, kMetricNames.size()> out{};
  const std::size_t n = std::min(window, rows.size());
  if (n == 0) return out;
  const std::size_t first = rows.size() - n;
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    double sum = 0.0;
    for (std::size_t i = first; i < rows.size(); ++i) sum += metric_value(rows[i], m);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = first; i < rows.size(); ++i) ss += std::pow(metric_value(rows[i], m) - mean, 2);
    out[m] = {mean, std::sqrt(ss / static_cast<double>(n))};
  }
  return out;
}

inline constexpr std::size_t kSummaryWindow = 200;

struct CollisionRecord {
  int step = 0;
  int a = 0;
  int b = 0;
};

struct EpisodeLog {
  int episode = 0;
  std::uint64_t seed = 0;
  std::vector<CollisionRecord> collisions;
  long edge_handovers = 0;
  long meta_handovers = 0;
  int meta_decisions = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t episode_seed(std::uint64_t seed, int episode) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(episode) + 1));
}

inline std::uint64_t decision_seed(std::uint64_t ep_seed, int step, int uav) {
  return splitmix64(ep_seed ^ (static_cast<std::uint64_t>(step) << 24) ^ static_cast<std::uint64_t>(uav));
}

/// One simulated highway: the edge environment driven by a shared edge policy, exposed
/// to the meta loop through reset / meta_state / apply_meta_action / advance.
class Simulation {
 public:
  using StepObserver = std::function<void(const EpisodeLog&, const StepOutcome&, const std::vector<std::pair<int, JointAction>>&,
                                          const EdgeEnv&)>;

  Simulation(const ScenarioConfig& cfg, EdgePolicy& policy, StepObserver on_step = {})
      : cfg_(cfg), policy_(policy), env_(cfg.env, cfg.station_directory()), on_step_(std::move(on_step)) {}

  void reset(int episode) {
    log_ = {};
    log_.episode = episode;
    log_.seed = episode_seed(cfg_.seed, episode);
    std::mt19937_64 rng(log_.seed);
    auto fleet = spawn_fleet(cfg_.fleet, cfg_.env.mobility, rng);
    env_.reset(log_.seed, std::move(fleet.uavs), std::move(fleet.priorities));
    row_ = {};
    row_.episode = episode;
    steps_flown_ = 0;
  }

  [[nodiscard]] MetaState meta_state() const { return env_.meta_state(); }

  MetaApplyResult apply_meta_action(const MetaAction& a) {
    ++log_.meta_decisions;
    MetaApplyResult r;
    try {
      r = env_.apply_meta_action(a);
    } catch (const MetaActionError& e) {
      spdlog::warn("episode {}: meta action {} rejected: {}", log_.episode, to_string(a), e.what());
      return {};
    }
    log_.meta_handovers += r.handover_count;
    row_.handover_count += r.handover_count;
    return r;
  }

  /// Up to `steps` edge steps; false once every UAV is done.
  bool advance(int steps) {
    for (int k = 0; k < steps && !env_.all_done(); ++k) step_once();
    return !env_.all_done();
  }

  /// Metrics of the episode so far.
  [[nodiscard]] MetricsRow metrics() const {
    MetricsRow r = row_;
    const double n = static_cast<double>(env_.uavs().size());
    r.total_reward = r.transport_reward + r.telecom_reward;
    r.step_count = steps_flown_ / n;
    long collided = 0;
    for (const auto& u : env_.uavs()) collided += env_.collided(u.uav_id) ? 1 : 0;
    r.collision_rate = static_cast<double>(collided) / n;
    return r;
  }

  [[nodiscard]] const EpisodeLog& log() const { return log_; }
  [[nodiscard]] const EdgeEnv& env() const { return env_; }

 private:
  void step_once() {
    std::vector<std::pair<int, JointAction>> actions;
    std::vector<DecisionContext> ctxs;
    for (const auto& u : env_.uavs()) {
      if (env_.done(u.uav_id)) continue;
      ctxs.push_back(make_decision_context(env_, u.uav_id, decision_seed(log_.seed, env_.step_index(), u.uav_id)));
      actions.emplace_back(u.uav_id, policy_.decide(ctxs.back()));
    }
    const auto out = env_.step(actions);
    for (std::size_t i = 0; i < out.per_uav.size(); ++i) {
      const auto& r = out.per_uav[i];
      row_.transport_reward += r.transport_reward;
      row_.telecom_reward += r.telecom_reward;
      row_.transport_cost += r.transport_cost;
      row_.telecom_cost += r.telecom_cost;
      const auto next = make_decision_context(env_, r.uav_id, 0);
      policy_.record_outcome(ctxs[i], actions[i].second, r.transport_reward_raw + r.telecom_reward, next);
    }
    steps_flown_ += static_cast<double>(out.per_uav.size());
    row_.handover_count += static_cast<long>(out.handovers.size());
    log_.edge_handovers += static_cast<long>(out.handovers.size());
    for (const auto& [a, b] : out.collisions) log_.collisions.push_back({out.step, a, b});
    if (on_step_) on_step_(log_, out, actions, env_);
  }

  const ScenarioConfig& cfg_;
  EdgePolicy& policy_;
  EdgeEnv env_;
  StepObserver on_step_;
  EpisodeLog log_;
  MetricsRow row_;
  double steps_flown_ = 0.0;
};

static_assert(MetaEnvironment<Simulation>);

// ---- policy wiring ----

struct LlmStatsSnapshot {
  long decisions = 0;
  long fallbacks = 0;
  long endpoint_failures = 0;
  long parse_failures = 0;
  long invalid_actions = 0;
};

inline LlmStatsSnapshot snapshot(const llm::LlmPolicyStats& s) {
  return {s.decisions.load(), s.fallbacks.load(), s.endpoint_failures.load(), s.parse_failures.load(),
          s.invalid_actions.load()};
}

inline bool uses_llm(const ScenarioConfig& c) {
  return c.edge_policy == EdgePolicyKind::kLlm || c.meta_policy == MetaPolicyKind::kLlm;
}

/// Mock transcript if configured, else the live endpoint if enabled.
inline std::unique_ptr<llm::LlmTransport> make_transport(const ScenarioConfig& c) {
  if (c.mock_transcript) return std::make_unique<llm::ScriptedTransport>(llm::ScriptedTransport::from_file(*c.mock_transcript));
  if (c.live_llm) return std::make_unique<llm::HttpTransport>(c.llm.endpoint);
  throw ConfigValidationError("an llm policy needs llm.mock_transcript (or --mock-llm) or --live-llm");
}

inline std::unique_ptr<EdgePolicy> make_edge_policy(const ScenarioConfig& c, llm::LlmTransport* transport) {
  switch (c.edge_policy) {
    case EdgePolicyKind::kRandom: return std::make_unique<RandomPolicy>();
    case EdgePolicyKind::kSafeHeuristic: return std::make_unique<SafeHeuristicPolicy>();
    case EdgePolicyKind::kGreedyTelecom: return make_greedy_telecom_policy();
    case EdgePolicyKind::kTabularQ: return std::make_unique<TabularQPolicy>(c.tabular, c.seed);
    case EdgePolicyKind::kFixed: return std::make_unique<FixedPolicy>(c.fixed_action);
    case EdgePolicyKind::kLlm:
      if (transport == nullptr) throw std::logic_error("llm edge policy without a transport");
      return std::make_unique<llm::LlmEdgePolicy>(c.llm, *transport);
  }
  throw std::logic_error("unknown edge policy");
}

inline std::unique_ptr<MetaPolicy> make_meta_policy(const ScenarioConfig& c, llm::LlmTransport* transport) {
  switch (c.meta_policy) {
    case MetaPolicyKind::kNone: return nullptr;
    case MetaPolicyKind::kRuleBased: return std::make_unique<RuleBasedMetaPolicy>();
    case MetaPolicyKind::kIdle: return std::make_unique<IdleMetaPolicy>();
    case MetaPolicyKind::kLlm:
      if (transport == nullptr) throw std::logic_error("llm meta policy without a transport");
      return std::make_unique<llm::LlmMetaPolicy>(c.llm, *transport);
  }
  throw std::logic_error("unknown meta policy");
}

/// Forwards to a meta policy and reports every transition.
class ObservedMetaPolicy final : public MetaPolicy {
 public:
  ObservedMetaPolicy(MetaPolicy& inner, std::function<void(const MetaTransition&)> sink)
      : inner_(inner), sink_(std::move(sink)) {}
  MetaAction decide(const MetaState& s) override { return inner_.decide(s); }
  void record(const MetaTransition& t) override {
    inner_.record(t);
    if (sink_) sink_(t);
  }
  [[nodiscard]] std::string name() const override { return inner_.name(); }

 private:
  MetaPolicy& inner_;
  std::function<void(const MetaTransition&)> sink_;
};

// ---- reports ----

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
}

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

inline nlohmann::json stats_json(const std::array<MetricStat, kMetricNames.size()>& s) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) j[kMetricNames[m]] = {{"mean", s[m].mean}, {"stddev", s[m].stddev}};
  return j;
}

/// metrics.csv, summary.json and one gnuplot series per metric.
inline void emit_reports(const std::vector<MetricsRow>& rows, const std::filesystem::path& out_dir,
                         const nlohmann::json& extra = nlohmann::json::object()) {
  ensure_dir(out_dir);
  {
    auto out = open_out(out_dir / "metrics.csv");
    write_metrics_csv(out, rows);
    if (!out) throw std::runtime_error("write failed: " + (out_dir / "metrics.csv").string());
  }
  nlohmann::json summary = {{"schema", kMetricsSchema},
                            {"columns", metrics_csv_header()},
                            {"episodes", rows.size()},
                            {"all_episodes", stats_json(summarize(rows))},
                            {"final_window", {{"episodes", std::min(kSummaryWindow, rows.size())},
                                              {"metrics", stats_json(summarize(rows, kSummaryWindow))}}}};
  for (const auto& [k, v] : extra.items()) summary[k] = v;
  open_out(out_dir / "summary.json") << summary.dump(2) << '\n';
  for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
    auto out = open_out(out_dir / (std::string(kMetricNames[m]) + ".dat"));
    out << "# episode " << kMetricNames[m] << '\n';
    for (const auto& r : rows) out << r.episode << ' ' << format_double(metric_value(r, m)) << '\n';
  }
}

// ---- experiment ----

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;
  llm::LlmTransport* transport = nullptr;  // overrides make_transport when set
};

struct RunResult {
  std::vector<MetricsRow> rows;
  std::vector<EpisodeLog> logs;
  std::vector<MetaTransition> meta_transcript;
  std::optional<LlmStatsSnapshot> edge_llm;
  std::optional<LlmStatsSnapshot> meta_llm;
};

inline nlohmann::json meta_transition_json(const MetaTransition& t) {
  return {{"episode", t.episode},
          {"step", t.step},
          {"load_before_mbps", t.state.haps_load_mbps},
          {"action", to_string(t.action)},
          {"load_after_mbps", t.next_state.haps_load_mbps},
          {"reward", t.reward}};
}

inline nlohmann::json episode_log_json(const EpisodeLog& l) {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& x : l.collisions) c.push_back({{"step", x.step}, {"a", x.a}, {"b", x.b}});
  return {{"episode", l.episode},           {"seed", l.seed},
          {"collisions", c},                {"edge_handovers", l.edge_handovers},
          {"meta_handovers", l.meta_handovers}, {"meta_decisions", l.meta_decisions}};
}

inline nlohmann::json llm_stats_json(const LlmStatsSnapshot& s) {
  return {{"decisions", s.decisions},
          {"fallbacks", s.fallbacks},
          {"endpoint_failures", s.endpoint_failures},
          {"parse_failures", s.parse_failures},
          {"invalid_actions", s.invalid_actions}};
}

/// Runs cfg.episodes seeded episodes. With an output directory, metrics.csv and the
/// episode logs are appended and flushed per episode so an abort leaves the finished part.
inline RunResult run_experiment(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  RunResult result;

  std::unique_ptr<llm::LlmTransport> owned;
  llm::LlmTransport* transport = opts.transport;
  if (uses_llm(cfg) && transport == nullptr) {
    owned = make_transport(cfg);
    transport = owned.get();
  }
  std::ofstream transcript_out, metrics_out, episodes_out, meta_out, steps_out;
  std::unique_ptr<llm::RecordingTransport> recorder;
  if (opts.out_dir) {
    ensure_dir(*opts.out_dir);
    metrics_out = open_out(*opts.out_dir / "metrics.csv");
    metrics_out << metrics_csv_header() << '\n' << std::flush;
    episodes_out = open_out(*opts.out_dir / "episodes.jsonl");
    if (cfg.meta_policy != MetaPolicyKind::kNone) meta_out = open_out(*opts.out_dir / "meta_transcript.jsonl");
    if (cfg.log_steps) steps_out = open_out(*opts.out_dir / "steps.jsonl");
    if (transport != nullptr) {
      transcript_out = open_out(*opts.out_dir / "llm_transcript.jsonl");
      recorder = std::make_unique<llm::RecordingTransport>(*transport, transcript_out);
      transport = recorder.get();
    }
  }

  auto edge = make_edge_policy(cfg, transport);
  auto meta = make_meta_policy(cfg, transport);

  Simulation::StepObserver on_step;
  if (steps_out.is_open()) {
    on_step = [&steps_out](const EpisodeLog& log, const StepOutcome& out,
                           const std::vector<std::pair<int, JointAction>>& actions, const EdgeEnv& env) {
      for (std::size_t i = 0; i < out.per_uav.size(); ++i) {
        const auto& r = out.per_uav[i];
        const auto& u = env.uav(r.uav_id);
        steps_out << nlohmann::json{{"episode", log.episode},
                                    {"step", out.step},
                                    {"uav", r.uav_id},
                                    {"action", llm::joint_action_label(actions[i].second)},
                                    {"x_m", u.x_m},
                                    {"lane", u.lane_index},
                                    {"speed_mps", u.speed_mps},
                                    {"station", u.serving_station ? u.serving_station->value : -1},
                                    {"weighted_rate_mbps", r.weighted_rate_mbps},
                                    {"transport_reward", r.transport_reward},
                                    {"telecom_reward", r.telecom_reward},
                                    {"collided", r.collided}}
                         .dump()
                  << '\n';
      }
    };
  }
  Simulation sim(cfg, *edge, on_step);

  auto finish_episode = [&](int) {
    const MetricsRow row = sim.metrics();
    result.rows.push_back(row);
    result.logs.push_back(sim.log());
    if (metrics_out.is_open()) metrics_out << metrics_csv_line(row) << '\n' << std::flush;
    if (episodes_out.is_open()) episodes_out << episode_log_json(sim.log()).dump() << '\n' << std::flush;
  };

  if (meta) {
    ObservedMetaPolicy observed(*meta, [&](const MetaTransition& t) {
      if (meta_out.is_open()) meta_out << meta_transition_json(t).dump() << '\n';
    });
    result.meta_transcript = run_meta_loop(sim, observed, cfg.episodes, cfg.env.episode_cap, cfg.meta, finish_episode);
  } else {
    for (int ep = 0; ep < cfg.episodes; ++ep) {
      sim.reset(ep);
      sim.advance(cfg.env.episode_cap);
      finish_episode(ep);
    }
  }

  if (auto* p = dynamic_cast<llm::LlmEdgePolicy*>(edge.get())) result.edge_llm = snapshot(p->stats());
  if (auto* p = dynamic_cast<llm::LlmMetaPolicy*>(meta.get())) result.meta_llm = snapshot(p->stats());

  if (opts.out_dir) {
    metrics_out.close();
    nlohmann::json extra = {{"edge_policy", to_string(cfg.edge_policy)}, {"meta_policy", to_string(cfg.meta_policy)}};
    if (result.edge_llm) extra["edge_llm"] = llm_stats_json(*result.edge_llm);
    if (result.meta_llm) extra["meta_llm"] = llm_stats_json(*result.meta_llm);
    emit_reports(result.rows, *opts.out_dir, extra);
    nlohmann::json run = {{"format", "uavsim-run"}, {"version", 1}, {"config", to_json(cfg)}};
    if (transport != nullptr) run["llm_transcript"] = "llm_transcript.jsonl";
    open_out(*opts.out_dir / "run.json") << run.dump(2) << '\n';
  }
  return result;
}

// ---- sweep ----

inline const std::vector<std::string> kSweepParameters{"num_uavs", "num_terrestrial_bs", "policy"};

/// Copy of `cfg` with one sweepable parameter set from its text form.
inline ScenarioConfig with_parameter(ScenarioConfig cfg, const std::string& param, const std::string& value) {
  auto as_int = [&]() {
    int v = 0;
    const auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || p != value.data() + value.size()) {
      throw ConfigValidationError(param + ": '" + value + "' is not an integer");
    }
    return v;
  };
  if (param == "num_uavs") {
    cfg.fleet.num_uavs = as_int();
  } else if (param == "num_terrestrial_bs") {
    if (cfg.stations) throw ConfigValidationError("num_terrestrial_bs cannot be swept with explicit stations");
    cfg.layout.num_bs = as_int();
  } else if (param == "policy") {
    const auto k = parse_edge_policy_kind(value);
    if (!k) throw ConfigValidationError("policy: unknown edge policy '" + value + "'");
    cfg.edge_policy = *k;
  } else {
    throw ConfigValidationError("parameter '" + param + "' is not sweepable (num_uavs, num_terrestrial_bs, policy)");
  }
  cfg.validate();
  return cfg;
}

struct SweepRow {
  std::string parameter;
  std::string value;
  std::size_t episodes_averaged = 0;
  std::array<MetricStat, kMetricNames.size()> stats{};
};

/// One summary row per value; each value runs from the same seed, independent of list order.
inline std::vector<SweepRow> sweep(const ScenarioConfig& cfg, const std::string& param,
                                   const std::vector<std::string>& values,
                                   const std::optional<std::filesystem::path>& out_dir = std::nullopt,
                                   llm::LlmTransport* transport = nullptr) {
  std::vector<ScenarioConfig> cfgs;
  for (const auto& v : values) cfgs.push_back(with_parameter(cfg, param, v));  // validate all before running
  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunOptions o;
    o.transport = transport;
    if (out_dir) o.out_dir = *out_dir / (param + "=" + values[i]);
    const auto res = run_experiment(cfgs[i], o);
    SweepRow r;
    r.parameter = param;
    r.value = values[i];
    r.episodes_averaged = std::min(kSummaryWindow, res.rows.size());
    r.stats = summarize(res.rows, kSummaryWindow);
    rows.push_back(r);
  }
  if (out_dir) {
    ensure_dir(*out_dir);
    auto csv = open_out(*out_dir / "sweep.csv");
    csv << "parameter,value,episodes";
    for (const char* n : kMetricNames) csv << ',' << n << "_mean," << n << "_stddev";
    csv << '\n';
    nlohmann::json js = nlohmann::json::array();
    for (const auto& r : rows) {
      csv << r.parameter << ',' << r.value << ',' << r.episodes_averaged;
      for (const auto& s : r.stats) csv << ',' << format_double(s.mean) << ',' << format_double(s.stddev);
      csv << '\n';
      js.push_back({{"parameter", r.parameter}, {"value", r.value}, {"episodes", r.episodes_averaged},
                    {"metrics", stats_json(r.stats)}});
    }
    open_out(*out_dir / "sweep.json") << nlohmann::json{{"schema", kMetricsSchema}, {"rows", js}}.dump(2) << '\n';
    for (std::size_t m = 0; m < kMetricNames.size(); ++m) {
      auto dat = open_out(*out_dir / ("sweep_" + std::string(kMetricNames[m]) + ".dat"));
      dat << "# " << param << " mean stddev\n";
      for (const auto& r : rows) {
        dat << r.value << ' ' << format_double(r.stats[m].mean) << ' ' << format_double(r.stats[m].stddev) << '\n';
      }
    }
  }
  return rows;
}

// ---- replay ----

struct ReplayResult {
  bool identical = false;
  std::filesystem::path original_csv;
  std::filesystem::path replay_csv;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Re-runs a recorded run from its run.json, answering LLM queries from the recorded
/// transcript, and compares metrics.csv byte for byte.
inline ReplayResult replay(const std::filesystem::path& run_dir, const std::filesystem::path& out_dir) {
  const auto run_path = run_dir / "run.json";
  nlohmann::json run;
  try {
    run = nlohmann::json::parse(slurp(run_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigValidationError(run_path.string() + ": " + e.what());
  }
  if (run.value("format", "") != "uavsim-run") throw ConfigValidationError(run_path.string() + ": not a run record");
  auto cfg_json = run.at("config");
  if (run.contains("llm_transcript")) {
    cfg_json["llm"]["mock_transcript"] = (run_dir / run.at("llm_transcript").get<std::string>()).string();
  }
  auto cfg = config_from_json(cfg_json, run_dir);
  cfg.live_llm = false;
  RunOptions o;
  o.out_dir = out_dir;
  run_experiment(cfg, o);
  ReplayResult r;
  r.original_csv = run_dir / "metrics.csv";
  r.replay_csv = out_dir / "metrics.csv";
  r.identical = slurp(r.original_csv) == slurp(r.replay_csv);
  return r;
}

}  // namespace uavsim
