#pragma once

// Scenario configuration: JSON loading with strict keys, defaults, validation,
// and the inverse serialisation used to pin a run for replay.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsim/edge_env.hpp"
#include "uavsim/layout.hpp"
#include "uavsim/llm/llm_policy.hpp"
#include "uavsim/meta_controller.hpp"
#include "uavsim/policies.hpp"

namespace uavsim {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed JSON; carries the 1-based line and column.
class ConfigParseError : public ConfigError {
 public:
  ConfigParseError(const std::string& what, int line, int column) : ConfigError(what), line_(line), column_(column) {}
  [[nodiscard]] int line() const { return line_; }
  [[nodiscard]] int column() const { return column_; }

 private:
  int line_;
  int column_;
};

/// Well-formed JSON that breaks a documented invariant, or an unknown key.
class ConfigValidationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

enum class EdgePolicyKind { kRandom, kSafeHeuristic, kGreedyTelecom, kTabularQ, kLlm, kFixed };
enum class MetaPolicyKind { kNone, kRuleBased, kIdle, kLlm };

inline constexpr std::string_view to_string(EdgePolicyKind k) {
  switch (k) {
    case EdgePolicyKind::kRandom: return "random";
    case EdgePolicyKind::kSafeHeuristic: return "safe_heuristic";
    case EdgePolicyKind::kGreedyTelecom: return "greedy_telecom";
    case EdgePolicyKind::kTabularQ: return "tabular_q";
    case EdgePolicyKind::kLlm: return "llm";
    case EdgePolicyKind::kFixed: return "fixed";
  }
  return "safe_heuristic";
}

inline constexpr std::string_view to_string(MetaPolicyKind k) {
  switch (k) {
    case MetaPolicyKind::kNone: return "none";
    case MetaPolicyKind::kRuleBased: return "rule_based";
    case MetaPolicyKind::kIdle: return "idle";
    case MetaPolicyKind::kLlm: return "llm";
  }
  return "none";
}

inline std::optional<EdgePolicyKind> parse_edge_policy_kind(std::string_view s) {
  for (auto k : {EdgePolicyKind::kRandom, EdgePolicyKind::kSafeHeuristic, EdgePolicyKind::kGreedyTelecom,
                 EdgePolicyKind::kTabularQ, EdgePolicyKind::kLlm, EdgePolicyKind::kFixed}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

inline std::optional<MetaPolicyKind> parse_meta_policy_kind(std::string_view s) {
  for (auto k : {MetaPolicyKind::kNone, MetaPolicyKind::kRuleBased, MetaPolicyKind::kIdle, MetaPolicyKind::kLlm}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

struct ScenarioConfig {
  int episodes = 100;
  std::uint64_t seed = 1;
  bool log_steps = false;  // per-step records in steps.jsonl

  FleetParams fleet;    // num_uavs and spawn geometry
  LayoutParams layout;  // station grid, antenna, HAPS
  std::optional<std::vector<BsSite>> stations;  // explicit sites override the grid
  EnvConfig env;

  EdgePolicyKind edge_policy = EdgePolicyKind::kSafeHeuristic;
  JointAction fixed_action;
  TabularQParams tabular;
  MetaPolicyKind meta_policy = MetaPolicyKind::kRuleBased;
  MetaLoopOptions meta;

  llm::LlmPolicyConfig llm;
  std::optional<std::string> mock_transcript;  // absolute path once loaded
  bool live_llm = false;

  [[nodiscard]] int num_uavs() const { return fleet.num_uavs; }
  [[nodiscard]] int num_terrestrial_bs() const {
    return stations ? static_cast<int>(stations->size()) : layout.num_bs;
  }

  [[nodiscard]] std::vector<BsSite> terrestrial_sites() const { return stations ? *stations : grid_sites(layout); }
  [[nodiscard]] StationDirectory station_directory() const {
    return StationDirectory(terrestrial_sites(), haps_site(layout));
  }

  /// Throws ConfigValidationError naming the violated invariant.
  void validate() const {
    auto fail = [](const std::string& m) { throw ConfigValidationError(m); };
    if (fleet.num_uavs < 1) fail("num_uavs >= 1 violated");
    if (episodes < 0) fail("episodes >= 0 violated");
    if (!(env.mobility.v_min_mps < env.mobility.v_max_mps)) fail("kinematics: v_min_mps < v_max_mps violated");
    if (env.episode_cap < 1) fail("episode_cap >= 1 violated");
    if (!stations && layout.num_bs < 1) fail("terrestrial.num_bs >= 1 violated");
    if (stations && stations->empty()) fail("terrestrial.stations must list at least one station");
    if (layout.bs_quota < 1) fail("terrestrial.quota >= 1 violated");
    if (layout.haps_quota < 1) fail("haps.quota >= 1 violated");
    if (!(layout.highway_length_m > 0)) fail("highway.length_m > 0 violated");
    if (meta.period < 1) fail("meta.period >= 1 violated");
    if (fleet.spacing_m <= 0 || fleet.jitter_m < 0) fail("highway: spacing_m > 0 and jitter_m >= 0 violated");
    if (env.mobility.num_lanes * fleet.spacing_m - fleet.jitter_m < env.mobility.collision_length_m) {
      fail("highway: num_lanes * spacing_m - jitter_m >= collision_length_m violated (UAVs would spawn colliding)");
    }
    if (mock_transcript && !std::filesystem::exists(*mock_transcript)) {
      fail("llm.mock_transcript: file does not exist: " + *mock_transcript);
    }
    try {
      env.validate();
      env.path_loss.validate();
      env.ground.validate();
      layout.antenna.validate();
      layout.haps_link.validate();
      tabular.validate();
      meta.weights.validate();
      llm.endpoint.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (llm.store_capacity < 1) fail("llm.store_capacity >= 1 violated");
  }
};

namespace config_detail {

using nlohmann::json;

/// Reads keys from one JSON object and rejects any that were not consumed.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigValidationError(where() + "must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    const json& v = j_.at(key);
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigValidationError(where(key) + "expected a boolean");
      } else if constexpr (std::is_arithmetic_v<T>) {
        if (!v.is_number()) throw ConfigValidationError(where(key) + "expected a number");
        if constexpr (std::is_integral_v<T>) {
          if (!v.is_number_integer() && !v.is_number_unsigned()) {
            throw ConfigValidationError(where(key) + "expected an integer");
          }
        }
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ConfigValidationError(where(key) + "expected a string");
      }
      out = v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigValidationError(where(key) + e.what());
    }
  }

  /// Degrees in the file, radians in memory.
  void get_deg(const std::string& key, double& out_rad) {
    if (!j_.contains(key)) return;
    double deg = rad_to_deg(out_rad);
    get(key, deg);
    out_rad = deg_to_rad(deg);
  }

  [[nodiscard]] bool has(const std::string& key) const { return j_.contains(key); }

  std::optional<Section> sub(const std::string& key) {
    if (!j_.contains(key)) return std::nullopt;
    used_.insert(key);
    return Section(j_.at(key), path_.empty() ? key : path_ + "." + key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  [[nodiscard]] std::string where(const std::string& key = "") const {
    std::string p = path_;
    if (!key.empty()) p += (p.empty() ? "" : ".") + key;
    return p.empty() ? "" : p + ": ";
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigValidationError("unknown key '" + (path_.empty() ? k : path_ + "." + k) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
  std::filesystem::path path(p);
  if (path.is_relative()) path = base / path;
  return path.lexically_normal().string();
}

inline std::vector<BsSite> read_stations(const json& arr, const std::string& where, const ScenarioConfig& c) {
  if (!arr.is_array()) throw ConfigValidationError(where + ": expected an array of stations");
  std::vector<BsSite> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    Section s(arr[i], where + "[" + std::to_string(i) + "]");
    BsSite b;
    b.antenna = c.layout.antenna;
    b.tx_power_dbm = c.layout.tx_power_dbm;
    b.quota = c.layout.bs_quota;
    b.position.z = c.layout.bs_height_m;
    if (!s.has("x") || !s.has("y")) throw ConfigValidationError(where + "[" + std::to_string(i) + "]: x and y required");
    s.get("x", b.position.x);
    s.get("y", b.position.y);
    s.get("z", b.position.z);
    s.get("tx_power_dbm", b.tx_power_dbm);
    s.get("quota", b.quota);
    s.finish();
    if (b.quota < 1) throw ConfigValidationError(where + "[" + std::to_string(i) + "].quota >= 1 violated");
    out.push_back(b);
  }
  return out;
}

inline std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_text(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // byte is one past the offending character
    const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigParseError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error: " +
                               e.what(),
                           line, col);
  }
}

}  // namespace config_detail

/// Builds a config from parsed JSON. Relative file references resolve against `base_dir`.
inline ScenarioConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = ".") {
  using config_detail::Section;
  ScenarioConfig c;
  Section root(j, "");

  int num_uavs = c.fleet.num_uavs;
  root.get("num_uavs", num_uavs);
  c.fleet.num_uavs = num_uavs;
  root.get("episodes", c.episodes);
  root.get("seed", c.seed);
  root.get("episode_cap", c.env.episode_cap);
  root.get("log_steps", c.log_steps);

  if (auto s = root.sub("highway")) {
    s->get("length_m", c.layout.highway_length_m);
    s->get("num_lanes", c.env.mobility.num_lanes);
    s->get("lane_width_m", c.env.mobility.lane_width_m);
    s->get("base_altitude_m", c.env.mobility.base_altitude_m);
    s->get("lane_altitude_step_m", c.env.mobility.lane_altitude_step_m);
    s->get("collision_length_m", c.env.mobility.collision_length_m);
    s->get("initial_x_m", c.fleet.initial_x_m);
    s->get("spacing_m", c.fleet.spacing_m);
    s->get("jitter_m", c.fleet.jitter_m);
    s->finish();
  }
  if (auto s = root.sub("kinematics")) {
    s->get("v_min_mps", c.env.mobility.v_min_mps);
    s->get("v_max_mps", c.env.mobility.v_max_mps);
    s->get("speed_step_mps", c.env.mobility.speed_step_mps);
    s->get("dt_s", c.env.mobility.dt_s);
    s->finish();
  }
  if (auto s = root.sub("idm")) {
    s->get("desired_speed_mps", c.env.idm.desired_speed_mps);
    s->get("safe_time_headway_s", c.env.idm.safe_time_headway_s);
    s->get("max_accel_mps2", c.env.idm.max_accel_mps2);
    s->get("comfortable_decel_mps2", c.env.idm.comfortable_decel_mps2);
    s->get("min_gap_m", c.env.idm.min_gap_m);
    s->get("accel_exponent", c.env.idm.accel_exponent);
    s->finish();
  }
  if (auto s = root.sub("antenna")) {
    auto& a = c.layout.antenna;
    s->get("peak_element_gain_db", a.peak_element_gain_db);
    s->get_deg("az_3db_deg", a.az_3db_rad);
    s->get_deg("el_3db_deg", a.el_3db_rad);
    s->get("front_back_ratio_db", a.front_back_ratio_db);
    s->get("sidelobe_attenuation_db", a.sidelobe_attenuation_db);
    s->get("num_elements", a.num_elements);
    s->get_deg("downtilt_deg", a.downtilt_rad);
    std::string mode = a.mode == PatternMode::kLiteral ? "literal" : a.mode == PatternMode::kSquared ? "squared" : "default";
    s->get("pattern_mode", mode);
    if (mode == "default") {
      a.mode = PatternMode::kDefault;
    } else if (mode == "literal") {
      a.mode = PatternMode::kLiteral;
    } else if (mode == "squared") {
      a.mode = PatternMode::kSquared;
    } else {
      throw ConfigValidationError("antenna.pattern_mode must be one of default, literal, squared");
    }
    s->finish();
  }
  if (auto s = root.sub("path_loss")) {
    s->get("carrier_hz", c.env.path_loss.carrier_hz);
    s->get("excess_loss_los_db", c.env.path_loss.excess_loss_los_db);
    s->get("excess_loss_nlos_db", c.env.path_loss.excess_loss_nlos_db);
    s->finish();
  }
  std::optional<nlohmann::json> stations_json;
  std::string stations_origin;
  if (auto s = root.sub("terrestrial")) {
    s->get("num_bs", c.layout.num_bs);
    s->get("quota", c.layout.bs_quota);
    s->get("tx_power_dbm", c.layout.tx_power_dbm);
    s->get("height_m", c.layout.bs_height_m);
    s->get("lateral_offset_m", c.layout.bs_lateral_offset_m);
    s->get("noise_power_dbm", c.env.ground.noise_power_dbm);
    s->get("rx_power_min_dbm", c.env.ground.rx_power_min_dbm);
    s->get("rx_power_max_dbm", c.env.ground.rx_power_max_dbm);
    s->get("bandwidth_hz", c.env.ground.bandwidth_hz);
    s->get("cap_rx_power", c.env.cap_rx_power);
    if (s->has("stations") && s->has("stations_file")) {
      throw ConfigValidationError("terrestrial: give either stations or stations_file, not both");
    }
    if (s->has("stations")) {
      stations_json = s->raw("stations");
      stations_origin = "terrestrial.stations";
    }
    if (s->has("stations_file")) {
      std::string file;
      s->get("stations_file", file);
      file = config_detail::resolve_path(file, base_dir);
      std::ifstream in(file);
      if (!in) throw ConfigValidationError("terrestrial.stations_file: file does not exist: " + file);
      std::stringstream ss;
      ss << in.rdbuf();
      stations_json = config_detail::parse_text(ss.str(), file);
      stations_origin = file;
    }
    s->finish();
  }
  c.env.ground.tx_power_dbm = c.layout.tx_power_dbm;
  if (auto s = root.sub("haps")) {
    s->get("altitude_m", c.layout.haps_altitude_m);
    s->get("quota", c.layout.haps_quota);
    s->get("capacity_mbps", c.env.haps_capacity_mbps);
    s->get("total_bandwidth_hz", c.layout.haps_link.total_bandwidth_hz);
    s->get("max_uav_tx_power_w", c.layout.haps_link.max_uav_tx_power_w);
    s->get("noise_psd_w_per_hz", c.layout.haps_link.noise_psd_w_per_hz);
    s->get("carrier_hz", c.layout.haps_link.carrier_hz);
    s->get("antenna_gain_linear", c.layout.haps_link.antenna_gain_linear);
    s->get("rician_k", c.layout.haps_link.rician_k);
    s->finish();
  }
  if (stations_json) c.stations = config_detail::read_stations(*stations_json, stations_origin, c);
  if (auto s = root.sub("rewards")) {
    s->get("w1", c.env.weights.w1);
    s->get("w2", c.env.weights.w2);
    s->get("w3", c.env.weights.w3);
    s->get("w4", c.env.weights.w4);
    s->finish();
  }
  if (auto s = root.sub("meta_rewards")) {
    s->get("eta1", c.meta.weights.eta1);
    s->get("eta2", c.meta.weights.eta2);
    s->get("eta3", c.meta.weights.eta3);
    s->finish();
  }
  if (auto s = root.sub("handover_penalties")) {
    s->get("horizontal", c.env.penalties.horizontal);
    s->get("vertical", c.env.penalties.vertical);
    s->finish();
  }
  if (auto s = root.sub("observation")) {
    s->get("rows", c.env.observation_rows);
    s->get("target_rate_bps", c.env.target_rate_bps);
    s->get("num_bins", c.tabular.num_bins);
    s->finish();
  }
  c.llm.num_bins = c.tabular.num_bins;
  if (auto s = root.sub("meta")) {
    s->get("period", c.meta.period);
    std::string metric = c.env.meta_load_metric == MetaLoadMetric::kWeighted ? "weighted" : "instantaneous";
    s->get("load_metric", metric);
    if (metric == "weighted") {
      c.env.meta_load_metric = MetaLoadMetric::kWeighted;
    } else if (metric == "instantaneous") {
      c.env.meta_load_metric = MetaLoadMetric::kInstantaneous;
    } else {
      throw ConfigValidationError("meta.load_metric must be weighted or instantaneous");
    }
    std::string mu = c.meta.mu_mode == MetaMuMode::kSummedPenalty ? "summed_penalty" : "handover_count";
    s->get("mu_mode", mu);
    if (mu == "summed_penalty") {
      c.meta.mu_mode = MetaMuMode::kSummedPenalty;
    } else if (mu == "handover_count") {
      c.meta.mu_mode = MetaMuMode::kHandoverCount;
    } else {
      throw ConfigValidationError("meta.mu_mode must be summed_penalty or handover_count");
    }
    s->finish();
  }
  if (auto s = root.sub("policies")) {
    std::string edge(to_string(c.edge_policy)), meta(to_string(c.meta_policy));
    s->get("edge", edge);
    s->get("meta", meta);
    const auto ek = parse_edge_policy_kind(edge);
    if (!ek) throw ConfigValidationError("policies.edge: unknown policy '" + edge + "'");
    const auto mk = parse_meta_policy_kind(meta);
    if (!mk) throw ConfigValidationError("policies.meta: unknown policy '" + meta + "'");
    c.edge_policy = *ek;
    c.meta_policy = *mk;
    if (auto f = s->sub("fixed_action")) {
      std::string tran(to_string(c.fixed_action.transport)), tele(to_string(c.fixed_action.telecom));
      f->get("transport", tran);
      f->get("telecom", tele);
      const auto t = llm::parse_transport_action(tran);
      const auto m = llm::parse_telecom_action(tele);
      if (!t || !m) throw ConfigValidationError("policies.fixed_action: unknown action name");
      c.fixed_action = {*t, *m};
      f->finish();
    }
    if (auto t = s->sub("tabular")) {
      t->get("alpha", c.tabular.alpha);
      t->get("gamma", c.tabular.gamma);
      t->get("epsilon_start", c.tabular.epsilon_start);
      t->get("epsilon_end", c.tabular.epsilon_end);
      t->get("epsilon_decay_decisions", c.tabular.epsilon_decay_decisions);
      t->finish();
    }
    s->finish();
  }
  if (auto s = root.sub("llm")) {
    auto& e = c.llm.endpoint;
    s->get("base_url", e.base_url);
    s->get("model_name", e.model_name);
    s->get("timeout_ms", e.timeout_ms);
    s->get("max_retries", e.max_retries);
    s->get("temperature", e.temperature);
    s->get("backoff_ms", e.backoff_ms);
    int k = static_cast<int>(c.llm.experience_k);
    s->get("experience_k", k);
    if (k < 0) throw ConfigValidationError("llm.experience_k >= 0 violated");
    c.llm.experience_k = static_cast<std::size_t>(k);
    long cap = static_cast<long>(c.llm.store_capacity);
    s->get("store_capacity", cap);
    if (cap < 1) throw ConfigValidationError("llm.store_capacity >= 1 violated");
    c.llm.store_capacity = static_cast<std::size_t>(cap);
    s->get("good_threshold", c.llm.good_threshold);
    s->get("shared_edge_store", c.llm.shared_edge_store);
    if (s->has("mock_transcript")) {
      std::string p;
      s->get("mock_transcript", p);
      c.mock_transcript = config_detail::resolve_path(p, base_dir);
    }
    s->finish();
  }
  root.finish();
  c.validate();
  return c;
}

inline ScenarioConfig config_from_string(const std::string& text, const std::filesystem::path& base_dir = ".",
                                         const std::string& origin = "<string>") {
  return config_from_json(config_detail::parse_text(text, origin), base_dir);
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigValidationError("config file does not exist: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_string(ss.str(), std::filesystem::absolute(path).parent_path(), path);
}

/// Full serialisation with every default spelled out; config_from_json reads it back unchanged.
inline nlohmann::json to_json(const ScenarioConfig& c) {
  using nlohmann::json;
  const auto& m = c.env.mobility;
  const auto& a = c.layout.antenna;
  json j;
  j["num_uavs"] = c.fleet.num_uavs;
  j["episodes"] = c.episodes;
  j["seed"] = c.seed;
  j["episode_cap"] = c.env.episode_cap;
  j["log_steps"] = c.log_steps;
  j["highway"] = {{"length_m", c.layout.highway_length_m}, {"num_lanes", m.num_lanes},
                  {"lane_width_m", m.lane_width_m},       {"base_altitude_m", m.base_altitude_m},
                  {"lane_altitude_step_m", m.lane_altitude_step_m}, {"collision_length_m", m.collision_length_m},
                  {"initial_x_m", c.fleet.initial_x_m},   {"spacing_m", c.fleet.spacing_m},
                  {"jitter_m", c.fleet.jitter_m}};
  j["kinematics"] = {{"v_min_mps", m.v_min_mps}, {"v_max_mps", m.v_max_mps}, {"speed_step_mps", m.speed_step_mps},
                     {"dt_s", m.dt_s}};
  const auto& i = c.env.idm;
  j["idm"] = {{"desired_speed_mps", i.desired_speed_mps}, {"safe_time_headway_s", i.safe_time_headway_s},
              {"max_accel_mps2", i.max_accel_mps2},       {"comfortable_decel_mps2", i.comfortable_decel_mps2},
              {"min_gap_m", i.min_gap_m},                 {"accel_exponent", i.accel_exponent}};
  j["antenna"] = {{"peak_element_gain_db", a.peak_element_gain_db},
                  {"az_3db_deg", rad_to_deg(a.az_3db_rad)},
                  {"el_3db_deg", rad_to_deg(a.el_3db_rad)},
                  {"front_back_ratio_db", a.front_back_ratio_db},
                  {"sidelobe_attenuation_db", a.sidelobe_attenuation_db},
                  {"num_elements", a.num_elements},
                  {"downtilt_deg", rad_to_deg(a.downtilt_rad)},
                  {"pattern_mode", a.mode == PatternMode::kLiteral   ? "literal"
                                   : a.mode == PatternMode::kSquared ? "squared"
                                                                     : "default"}};
  j["path_loss"] = {{"carrier_hz", c.env.path_loss.carrier_hz},
                    {"excess_loss_los_db", c.env.path_loss.excess_loss_los_db},
                    {"excess_loss_nlos_db", c.env.path_loss.excess_loss_nlos_db}};
  const auto& g = c.env.ground;
  json t = {{"num_bs", c.layout.num_bs},         {"quota", c.layout.bs_quota},
            {"tx_power_dbm", c.layout.tx_power_dbm}, {"height_m", c.layout.bs_height_m},
            {"lateral_offset_m", c.layout.bs_lateral_offset_m}, {"noise_power_dbm", g.noise_power_dbm},
            {"rx_power_min_dbm", g.rx_power_min_dbm}, {"rx_power_max_dbm", g.rx_power_max_dbm},
            {"bandwidth_hz", g.bandwidth_hz},     {"cap_rx_power", c.env.cap_rx_power}};
  if (c.stations) {
    json arr = json::array();
    for (const auto& s : *c.stations) {
      arr.push_back({{"x", s.position.x}, {"y", s.position.y}, {"z", s.position.z}, {"tx_power_dbm", s.tx_power_dbm},
                     {"quota", s.quota}});
    }
    t["stations"] = arr;
  }
  j["terrestrial"] = t;
  const auto& h = c.layout.haps_link;
  j["haps"] = {{"altitude_m", c.layout.haps_altitude_m},   {"quota", c.layout.haps_quota},
               {"capacity_mbps", c.env.haps_capacity_mbps}, {"total_bandwidth_hz", h.total_bandwidth_hz},
               {"max_uav_tx_power_w", h.max_uav_tx_power_w}, {"noise_psd_w_per_hz", h.noise_psd_w_per_hz},
               {"carrier_hz", h.carrier_hz},                {"antenna_gain_linear", h.antenna_gain_linear},
               {"rician_k", h.rician_k}};
  const auto& w = c.env.weights;
  j["rewards"] = {{"w1", w.w1}, {"w2", w.w2}, {"w3", w.w3}, {"w4", w.w4}};
  j["meta_rewards"] = {{"eta1", c.meta.weights.eta1}, {"eta2", c.meta.weights.eta2}, {"eta3", c.meta.weights.eta3}};
  j["handover_penalties"] = {{"horizontal", c.env.penalties.horizontal}, {"vertical", c.env.penalties.vertical}};
  j["observation"] = {{"rows", c.env.observation_rows}, {"target_rate_bps", c.env.target_rate_bps},
                      {"num_bins", c.tabular.num_bins}};
  j["meta"] = {{"period", c.meta.period},
               {"load_metric", c.env.meta_load_metric == MetaLoadMetric::kWeighted ? "weighted" : "instantaneous"},
               {"mu_mode", c.meta.mu_mode == MetaMuMode::kSummedPenalty ? "summed_penalty" : "handover_count"}};
  j["policies"] = {{"edge", to_string(c.edge_policy)},
                   {"meta", to_string(c.meta_policy)},
                   {"fixed_action",
                    {{"transport", to_string(c.fixed_action.transport)}, {"telecom", to_string(c.fixed_action.telecom)}}},
                   {"tabular",
                    {{"alpha", c.tabular.alpha},
                     {"gamma", c.tabular.gamma},
                     {"epsilon_start", c.tabular.epsilon_start},
                     {"epsilon_end", c.tabular.epsilon_end},
                     {"epsilon_decay_decisions", c.tabular.epsilon_decay_decisions}}}};
  const auto& e = c.llm.endpoint;
  json l = {{"base_url", e.base_url},
            {"model_name", e.model_name},
            {"timeout_ms", e.timeout_ms},
            {"max_retries", e.max_retries},
            {"temperature", e.temperature},
            {"backoff_ms", e.backoff_ms},
            {"experience_k", c.llm.experience_k},
            {"store_capacity", c.llm.store_capacity},
            {"good_threshold", c.llm.good_threshold},
            {"shared_edge_store", c.llm.shared_edge_store}};
  if (c.mock_transcript) l["mock_transcript"] = *c.mock_transcript;
  j["llm"] = l;
  return j;
}

}  // namespace uavsim
