#pragma once

// Edge decision interface, the observation discretizer, fixed baselines and an
// epsilon-greedy tabular Q-learner over the 15 joint (transport, telecom) arms.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavsim/edge_env.hpp"

namespace uavsim {

struct DecisionContext {
  int uav_id = 0;
  int step = 0;
  ObservationMatrix obs;
  TelecomSummary telecom;
  std::uint64_t rng_seed_slice = 0;
  std::optional<LeaderInfo> leader;
  double ego_speed_mps = 0.0;
  IdmParams idm;
  bool terminal = false;
};

/// Snapshot of what UAV `id` may look at before deciding.
inline DecisionContext make_decision_context(const EdgeEnv& env, int id, std::uint64_t seed_slice) {
  DecisionContext c;
  c.uav_id = id;
  c.step = env.step_index();
  c.obs = env.observe(id);
  c.telecom = env.telecom_summary(id);
  c.rng_seed_slice = seed_slice;
  c.leader = env.done(id) ? std::nullopt : env.leader(id);
  c.ego_speed_mps = env.uav(id).speed_mps;
  c.idm = env.config().idm;
  c.terminal = env.done(id);
  return c;
}

/// Normalization bounds for (x, y, vx, vy).
inline constexpr std::array<double, 4> kDiscretizationBounds{100.0, 100.0, 20.0, 20.0};
inline constexpr int kPaddingBin = -1;

struct DiscretizedState {
  std::vector<int> bins;  // 4 per row, then the ego's (n_R, n_H) raw
  auto operator<=>(const DiscretizedState&) const = default;
};

inline int quantize(double value, double bound, int num_bins) {
  const double clamped = std::clamp(value, 0.0, bound);
  const int bin = static_cast<int>(std::floor(clamped / bound * num_bins));
  return std::min(bin, num_bins - 1);
}

/// Ego x is taken modulo the first bound; neighbour x is |dx| to the ego; y is the lateral
/// offset in metres; vy is the lateral speed magnitude.
inline DiscretizedState discretize(const ObservationMatrix& obs, int num_bins) {
  if (num_bins < 2) throw std::invalid_argument("discretize: num_bins must be >= 2");
  DiscretizedState d;
  d.bins.reserve(obs.rows.size() * 4 + 2);
  const ObservationRow* ego = obs.rows.empty() || !obs.rows.front().valid ? nullptr : &obs.rows.front();
  for (std::size_t i = 0; i < obs.rows.size(); ++i) {
    const auto& r = obs.rows[i];
    if (!r.valid) {
      d.bins.insert(d.bins.end(), 4, kPaddingBin);
      continue;
    }
    const double x = i == 0 || ego == nullptr ? std::fmod(std::abs(r.x), kDiscretizationBounds[0])
                                              : std::abs(r.x - ego->x);
    d.bins.push_back(quantize(x, kDiscretizationBounds[0], num_bins));
    d.bins.push_back(quantize(r.y, kDiscretizationBounds[1], num_bins));
    d.bins.push_back(quantize(r.v, kDiscretizationBounds[2], num_bins));
    d.bins.push_back(quantize(std::abs(r.lateral_speed), kDiscretizationBounds[3], num_bins));
  }
  d.bins.push_back(ego ? ego->n_r : 0);
  d.bins.push_back(ego ? ego->n_h : 0);
  return d;
}

inline std::vector<double> to_vector(const DiscretizedState& d) { return {d.bins.begin(), d.bins.end()}; }

class EdgePolicy {
 public:
  virtual ~EdgePolicy() = default;
  virtual JointAction decide(const DecisionContext& ctx) = 0;
  virtual void record_outcome(const DecisionContext&, JointAction, double, const DecisionContext&) {}
  [[nodiscard]] virtual std::string name() const = 0;
};

/// Uniform over the 15 joint actions, seeded from the context so replays agree.
class RandomPolicy final : public EdgePolicy {
 public:
  JointAction decide(const DecisionContext& ctx) override {
    std::mt19937_64 rng(ctx.rng_seed_slice);
    return joint_action_from_index(std::uniform_int_distribution<int>(0, kNumJointActions - 1)(rng));
  }
  [[nodiscard]] std::string name() const override { return "random"; }
};

/// Brakes when the leader is closer than twice the IDM desired gap, otherwise follows IDM; always T1.
class SafeHeuristicPolicy final : public EdgePolicy {
 public:
  JointAction decide(const DecisionContext& ctx) override {
    if (ctx.leader && ctx.leader->gap_m < 2.0 * idm_desired_gap(ctx.ego_speed_mps, ctx.leader->delta_v_mps, ctx.idm)) {
      return {TransportAction::kSlower, TelecomAction::kT1};
    }
    return {TransportAction::kIdle, TelecomAction::kT1};
  }
  [[nodiscard]] std::string name() const override { return "safe_heuristic"; }
};

class FixedPolicy final : public EdgePolicy {
 public:
  explicit FixedPolicy(JointAction a, std::string name = "fixed") : action_(a), name_(std::move(name)) {}
  JointAction decide(const DecisionContext&) override { return action_; }
  [[nodiscard]] std::string name() const override { return name_; }

 private:
  JointAction action_;
  std::string name_;
};

/// IDM following with the raw-rate station choice.
inline std::unique_ptr<EdgePolicy> make_greedy_telecom_policy() {
  return std::make_unique<FixedPolicy>(JointAction{TransportAction::kIdle, TelecomAction::kT3}, "greedy_telecom");
}

struct TabularQParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  long epsilon_decay_decisions = 10000;  // linear anneal length
  int num_bins = 8;

  void validate() const {
    if (!(alpha > 0 && alpha <= 1)) throw std::invalid_argument("tabular: alpha must be in (0,1]");
    if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("tabular: gamma must be in [0,1)");
    if (!(epsilon_start >= 0 && epsilon_start <= 1 && epsilon_end >= 0 && epsilon_end <= 1)) {
      throw std::invalid_argument("tabular: epsilon values must be in [0,1]");
    }
    if (epsilon_decay_decisions < 0) throw std::invalid_argument("tabular: epsilon decay must be >= 0");
    if (num_bins < 2) throw std::invalid_argument("tabular: num_bins must be >= 2");
  }
};

class TabularQPolicy final : public EdgePolicy {
 public:
  using Row = std::array<double, kNumJointActions>;

  explicit TabularQPolicy(TabularQParams p = {}, std::uint64_t seed = 0) : p_(p), rng_(seed) { p_.validate(); }

  [[nodiscard]] double epsilon() const {
    if (frozen_epsilon_) return *frozen_epsilon_;
    if (p_.epsilon_decay_decisions == 0) return p_.epsilon_end;
    if (decisions_ >= p_.epsilon_decay_decisions) return p_.epsilon_end;
    const double f = static_cast<double>(decisions_) / static_cast<double>(p_.epsilon_decay_decisions);
    return p_.epsilon_start + (p_.epsilon_end - p_.epsilon_start) * f;
  }
  void set_epsilon(std::optional<double> eps) { frozen_epsilon_ = eps; }

  JointAction decide(const DecisionContext& ctx) override { return decide(discretize(ctx.obs, p_.num_bins)); }

  JointAction decide(const DiscretizedState& s) {
    const double eps = epsilon();
    ++decisions_;
    if (eps > 0.0 && std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < eps) {
      return joint_action_from_index(std::uniform_int_distribution<int>(0, kNumJointActions - 1)(rng_));
    }
    return joint_action_from_index(greedy_index(s));
  }

  void record_outcome(const DecisionContext& ctx, JointAction a, double reward, const DecisionContext& next) override {
    const auto next_state = discretize(next.obs, p_.num_bins);
    update(discretize(ctx.obs, p_.num_bins), a, reward, next.terminal ? nullptr : &next_state);
  }

  /// One-step Q-learning; pass nullptr as `next` for a terminal transition.
  void update(const DiscretizedState& s, JointAction a, double reward, const DiscretizedState* next) {
    double bootstrap = 0.0;
    if (next != nullptr) {
      const Row& q_next = row(*next);
      bootstrap = *std::max_element(q_next.begin(), q_next.end());
    }
    double& q = table_[s][static_cast<std::size_t>(joint_action_index(a))];
    q += p_.alpha * (reward + p_.gamma * bootstrap - q);
  }

  [[nodiscard]] double q(const DiscretizedState& s, JointAction a) const {
    return row(s)[static_cast<std::size_t>(joint_action_index(a))];
  }
  void set_q(const DiscretizedState& s, JointAction a, double value) {
    table_[s][static_cast<std::size_t>(joint_action_index(a))] = value;
  }
  [[nodiscard]] std::size_t table_size() const { return table_.size(); }
  [[nodiscard]] const TabularQParams& params() const { return p_; }
  [[nodiscard]] std::string name() const override { return "tabular_q"; }

  /// One JSON record per line: a header, then {"state": [...], "q": [...]} in state order.
  void save(std::ostream& out) const {
    out << nlohmann::json{{"format", "uavsim-qtable"}, {"version", 1}, {"num_bins", p_.num_bins},
                          {"decisions", decisions_}}
               .dump()
        << '\n';
    for (const auto& [s, r] : table_) out << nlohmann::json{{"state", s.bins}, {"q", r}}.dump() << '\n';
  }

  void load(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("q-table: empty input");
    const auto header = nlohmann::json::parse(line);
    if (header.value("format", "") != "uavsim-qtable" || header.value("version", 0) != 1) {
      throw std::runtime_error("q-table: unrecognised header");
    }
    if (header.at("num_bins").get<int>() != p_.num_bins) throw std::runtime_error("q-table: num_bins mismatch");
    std::map<DiscretizedState, Row> table;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto rec = nlohmann::json::parse(line);
        table[DiscretizedState{rec.at("state").get<std::vector<int>>()}] = rec.at("q").get<Row>();
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("q-table line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    table_ = std::move(table);
    decisions_ = header.at("decisions").get<long>();
  }

 private:
  [[nodiscard]] const Row& row(const DiscretizedState& s) const {
    static const Row kZero{};
    const auto it = table_.find(s);
    return it == table_.end() ? kZero : it->second;
  }

  // Ties go to the lowest joint index.
  [[nodiscard]] int greedy_index(const DiscretizedState& s) const {
    const Row& r = row(s);
    return static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
  }

  TabularQParams p_;
  std::mt19937_64 rng_;
  std::map<DiscretizedState, Row> table_;
  long decisions_ = 0;
  std::optional<double> frozen_epsilon_;
};

}  // namespace uavsim
