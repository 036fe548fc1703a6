#pragma once

// Bounded store of (state, action, reward) records and nearest-neighbour
// retrieval of good and bad precedents for prompt construction.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <mutex>
#include <ostream>
#include <queue>
#include <shared_mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace uavsim::llm {

enum class ExperienceLabel { kGood, kBad };

struct Experience {
  std::vector<double> state;
  std::string action;  // rendered in the reply grammar
  double reward = 0.0;
  ExperienceLabel label = ExperienceLabel::kBad;
  std::uint64_t seq = 0;  // insertion order, survives eviction
};

struct RetrievedExperiences {
  std::vector<Experience> good;
  std::vector<Experience> bad;
};

class ExperienceDimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return std::sqrt(sum);
}

namespace detail {

template <class Range>
RetrievedExperiences nearest(const Range& records, std::span<const double> query, std::size_t k) {
  RetrievedExperiences out;
  if (k == 0) return out;
  using Key = std::pair<double, std::uint64_t>;  // (distance, seq); smaller is better
  using Heap = std::priority_queue<std::pair<Key, const Experience*>>;
  Heap good, bad;
  for (const Experience& e : records) {
    if (e.state.size() != query.size()) {
      throw ExperienceDimensionError("experience retrieval: query has dimension " + std::to_string(query.size()) +
                                     ", store has " + std::to_string(e.state.size()));
    }
    Heap& h = e.label == ExperienceLabel::kGood ? good : bad;
    const Key key{euclidean_distance(e.state, query), e.seq};
    if (h.size() < k) {
      h.emplace(key, &e);
    } else if (key < h.top().first) {
      h.pop();
      h.emplace(key, &e);
    }
  }
  auto drain = [](Heap& h, std::vector<Experience>& dst) {
    dst.resize(h.size());
    for (auto i = h.size(); i-- > 0;) {
      dst[i] = *h.top().second;
      h.pop();
    }
  };
  drain(good, out.good);
  drain(bad, out.bad);
  return out;
}

}  // namespace detail

/// Top-k good and top-k bad records by ascending distance; equal distances keep insertion order.
inline RetrievedExperiences retrieve_experiences(std::span<const Experience> records, std::span<const double> query,
                                                 std::size_t k) {
  return detail::nearest(records, query, k);
}

/// Thread-safe, FIFO-bounded experience store.
class ExperienceStore {
 public:
  explicit ExperienceStore(std::size_t capacity = 10000, double good_threshold = 0.0)
      : capacity_(capacity), good_threshold_(good_threshold) {
    if (capacity_ == 0) throw std::invalid_argument("experience store capacity must be >= 1");
  }

  void append(std::vector<double> state, std::string action, double reward) {
    std::unique_lock lock(mu_);
    if (!records_.empty() && records_.front().state.size() != state.size()) {
      throw ExperienceDimensionError("experience store: dimension " + std::to_string(state.size()) +
                                     " does not match " + std::to_string(records_.front().state.size()));
    }
    Experience e;
    e.state = std::move(state);
    e.action = std::move(action);
    e.reward = reward;
    e.label = reward >= good_threshold_ ? ExperienceLabel::kGood : ExperienceLabel::kBad;
    e.seq = next_seq_++;
    records_.push_back(std::move(e));
    if (records_.size() > capacity_) records_.pop_front();
  }

  [[nodiscard]] RetrievedExperiences retrieve(std::span<const double> query, std::size_t k) const {
    std::shared_lock lock(mu_);
    return detail::nearest(records_, query, k);
  }

  [[nodiscard]] std::vector<Experience> snapshot() const {
    std::shared_lock lock(mu_);
    return {records_.begin(), records_.end()};
  }

  [[nodiscard]] std::size_t size() const {
    std::shared_lock lock(mu_);
    return records_.size();
  }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] double good_threshold() const { return good_threshold_; }

  /// One JSON object per line, oldest first.
  void save(std::ostream& out) const {
    std::shared_lock lock(mu_);
    for (const auto& e : records_) {
      out << nlohmann::json{{"seq", e.seq}, {"state", e.state}, {"action", e.action}, {"reward", e.reward}}.dump()
          << '\n';
    }
  }

  void load(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        append(j.at("state").get<std::vector<double>>(), j.at("action").get<std::string>(), j.at("reward").get<double>());
      } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("experience store line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

 private:
  std::size_t capacity_;
  double good_threshold_;
  mutable std::shared_mutex mu_;
  std::deque<Experience> records_;
  std::uint64_t next_seq_ = 0;
};

inline RetrievedExperiences retrieve_experiences(const ExperienceStore& store, std::span<const double> query,
                                                 std::size_t k) {
  return store.retrieve(query, k);
}

}  // namespace uavsim::llm
