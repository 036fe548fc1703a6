#pragma once

// LLM-backed edge and meta policies: build a prompt from retrieved experiences,
// query the endpoint, parse the tagged reply, and fall back on any failure.

#include <spdlog/spdlog.h>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "uavsim/llm/experience.hpp"
#include "uavsim/llm/prompts.hpp"
#include "uavsim/llm/protocol.hpp"
#include "uavsim/llm/transport.hpp"
#include "uavsim/meta_controller.hpp"
#include "uavsim/policies.hpp"

namespace uavsim::llm {

struct LlmPolicyConfig {
  LlmEndpointConfig endpoint;
  std::size_t experience_k = kDefaultExperienceK;
  std::size_t store_capacity = 10000;
  double good_threshold = 0.0;
  bool shared_edge_store = false;  // one store for every UAV instead of one each
  int num_bins = 8;
};

enum class FallbackReason { kEndpoint, kParse, kInvalidAction };

struct LlmPolicyStats {
  std::atomic<long> decisions{0};
  std::atomic<long> fallbacks{0};
  std::atomic<long> endpoint_failures{0};
  std::atomic<long> parse_failures{0};
  std::atomic<long> invalid_actions{0};

  void count(FallbackReason r) {
    ++fallbacks;
    switch (r) {
      case FallbackReason::kEndpoint: ++endpoint_failures; break;
      case FallbackReason::kParse: ++parse_failures; break;
      case FallbackReason::kInvalidAction: ++invalid_actions; break;
    }
  }
};

class LlmEdgePolicy final : public EdgePolicy {
 public:
  LlmEdgePolicy(LlmPolicyConfig cfg, LlmTransport& transport, std::unique_ptr<EdgePolicy> fallback = nullptr,
                Sleeper sleep = real_sleep)
      : cfg_(std::move(cfg)),
        transport_(transport),
        fallback_(fallback ? std::move(fallback) : std::make_unique<SafeHeuristicPolicy>()),
        sleep_(std::move(sleep)) {
    cfg_.endpoint.validate();
  }

  /// build -> query -> parse; any failure yields the fallback's decision.
  JointAction decide(const DecisionContext& ctx) override {
    ++stats_.decisions;
    try {
      const auto query = edge_experience_vector(ctx.obs, cfg_.num_bins);
      const auto prompt = build_edge_prompt(ctx, store_for(ctx.uav_id).retrieve(query, cfg_.experience_k), cfg_.num_bins);
      return parse_edge_reply(query_llm(prompt, cfg_.endpoint, transport_, sleep_));
    } catch (const EndpointUnavailable& e) {
      return fall_back(ctx, FallbackReason::kEndpoint, e.what());
    } catch (const ParseError& e) {
      return fall_back(ctx, FallbackReason::kParse, e.what());
    } catch (const std::exception& e) {
      return fall_back(ctx, FallbackReason::kInvalidAction, e.what());
    }
  }

  void record_outcome(const DecisionContext& ctx, JointAction a, double reward, const DecisionContext&) override {
    store_for(ctx.uav_id).append(edge_experience_vector(ctx.obs, cfg_.num_bins), joint_action_label(a), reward);
  }

  [[nodiscard]] std::string name() const override { return "llm"; }
  [[nodiscard]] const LlmPolicyStats& stats() const { return stats_; }

  ExperienceStore& store_for(int uav_id) {
    std::lock_guard lock(stores_mu_);
    auto& slot = stores_[cfg_.shared_edge_store ? -1 : uav_id];
    if (!slot) slot = std::make_unique<ExperienceStore>(cfg_.store_capacity, cfg_.good_threshold);
    return *slot;
  }

 private:
  JointAction fall_back(const DecisionContext& ctx, FallbackReason r, const char* why) {
    stats_.count(r);
    spdlog::debug("edge llm fallback for UAV {} at step {}: {}", ctx.uav_id, ctx.step, why);
    return fallback_->decide(ctx);
  }

  LlmPolicyConfig cfg_;
  LlmTransport& transport_;
  std::unique_ptr<EdgePolicy> fallback_;
  Sleeper sleep_;
  LlmPolicyStats stats_;
  std::mutex stores_mu_;
  std::map<int, std::unique_ptr<ExperienceStore>> stores_;
};

class LlmMetaPolicy final : public MetaPolicy {
 public:
  LlmMetaPolicy(LlmPolicyConfig cfg, LlmTransport& transport, std::unique_ptr<MetaPolicy> fallback = nullptr,
                Sleeper sleep = real_sleep)
      : cfg_(std::move(cfg)),
        transport_(transport),
        fallback_(fallback ? std::move(fallback) : std::make_unique<RuleBasedMetaPolicy>()),
        sleep_(std::move(sleep)),
        store_(cfg_.store_capacity, cfg_.good_threshold) {
    cfg_.endpoint.validate();
  }

  MetaAction decide(const MetaState& s) override {
    const int step = static_cast<int>(stats_.decisions++);
    try {
      const auto prompt = build_meta_prompt(s, store_.retrieve(meta_experience_vector(s), cfg_.experience_k), step);
      MetaAction a = parse_meta_reply(query_llm(prompt, cfg_.endpoint, transport_, sleep_));
      try {
        validate_meta_action(s, a);
      } catch (const MetaActionError& e) {
        return fall_back(s, FallbackReason::kInvalidAction, e.what());
      }
      return a;
    } catch (const EndpointUnavailable& e) {
      return fall_back(s, FallbackReason::kEndpoint, e.what());
    } catch (const ParseError& e) {
      return fall_back(s, FallbackReason::kParse, e.what());
    } catch (const std::exception& e) {
      return fall_back(s, FallbackReason::kInvalidAction, e.what());
    }
  }

  void record(const MetaTransition& t) override {
    store_.append(meta_experience_vector(t.state), to_string(t.action), t.reward);
  }

  [[nodiscard]] std::string name() const override { return "llm"; }
  [[nodiscard]] const LlmPolicyStats& stats() const { return stats_; }
  [[nodiscard]] ExperienceStore& store() { return store_; }

 private:
  MetaAction fall_back(const MetaState& s, FallbackReason r, const char* why) {
    stats_.count(r);
    spdlog::debug("meta llm fallback: {}", why);
    return fallback_->decide(s);
  }

  LlmPolicyConfig cfg_;
  LlmTransport& transport_;
  std::unique_ptr<MetaPolicy> fallback_;
  Sleeper sleep_;
  LlmPolicyStats stats_;
  ExperienceStore store_;
};

}  // namespace uavsim::llm
