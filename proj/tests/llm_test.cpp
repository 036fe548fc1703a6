#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "support/scenario.hpp"
#include "support/test_util.hpp"
#include "uavsim/llm/experience.hpp"
#include "uavsim/llm/http_transport.hpp"
#include "uavsim/llm/llm_policy.hpp"
#include "uavsim/llm/prompts.hpp"
#include "uavsim/llm/protocol.hpp"
#include "uavsim/llm/transport.hpp"

using namespace uavsim;
using namespace uavsim::llm;

namespace {

MetaUavEntry entry(int id, LinkKind link, double rate, int priority) {
  MetaUavEntry e;
  e.uav_id = id;
  e.link = link;
  e.rate_mbps = rate;
  e.priority = priority;
  return e;
}

MetaState worked_meta_state() {
  MetaState s;
  s.per_uav = {entry(1, LinkKind::kHaps, 28, 2), entry(2, LinkKind::kHaps, 26, 3), entry(3, LinkKind::kHaps, 24, 1),
               entry(4, LinkKind::kHaps, 22, 4), entry(5, LinkKind::kTbs, 18, 3)};
  s.haps_load_mbps = compute_haps_load(s.per_uav);
  return s;
}

ObservationRow obs_row(double x, double y, double v, double vy, int n_r = 0, int n_h = 0) {
  ObservationRow r;
  r.valid = true;
  r.x = x;
  r.y = y;
  r.v = v;
  r.lateral_speed = vy;
  r.n_r = n_r;
  r.n_h = n_h;
  return r;
}

DecisionContext sample_edge_context() {
  DecisionContext c;
  c.uav_id = 2;
  c.step = 7;
  c.obs.rows = {obs_row(237.5, 4, 10, 4, 2, 1), obs_row(250, 8, 12, 0), obs_row(205, 0, 9, 0)};
  c.telecom.gbs_cnt = 2;
  c.telecom.haps_cnt = 1;
  c.ego_speed_mps = 10;
  return c;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Compares against a checked-in expansion; UAVSIM_UPDATE_GOLDEN=1 rewrites it.
void expect_golden(const std::string& name, const PromptBundle& b) {
  const std::string text = "=== system ===\n" + b.system_text + "\n=== user ===\n" + b.user_text;
  const std::string path = std::string(UAVSIM_TEST_DIR) + "/golden/" + name;
  if (const char* upd = std::getenv("UAVSIM_UPDATE_GOLDEN"); upd && std::string(upd) == "1") {
    std::ofstream(path, std::ios::binary) << text;
  }
  const std::string expected = read_file(path);
  ASSERT_FALSE(expected.empty()) << "missing golden file " << path;
  EXPECT_EQ(text, expected);
}

RetrievedExperiences some_meta_experiences() {
  ExperienceStore store;
  store.append({98, 100, 4, 1}, "Offload{4}", 1.2);
  store.append({85, 100, 3, 1}, "Recall{5}", 0.95);
  store.append({112, 100, 5, 0}, "Idle", -1.5);
  return store.retrieve(meta_experience_vector(worked_meta_state()), 5);
}

// Independent retrieval: full sort of all records by (distance, insertion index).
RetrievedExperiences brute_force(const std::vector<Experience>& recs, const std::vector<double>& q, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> good, bad;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    double s = 0;
    for (std::size_t d = 0; d < q.size(); ++d) s += (recs[i].state[d] - q[d]) * (recs[i].state[d] - q[d]);
    (recs[i].label == ExperienceLabel::kGood ? good : bad).emplace_back(std::sqrt(s), i);
  }
  std::sort(good.begin(), good.end());
  std::sort(bad.begin(), bad.end());
  RetrievedExperiences out;
  for (std::size_t i = 0; i < std::min(k, good.size()); ++i) out.good.push_back(recs[good[i].second]);
  for (std::size_t i = 0; i < std::min(k, bad.size()); ++i) out.bad.push_back(recs[bad[i].second]);
  return out;
}

std::vector<std::uint64_t> seqs(const std::vector<Experience>& v) {
  std::vector<std::uint64_t> out;
  for (const auto& e : v) out.push_back(e.seq);
  return out;
}

LlmEndpointConfig fast_cfg(int retries = 2) {
  LlmEndpointConfig c;
  c.max_retries = retries;
  c.backoff_ms = 10;
  return c;
}

const Sleeper kNoSleep = [](std::chrono::milliseconds) {};

/// Every reply passes through; with probability `rate` (seeded) the reply is replaced by prose.
class GarblingTransport final : public LlmTransport {
 public:
  GarblingTransport(LlmTransport& inner, double rate, std::uint64_t seed) : inner_(inner), rate_(rate), rng_(seed) {}
  std::string complete(const PromptBundle& p, const LlmEndpointConfig& c) override {
    std::string reply = inner_.complete(p, c);
    if (std::uniform_real_distribution<double>(0, 1)(rng_) < rate_) {
      ++garbled;
      return "I would rather not say.";
    }
    return reply;
  }
  long garbled = 0;

 private:
  LlmTransport& inner_;
  double rate_;
  std::mt19937_64 rng_;
};

}  // namespace

// ---- protocol ----

TEST(Protocol, ReferenceRepliesParse) {
  const std::string meta =
      "Load sits at the limit, so relieve the weakest user.\n\n<meta_action>Offload{4}</meta_action>\n";
  EXPECT_EQ(parse_meta_reply(meta), MetaAction::offload({4}));
  const std::string edge =
      "Plenty of room ahead.\n<tran_action>FASTER</tran_action>\n\n<tele_action>t1</tele_action>";
  EXPECT_EQ(parse_edge_reply(edge), (JointAction{TransportAction::kFaster, TelecomAction::kT1}));
}

TEST(Protocol, NoTagsNamesBothMissingTags) {
  try {
    parse_edge_reply("just prose");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.tags(), (std::vector<std::string>{"tran_action", "tele_action"}));
  }
}

TEST(Protocol, EmptyAndUnknownBodiesAreErrors) {
  try {
    parse_edge_reply("<tran_action> </tran_action><tele_action>T4</tele_action>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.tags().size(), 2u);
  }
  try {
    parse_edge_reply("<tran_action>IDLE</tran_action><tele_action>T4</tele_action>");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.tags(), std::vector<std::string>{"tele_action"});
  }
  EXPECT_THROW(parse_meta_reply("<meta_action>Offload{}</meta_action>"), ParseError);
  EXPECT_THROW(parse_meta_reply("<meta_action>Evict{1}</meta_action>"), ParseError);
}

TEST(Protocol, CaseWhitespaceAndFirstOccurrence) {
  EXPECT_EQ(parse_edge_reply("<TRAN_ACTION>  lane_left \n</Tran_Action><tele_action>\tT3 </tele_action>"),
            (JointAction{TransportAction::kLaneLeft, TelecomAction::kT3}));
  EXPECT_EQ(parse_meta_reply("<meta_action>Idle</meta_action><meta_action>Offload{1}</meta_action>"),
            MetaAction::idle());
  EXPECT_EQ(parse_meta_reply("<meta_action> recall { 3 , 1,3 } </meta_action>"), MetaAction::recall({1, 3}));
  // An unterminated opener is skipped in favour of the next complete tag.
  EXPECT_EQ(parse_meta_reply("<meta_action>Off... <meta_action>Idle</meta_action>"), MetaAction::idle());
}

TEST(Protocol, AllJointActionsRoundTrip) {
  for (int i = 0; i < kNumJointActions; ++i) {
    const auto a = joint_action_from_index(i);
    EXPECT_EQ(parse_edge_reply("Reasoning...\n" + render_edge_reply(a) + "\nDone."), a);
  }
}

TEST(Protocol, RandomMetaActionsRoundTrip) {
  auto rng = testutil::seeded(71);
  for (int i = 0; i < 20; ++i) {
    MetaAction a;
    const int kind = static_cast<int>(rng() % 3);
    if (kind != 2) {
      std::vector<int> ids;
      const int n = 1 + static_cast<int>(rng() % 5);
      for (int k = 0; k < n; ++k) ids.push_back(static_cast<int>(rng() % 40));
      a = kind == 0 ? MetaAction::offload(ids) : MetaAction::recall(ids);
    }
    EXPECT_EQ(parse_meta_reply(render_meta_reply(a)), a) << to_string(a);
  }
}

// ---- experience store ----

TEST(Experience, TrivialCases) {
  ExperienceStore store;
  const std::vector<double> q{1, 2};
  const auto empty = store.retrieve(q, 5);
  EXPECT_TRUE(empty.good.empty());
  EXPECT_TRUE(empty.bad.empty());

  store.append({5, 5}, "a", 1);
  store.append({1, 2}, "b", 2);
  store.append({1, 2.5}, "c", -1);
  const auto r = store.retrieve(q, 5);
  ASSERT_EQ(r.good.size(), 2u);
  EXPECT_EQ(r.good[0].action, "b");
  EXPECT_EQ(r.bad.size(), 1u);
  EXPECT_EQ(store.retrieve(q, 0).good.size(), 0u);
}

TEST(Experience, LabelsFollowTheThreshold) {
  ExperienceStore store(10, 0.0);
  store.append({0}, "x", 0.0);
  store.append({0}, "y", -1e-12);
  const auto s = store.snapshot();
  EXPECT_EQ(s[0].label, ExperienceLabel::kGood);
  EXPECT_EQ(s[1].label, ExperienceLabel::kBad);
  ExperienceStore strict(10, 0.5);
  strict.append({0}, "z", 0.4);
  EXPECT_EQ(strict.snapshot()[0].label, ExperienceLabel::kBad);
}

TEST(Experience, DimensionMismatchSignals) {
  ExperienceStore store;
  store.append({1, 2, 3}, "a", 1);
  EXPECT_THROW(store.append({1, 2}, "b", 1), ExperienceDimensionError);
  const std::vector<double> q{1, 2};
  EXPECT_THROW((void)store.retrieve(q, 3), ExperienceDimensionError);
}

TEST(Experience, FifoEviction) {
  ExperienceStore store(3);
  for (int i = 0; i < 5; ++i) store.append({static_cast<double>(i)}, std::to_string(i), 1);
  const auto s = store.snapshot();
  ASSERT_EQ(s.size(), 3u);
  EXPECT_EQ(s.front().action, "2");
  EXPECT_EQ(s.back().seq, 4u);
}

TEST(Experience, SmallStoreMatchesExhaustiveSort) {
  auto rng = testutil::seeded(72);
  ExperienceStore store;
  for (int i = 0; i < 10; ++i) {
    store.append({testutil::uniform(rng, 0, 5), testutil::uniform(rng, 0, 5)}, "a", testutil::uniform(rng, -1, 1));
  }
  const std::vector<double> q{2, 2};
  const auto got = store.retrieve(q, 5);
  const auto want = brute_force(store.snapshot(), q, 5);
  EXPECT_EQ(seqs(got.good), seqs(want.good));
  EXPECT_EQ(seqs(got.bad), seqs(want.bad));
}

TEST(Experience, LargeStoreMatchesBruteForceIncludingTies) {
  auto rng = testutil::seeded(73);
  std::vector<Experience> recs;
  ExperienceStore store;
  for (int i = 0; i < 1000; ++i) {
    // Integer coordinates on a small grid produce many exact distance ties.
    std::vector<double> v{static_cast<double>(rng() % 6), static_cast<double>(rng() % 6), static_cast<double>(rng() % 6)};
    store.append(v, "a" + std::to_string(i), testutil::uniform(rng, -1, 1));
  }
  const auto snap = store.snapshot();
  for (int q = 0; q < 100; ++q) {
    const std::vector<double> query{testutil::uniform(rng, -1, 6), static_cast<double>(rng() % 6),
                                    static_cast<double>(rng() % 6)};
    const std::size_t k = 1 + rng() % 8;
    const auto got = retrieve_experiences(store, query, k);
    const auto want = brute_force(snap, query, k);
    ASSERT_EQ(seqs(got.good), seqs(want.good)) << "query " << q;
    ASSERT_EQ(seqs(got.bad), seqs(want.bad)) << "query " << q;
    const auto via_span = retrieve_experiences(std::span<const Experience>(snap), query, k);
    ASSERT_EQ(seqs(via_span.good), seqs(want.good));
  }
}

TEST(Experience, SaveLoadRoundTrip) {
  ExperienceStore a;
  a.append({1, 2}, "{FASTER, T1}", 1.05);
  a.append({3, 4}, "{LANE_LEFT, T3}", -1.2);
  std::stringstream buf;
  a.save(buf);
  ExperienceStore b;
  b.load(buf);
  const auto s = b.snapshot();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[1].action, "{LANE_LEFT, T3}");
  EXPECT_EQ(s[1].label, ExperienceLabel::kBad);
  EXPECT_EQ(s[0].state, (std::vector<double>{1, 2}));
}

TEST(Experience, ConcurrentAppendAndRead) {
  ExperienceStore store(500);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&store, t] {
      for (int i = 0; i < 400; ++i) {
        store.append({static_cast<double>(t), static_cast<double>(i)}, "a", (i % 2) ? 1.0 : -1.0);
        const std::vector<double> q{0, 0};
        (void)store.retrieve(q, 5);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(store.size(), 500u);
}

// ---- prompts ----

TEST(Prompts, MetaPromptCarriesLoadCapacityAndBlocks) {
  const auto b = build_meta_prompt(worked_meta_state(), {});
  EXPECT_NE(b.user_text.find("Total HAPS load: B_t = 28.00 + 26.00 + 24.00 + 22.00 = 100.00 Mbps"),
            std::string::npos);
  EXPECT_NE(b.user_text.find("HAPS capacity: 100 Mbps"), std::string::npos);
  EXPECT_NE(b.user_text.find("No past experiences are available yet."), std::string::npos);
  for (const char* block :
       {"Task Description", "Task Goal", "Environment Features", "Observations", "Experience Replay", "Rules"}) {
    EXPECT_NE(b.user_text.find(block), std::string::npos) << block;
  }
  EXPECT_EQ(b.expected_tags, std::vector<std::string>{"meta_action"});
  EXPECT_EQ(b.metadata.role, "meta");
}

TEST(Prompts, EdgePromptCountersAndAbsentRows) {
  auto c = sample_edge_context();
  const auto b = build_edge_prompt(c, {});
  EXPECT_NE(b.user_text.find("[gbs_cnt=2, haps_cnt=1]"), std::string::npos);
  EXPECT_EQ(b.expected_tags, (std::vector<std::string>{"tran_action", "tele_action"}));
  EXPECT_EQ(b.metadata.uav_id, 2);

  c.obs.rows = {obs_row(10, 0, 5, 0), ObservationRow{}, ObservationRow{}};
  const auto sparse = build_edge_prompt(c, {});
  EXPECT_NE(sparse.user_text.find("row 2: [-1, -1, -1, -1] absent"), std::string::npos);
  EXPECT_NE(sparse.user_text.find("row 3: [-1, -1, -1, -1] absent"), std::string::npos);
  EXPECT_EQ(sparse.user_text.find("row 1: [0, 0, 2, 0] absent"), std::string::npos);
}

TEST(Prompts, RenderingIsPure) {
  const auto ex = some_meta_experiences();
  EXPECT_EQ(build_meta_prompt(worked_meta_state(), ex, 3).user_text,
            build_meta_prompt(worked_meta_state(), ex, 3).user_text);
  EXPECT_EQ(request_hash(build_edge_prompt(sample_edge_context(), {})),
            request_hash(build_edge_prompt(sample_edge_context(), {})));
}

TEST(Prompts, MetaGolden) { expect_golden("meta_prompt.txt", build_meta_prompt(worked_meta_state(), some_meta_experiences())); }

TEST(Prompts, EdgeGolden) {
  ExperienceStore store;
  const auto c = sample_edge_context();
  const auto v = edge_experience_vector(c.obs, 8);
  store.append(v, joint_action_label({TransportAction::kFaster, TelecomAction::kT1}), 1.05);
  auto w = v;
  w[0] += 1;
  store.append(w, joint_action_label({TransportAction::kIdle, TelecomAction::kT1}), 0.92);
  store.append(std::vector<double>(v.size(), 5.0), joint_action_label({TransportAction::kLaneLeft, TelecomAction::kT3}),
               -1.2);
  expect_golden("edge_prompt.txt", build_edge_prompt(c, store.retrieve(v, 5)));
}

// ---- transport ----

TEST(Transport, RequestHashIsStableHex) {
  PromptBundle p;
  p.system_text = "a";
  p.user_text = "b";
  const auto h = request_hash(p);
  EXPECT_EQ(h.size(), 16u);
  EXPECT_EQ(h, request_hash(p));
  p.user_text = "c";
  EXPECT_NE(h, request_hash(p));
  PromptBundle empty;
  // FNV-1a 64 of the single byte 0x1f.
  std::uint64_t x = 0xcbf29ce484222325ULL;
  x ^= 0x1f;
  x *= 0x100000001b3ULL;
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << x;
  EXPECT_EQ(request_hash(empty), hex.str());
}

TEST(Transport, ScriptedReplyVerbatim) {
  ScriptedTransport t;
  t.add("*", "  <meta_action>Idle</meta_action> ");
  EXPECT_EQ(query_llm(build_meta_prompt(worked_meta_state(), {}), fast_cfg(), t, kNoSleep),
            "  <meta_action>Idle</meta_action> ");
}

TEST(Transport, TranscriptLookupOrder) {
  const auto meta = build_meta_prompt(worked_meta_state(), {});
  const auto edge = build_edge_prompt(sample_edge_context(), {});
  std::stringstream jsonl;
  jsonl << nlohmann::json{{"request_hash", request_hash(meta)}, {"reply", "exact"}}.dump() << "\n\n"
        << nlohmann::json{{"request_hash", "*"}, {"role", "edge"}, {"reply", "edge-any"}}.dump() << "\n"
        << nlohmann::json{{"request_hash", "*"}, {"reply", "any"}}.dump() << "\n";
  auto t = ScriptedTransport::from_jsonl(jsonl);
  EXPECT_EQ(t.complete(meta, {}), "exact");
  EXPECT_EQ(t.complete(edge, {}), "edge-any");
  auto other = meta;
  other.user_text += "x";
  EXPECT_EQ(t.complete(other, {}), "any");

  ScriptedTransport seq;
  seq.add("*", "one");
  seq.add("*", "two");
  EXPECT_EQ(seq.complete(meta, {}), "one");
  EXPECT_EQ(seq.complete(meta, {}), "two");
  EXPECT_EQ(seq.complete(meta, {}), "two");

  ScriptedTransport none;
  EXPECT_THROW(none.complete(meta, {}), TransportError);
  std::stringstream bad("{\"reply\": 1}\n");
  EXPECT_THROW(ScriptedTransport::from_jsonl(bad), std::runtime_error);
}

TEST(Transport, RetriesTimeoutsThenSucceeds) {
  ScriptedTransport t;
  t.add("*", "ok");
  t.fail_next(2, TransportErrorKind::kTimeout);
  std::vector<long> delays;
  const Sleeper rec = [&delays](std::chrono::milliseconds d) { delays.push_back(d.count()); };
  EXPECT_EQ(query_llm(build_meta_prompt(worked_meta_state(), {}), fast_cfg(2), t, rec), "ok");
  EXPECT_EQ(t.calls(), 3);
  EXPECT_EQ(delays, (std::vector<long>{10, 20}));
}

TEST(Transport, ExhaustedRetriesAndClientErrors) {
  const auto p = build_meta_prompt(worked_meta_state(), {});
  ScriptedTransport t;
  t.add("*", "ok");
  t.fail_next(3, TransportErrorKind::kServer);
  try {
    query_llm(p, fast_cfg(2), t, kNoSleep);
    FAIL();
  } catch (const EndpointUnavailable& e) {
    EXPECT_EQ(e.attempts(), 3);
  }
  ScriptedTransport c;
  c.add("*", "ok");
  c.fail_next(1, TransportErrorKind::kClient);
  EXPECT_THROW(query_llm(p, fast_cfg(5), c, kNoSleep), EndpointUnavailable);
  EXPECT_EQ(c.calls(), 1);

  LlmEndpointConfig bad;
  bad.timeout_ms = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = {};
  bad.max_retries = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Transport, RecordingProducesAReplayableTranscript) {
  ScriptedTransport inner;
  inner.add("*", "<meta_action>Idle</meta_action>");
  std::stringstream log;
  RecordingTransport rec(inner, log);
  const auto p = build_meta_prompt(worked_meta_state(), {});
  rec.complete(p, {});
  auto replay = ScriptedTransport::from_jsonl(log);
  EXPECT_EQ(replay.complete(p, {}), "<meta_action>Idle</meta_action>");
}

TEST(HttpTransport, UrlHandling) {
  EXPECT_EQ(chat_completions_path(parse_base_url("http://h:1")), "/v1/chat/completions");
  EXPECT_EQ(chat_completions_path(parse_base_url("http://h:1/v1/")), "/v1/chat/completions");
  EXPECT_EQ(chat_completions_path(parse_base_url("http://h:1/proxy")), "/proxy/v1/chat/completions");
  EXPECT_THROW(parse_base_url("https://h"), std::invalid_argument);
  EXPECT_THROW(parse_base_url("h:1"), std::invalid_argument);
  EXPECT_THROW(chat_reply_content("{\"choices\": []}"), TransportError);
}

TEST(HttpTransport, LocalServerExchange) {
  httplib::Server srv;
  int hits = 0;
  nlohmann::json last;
  srv.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (++hits == 1) {
      res.status = 503;
      return;
    }
    last = nlohmann::json::parse(req.body);
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"<meta_action>Idle</meta_action>"}}]})",
                    "application/json");
  });
  const int port = srv.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread th([&] { srv.listen_after_bind(); });
  srv.wait_until_ready();

  LlmEndpointConfig cfg = fast_cfg(2);
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
  cfg.timeout_ms = 5000;
  HttpTransport http(cfg);
  const auto p = build_meta_prompt(worked_meta_state(), {});
  EXPECT_EQ(query_llm(p, cfg, http, kNoSleep), "<meta_action>Idle</meta_action>");
  EXPECT_EQ(hits, 2);
  EXPECT_EQ(last["messages"][0]["role"], "system");
  EXPECT_EQ(last["messages"][1]["content"], p.user_text);
  EXPECT_EQ(last["model"], cfg.model_name);

  srv.stop();
  th.join();
  // Nothing listens any more.
  cfg.max_retries = 0;
  EXPECT_THROW(query_llm(p, cfg, http, kNoSleep), EndpointUnavailable);
}

TEST(HttpTransport, LiveEndpointSmoke) {
  const char* url = std::getenv("UAVSIM_LIVE_LLM_URL");
  if (url == nullptr) GTEST_SKIP() << "set UAVSIM_LIVE_LLM_URL to run";
  LlmEndpointConfig cfg;
  cfg.base_url = url;
  if (const char* m = std::getenv("UAVSIM_LIVE_LLM_MODEL")) cfg.model_name = m;
  HttpTransport http(cfg);
  EXPECT_FALSE(query_llm(build_meta_prompt(worked_meta_state(), {}), cfg, http).empty());
}

// ---- LLM policies ----

TEST(LlmPolicy, ValidReplyIsUsedWithoutFallback) {
  ScriptedTransport t;
  t.add("*", "<tran_action>FASTER</tran_action><tele_action>T2</tele_action>", "edge");
  LlmPolicyConfig cfg;
  cfg.endpoint = fast_cfg();
  LlmEdgePolicy p(cfg, t, nullptr, kNoSleep);
  EXPECT_EQ(p.decide(sample_edge_context()), (JointAction{TransportAction::kFaster, TelecomAction::kT2}));
  EXPECT_EQ(p.stats().fallbacks.load(), 0);
}

TEST(LlmPolicy, ParseFailureFallsBackToSafeHeuristic) {
  ScriptedTransport t;
  t.add("*", "no tags here");
  LlmPolicyConfig cfg;
  cfg.endpoint = fast_cfg();
  LlmEdgePolicy p(cfg, t, nullptr, kNoSleep);
  auto c = sample_edge_context();
  c.leader = LeaderInfo{1.0, 3.0};
  EXPECT_EQ(p.decide(c), (JointAction{TransportAction::kSlower, TelecomAction::kT1}));
  EXPECT_EQ(p.stats().parse_failures.load(), 1);
}

TEST(LlmPolicy, EndpointFailureFallsBack) {
  ScriptedTransport t;
  t.fail_next(100, TransportErrorKind::kConnection);
  LlmPolicyConfig cfg;
  cfg.endpoint = fast_cfg(1);
  LlmEdgePolicy p(cfg, t, nullptr, kNoSleep);
  EXPECT_EQ(p.decide(sample_edge_context()).telecom, TelecomAction::kT1);
  EXPECT_EQ(p.stats().endpoint_failures.load(), 1);
  EXPECT_EQ(t.calls(), 2);
}

TEST(LlmPolicy, MetaInvalidActionFallsBackToRule) {
  ScriptedTransport t;
  t.add("*", "<meta_action>Offload{5}</meta_action>");  // UAV 5 is not on the HAPS
  LlmPolicyConfig cfg;
  cfg.endpoint = fast_cfg();
  LlmMetaPolicy p(cfg, t, nullptr, kNoSleep);
  auto s = worked_meta_state();
  s.per_uav.push_back(entry(6, LinkKind::kHaps, 12, 5));
  s.haps_load_mbps = compute_haps_load(s.per_uav);
  EXPECT_EQ(p.decide(s), MetaAction::offload({6}));
  EXPECT_EQ(p.stats().invalid_actions.load(), 1);

  ScriptedTransport ok;
  ok.add("*", "<meta_action>Offload{4}</meta_action>");
  LlmMetaPolicy q(cfg, ok, nullptr, kNoSleep);
  EXPECT_EQ(q.decide(worked_meta_state()), MetaAction::offload({4}));
  EXPECT_EQ(q.stats().fallbacks.load(), 0);
}

TEST(LlmPolicy, OutcomesFeedPerUavOrSharedStores) {
  ScriptedTransport t;
  t.add("*", "<tran_action>IDLE</tran_action><tele_action>T1</tele_action>");
  LlmPolicyConfig cfg;
  cfg.endpoint = fast_cfg();
  LlmEdgePolicy per(cfg, t, nullptr, kNoSleep);
  auto c = sample_edge_context();
  per.record_outcome(c, {}, 1.0, c);
  c.uav_id = 3;
  per.record_outcome(c, {}, -1.0, c);
  EXPECT_EQ(per.store_for(2).size(), 1u);
  EXPECT_EQ(per.store_for(3).size(), 1u);

  cfg.shared_edge_store = true;
  LlmEdgePolicy shared(cfg, t, nullptr, kNoSleep);
  shared.record_outcome(c, {}, 1.0, c);
  c.uav_id = 4;
  shared.record_outcome(c, {}, 1.0, c);
  EXPECT_EQ(shared.store_for(0).size(), 2u);

  // Stored experiences show up in the next prompt.
  std::stringstream log;
  RecordingTransport rec(t, log);
  LlmEdgePolicy seen(cfg, rec, nullptr, kNoSleep);
  seen.record_outcome(c, {TransportAction::kFaster, TelecomAction::kT2}, 0.5, c);
  seen.decide(c);
  EXPECT_NE(log.str().find("IDLE"), std::string::npos);
}

TEST(LlmPolicy, FaultInjectedEpisodeCompletesWithMatchingFallbackCount) {
  auto env = testutil::make_env(5);
  ScriptedTransport base;
  base.add("*", "<tran_action>IDLE</tran_action><tele_action>T1</tele_action>");
  GarblingTransport garbled(base, 0.10, 74);
  LlmPolicyConfig cfg;
  cfg.endpoint = fast_cfg();
  LlmEdgePolicy p(cfg, garbled, nullptr, kNoSleep);
  int steps = 0;
  while (!env.all_done()) {
    std::vector<std::pair<int, JointAction>> acts;
    std::vector<DecisionContext> ctxs;
    for (const auto& u : env.uavs()) {
      if (env.done(u.uav_id)) continue;
      ctxs.push_back(make_decision_context(env, u.uav_id, 0));
      acts.emplace_back(u.uav_id, p.decide(ctxs.back()));
    }
    const auto out = env.step(acts);
    for (std::size_t i = 0; i < acts.size(); ++i) {
      p.record_outcome(ctxs[i], acts[i].second, out.per_uav[i].transport_reward + out.per_uav[i].telecom_reward,
                       make_decision_context(env, acts[i].first, 0));
    }
    ++steps;
  }
  EXPECT_EQ(steps, env.config().episode_cap);
  const long decisions = p.stats().decisions.load();
  EXPECT_EQ(decisions, 5L * steps);
  EXPECT_EQ(p.stats().fallbacks.load(), garbled.garbled);
  // 150 Bernoulli(0.1) draws: mean 15, sd about 3.7.
  EXPECT_GE(garbled.garbled, 4);
  EXPECT_LE(garbled.garbled, 27);
}
