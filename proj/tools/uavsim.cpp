// uavsim command-line front end: run, sweep, validate, replay.

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uavsim/config.hpp"
#include "uavsim/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::string out;
  std::string mock_llm;
  bool live_llm = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_out) {
  cmd->add_option("--config", f.config, "scenario config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "override the base seed");
  cmd->add_option("--episodes", f.episodes, "override the episode count");
  cmd->add_option("--mock-llm", f.mock_llm, "answer LLM queries from a JSONL transcript");
  cmd->add_flag("--live-llm", f.live_llm, "query the configured chat-completions endpoint");
  if (with_out) cmd->add_option("--out", f.out, "output directory")->required();
}

uavsim::ScenarioConfig load(const CommonFlags& f) {
  auto cfg = uavsim::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (f.episodes) cfg.episodes = *f.episodes;
  if (!f.mock_llm.empty()) cfg.mock_transcript = std::filesystem::absolute(f.mock_llm).string();
  if (f.live_llm) {
    cfg.live_llm = true;
    cfg.mock_transcript.reset();
  }
  cfg.validate();
  if (uavsim::uses_llm(cfg) && !cfg.mock_transcript && !cfg.live_llm) {
    throw uavsim::ConfigValidationError("an llm policy needs --mock-llm <transcript> or --live-llm");
  }
  return cfg;
}

void print_summary(const std::vector<uavsim::MetricsRow>& rows) {
  const auto stats = uavsim::summarize(rows, uavsim::kSummaryWindow);
  std::cout << "episodes: " << rows.size() << " (summary over the last " << std::min(uavsim::kSummaryWindow, rows.size())
            << ")\n";
  for (std::size_t m = 0; m < uavsim::kMetricNames.size(); ++m) {
    std::cout << "  " << uavsim::kMetricNames[m] << ": " << stats[m].mean << " +- " << stats[m].stddev << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-UAV aerial highway simulator with hierarchical HAPS/edge decision making"};
  app.require_subcommand(1);
  std::string log_level = "warn";
  app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off");

  CommonFlags run_f, sweep_f, validate_f;
  auto* run_cmd = app.add_subcommand("run", "run an experiment and write metrics");
  add_common(run_cmd, run_f, true);

  auto* sweep_cmd = app.add_subcommand("sweep", "run one experiment per parameter value");
  add_common(sweep_cmd, sweep_f, true);
  std::string param;
  std::vector<std::string> values;
  sweep_cmd->add_option("--param", param, "num_uavs | num_terrestrial_bs | policy")->required();
  sweep_cmd->add_option("--values", values, "values to sweep")->required()->delimiter(',');

  auto* validate_cmd = app.add_subcommand("validate", "load and validate a config, then print it resolved");
  add_common(validate_cmd, validate_f, false);

  auto* replay_cmd = app.add_subcommand("replay", "re-run a recorded run and compare metrics.csv");
  std::string run_dir, replay_out;
  replay_cmd->add_option("run_dir", run_dir, "directory written by `uavsim run`")->required()->check(CLI::ExistingDirectory);
  replay_cmd->add_option("--out", replay_out, "replay output directory (default <run_dir>/replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitValidation;
  }
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*run_cmd) {
      const auto cfg = load(run_f);
      uavsim::RunOptions o;
      o.out_dir = run_f.out;
      const auto res = uavsim::run_experiment(cfg, o);
      print_summary(res.rows);
      std::cout << "wrote " << run_f.out << '\n';
    } else if (*sweep_cmd) {
      const auto cfg = load(sweep_f);
      const auto rows = uavsim::sweep(cfg, param, values, std::filesystem::path(sweep_f.out));
      for (const auto& r : rows) {
        std::cout << r.parameter << '=' << r.value << ": total_reward " << r.stats[0].mean << " +- "
                  << r.stats[0].stddev << ", collision_rate " << r.stats[4].mean << '\n';
      }
      std::cout << "wrote " << sweep_f.out << '\n';
    } else if (*validate_cmd) {
      const auto cfg = load(validate_f);
      std::cout << uavsim::to_json(cfg).dump(2) << '\n';
    } else if (*replay_cmd) {
      const std::filesystem::path out = replay_out.empty() ? std::filesystem::path(run_dir) / "replay" : std::filesystem::path(replay_out);
      const auto r = uavsim::replay(run_dir, out);
      if (!r.identical) {
        std::cerr << "replay differs: " << r.original_csv << " vs " << r.replay_csv << '\n';
        return kExitRuntime;
      }
      std::cout << "replay identical: " << r.replay_csv << '\n';
    }
  } catch (const uavsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
