#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "reil/bridge/server.hpp"
#include "reil/harness/experiment.hpp"
#include "reil/harness/stats.hpp"

using namespace reil;
namespace fs = std::filesystem;

namespace {

struct RunArgs {
  std::string config;
  std::string mode;
  std::string env;
  std::optional<int> episodes;
  std::optional<int> runs;
  std::optional<std::uint64_t> seed;
  bool offline = false;
  std::string dataset;
  bool live = false;
  std::optional<int> port;
  std::string host = "127.0.0.1";
  std::string out;
  bool quiet = false;
};

// Command-line overrides are applied to the JSON before parsing so that
// environment and mode defaults follow them.
harness::ExperimentConfig resolve_config(const RunArgs& a) {
  nlohmann::json j = a.config.empty() ? nlohmann::json::object() : nn::read_json_file(a.config);
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, a.config + ": expected a JSON object");
  if (!a.env.empty()) j["env"] = a.env;
  if (!a.mode.empty() || a.seed) {
    if (!j.contains("algorithm")) j["algorithm"] = nlohmann::json::object();
    if (!a.mode.empty()) j["algorithm"]["mode"] = a.mode;
    if (a.seed) j["algorithm"]["seed"] = *a.seed;
  }
  if (a.episodes) j["episodes"] = *a.episodes;
  if (a.runs) j["runs"] = *a.runs;
  if (a.offline) j["offline"] = true;
  if (!a.dataset.empty()) j["dataset"] = a.dataset;
  if (a.live) j["live"] = true;
  if (a.port) j["port"] = *a.port;
  if (!a.out.empty()) j["out_dir"] = a.out;
  return harness::experiment_config_from_json(j);
}

void print_row(int run, const harness::MetricsRow& r) {
  std::printf("run %d episode %lld steps %lld supervised %lld return %.3f ang_acc %.4f%s%s\n", run,
              static_cast<long long>(r.episode), static_cast<long long>(r.steps),
              static_cast<long long>(r.supervised_steps), r.episode_return, r.avg_abs_angular_acc,
              r.action_error ? (" action_err " + std::to_string(*r.action_error)).c_str() : "",
              r.success ? " SUCCESS" : "");
  std::fflush(stdout);
}

int cmd_run(const RunArgs& a) {
  const auto cfg = resolve_config(a);
  if (cfg.live) {
    bridge::LiveSession session(cfg, [] {
      return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
    });
    bridge::SessionServer server(session, static_cast<unsigned short>(cfg.port), a.host);
    std::printf("listening on ws://%s:%u/session (%g Hz)\n", a.host.c_str(), server.port(), cfg.live_rate_hz);
    std::fflush(stdout);
    server.run();
    session.save(cfg.out_dir);
    for (const auto& r : session.metrics().rows) print_row(0, r);
    std::printf("wrote %s\n", cfg.out_dir.c_str());
    return 0;
  }
  const auto result = harness::run_experiment(cfg, [&](int run, const train::EpisodeReport& rep) {
    if (!a.quiet) print_row(run, rep.row);
  });
  int successes = 0;
  for (const auto& log : result.runs) successes += log.any_success() ? 1 : 0;
  std::printf("%s %s: %d/%d runs succeeded; wrote %s\n", harness::to_string(cfg.env).c_str(),
              std::string(train::to_string(cfg.algorithm.mode)).c_str(), successes, cfg.runs, cfg.out_dir.c_str());
  return 0;
}

int cmd_eval(const std::string& checkpoint, int episodes, std::optional<std::uint64_t> seed, const std::string& out) {
  auto loaded = harness::load_checkpoint(checkpoint);
  const auto& cfg = loaded.config;
  const auto log = train::evaluate(*loaded.env, loaded.state, cfg.algorithm, cfg.reward, episodes,
                                   seed.value_or(cfg.algorithm.seed), cfg.gate);
  if (out.empty()) {
    harness::write_metrics_csv(log, std::cout);
  } else {
    harness::save_metrics_csv(log, out);
  }
  int successes = 0;
  double acc = 0.0;
  for (const auto& r : log.rows) {
    successes += r.success;
    acc += r.avg_abs_angular_acc;
  }
  std::fprintf(stderr, "%d/%d episodes succeeded; mean avg_abs_angular_acc %.6f\n", successes, episodes,
               log.rows.empty() ? 0.0 : acc / double(log.rows.size()));
  return 0;
}

// An experiment directory holds run_<i>/ subdirectories. `dir` is either
// one experiment or a parent of several.
std::map<std::string, std::vector<harness::MetricsLog>> collect(const std::string& dir) {
  std::map<std::string, std::vector<harness::MetricsLog>> out;
  auto name_of = [](const fs::path& p) {
    const auto cfg = p / "config.json";
    if (fs::exists(cfg)) {
      const auto j = nn::read_json_file(cfg.string());
      if (j.contains("algorithm") && j["algorithm"].contains("mode")) {
        return p.filename().string() + " (" + j["algorithm"]["mode"].get<std::string>() + ")";
      }
    }
    return p.filename().string();
  };
  if (fs::exists(fs::path(dir) / "run_0")) {
    out[name_of(fs::path(dir))] = harness::load_run_metrics(dir);
    return out;
  }
  if (!fs::is_directory(dir)) throw Error(ErrorCode::IoError, dir + ": not a directory");
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory() && fs::exists(e.path() / "run_0")) out[name_of(e.path())] = harness::load_run_metrics(e.path().string());
  }
  if (out.empty()) throw Error(ErrorCode::IoError, "no experiments under " + dir);
  return out;
}

int cmd_stats(const std::string& dir, bool json) {
  const auto summary = harness::summarize(collect(dir));
  if (json) {
    nlohmann::json j = {{"algorithms", nlohmann::json::array()}, {"tests", nlohmann::json::array()}};
    for (const auto& a : summary.algorithms) {
      j["algorithms"].push_back({{"algorithm", a.algorithm},
                                 {"runs", a.runs},
                                 {"successes", a.successes},
                                 {"mean_supervised", a.mean_supervised},
                                 {"std_supervised", a.std_supervised},
                                 {"single_run", a.single_run}});
    }
    for (const auto& t : summary.tests) {
      nlohmann::json tj = {{"a", t.a}, {"b", t.b}, {"computed", t.computed}};
      if (t.computed) {
        tj["t"] = std::isfinite(t.welch.t) ? nlohmann::json(t.welch.t) : nlohmann::json(t.welch.t > 0 ? "inf" : "-inf");
        tj["df"] = t.welch.df;
        tj["p"] = t.welch.p;
        tj["degenerate"] = t.welch.degenerate;
      }
      j["tests"].push_back(tj);
    }
    std::cout << j.dump(2) << '\n';
    return 0;
  }
  std::printf("%-32s %5s %9s %12s %12s\n", "algorithm", "runs", "success", "mean_sup", "std_sup");
  for (const auto& a : summary.algorithms) {
    std::printf("%-32s %5d %6d/%-2d %12.1f %12.2f%s\n", a.algorithm.c_str(), a.runs, a.successes, a.runs,
                a.mean_supervised, a.std_supervised, a.single_run ? "  (single run)" : "");
  }
  for (const auto& t : summary.tests) {
    if (!t.computed) {
      std::printf("welch %s vs %s: fewer than two successful runs\n", t.a.c_str(), t.b.c_str());
    } else {
      std::printf("welch %s vs %s: t=%.4f df=%.2f p=%.4g%s\n", t.a.c_str(), t.b.c_str(), t.welch.t, t.welch.df,
                  t.welch.p, t.welch.degenerate ? " (zero variance)" : "");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intervention-based imitation and reinforcement learning"};
  app.require_subcommand(1);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "train (headless, offline or live) and write per-run artifacts");
  run->add_option("--config", ra.config, "experiment config JSON")->check(CLI::ExistingFile);
  run->add_option("--mode", ra.mode, "REIL, ONLY_RL, ONLY_BC, HG_DAGGER or IARL");
  run->add_option("--env", ra.env, "cartpole or navsim");
  run->add_option("--episodes", ra.episodes, "episodes per run");
  run->add_option("--runs", ra.runs, "independent runs");
  run->add_option("--seed", ra.seed, "base seed; run i uses seed + 10007 i");
  run->add_flag("--offline", ra.offline, "train from --dataset, then evaluate");
  run->add_option("--dataset", ra.dataset, "dataset JSONL for offline runs");
  run->add_flag("--live", ra.live, "serve the rollout on ws://host:port/session");
  run->add_option("--port", ra.port, "live session port");
  run->add_option("--host", ra.host, "live session bind address");
  run->add_option("--out", ra.out, "output directory");
  run->add_flag("--quiet", ra.quiet, "no per-episode lines");

  std::string checkpoint, eval_out;
  int eval_episodes = 10;
  std::optional<std::uint64_t> eval_seed;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint without learning");
  eval->add_option("--checkpoint", checkpoint, "checkpoint.json from a run")->required()->check(CLI::ExistingFile);
  eval->add_option("--episodes", eval_episodes, "evaluation episodes")->check(CLI::NonNegativeNumber);
  eval->add_option("--seed", eval_seed, "environment seed (default: the run's seed)");
  eval->add_option("--out", eval_out, "metrics CSV path (default: stdout)");

  std::string stats_in;
  bool stats_json = false;
  auto* stats = app.add_subcommand("stats", "summarize runs: success, supervised steps, Welch tests");
  stats->add_option("--in", stats_in, "experiment directory or parent of several")->required();
  stats->add_flag("--json", stats_json, "machine-readable output");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(ra);
    if (*eval) return cmd_eval(checkpoint, eval_episodes, eval_seed, eval_out);
    if (*stats) return cmd_stats(stats_in, stats_json);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == ErrorCode::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
