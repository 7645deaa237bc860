#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reil/bridge/message.hpp"
#include "reil/harness/experiment.hpp"

namespace reil::bridge {

/// Monotonic time in seconds.
using Clock = std::function<double()>;

struct SessionOptions {
  double heartbeat_s = 2.0;  // silence during a takeover that pauses the env
  double abort_s = 30.0;     // pause length that aborts the episode
};

/// Out-of-band supervisor label: the action the human would have taken at
/// `step_index`. Never executed.
struct LabelRecord {
  std::int64_t episode = 0;
  std::int64_t step_index = 0;
  std::vector<double> action;
  bool agent_step = false;  // paired with the agent's proposal in the error metric

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// Live supervision session. Owns the environment, learner and replay
/// memory; the transport feeds it client lines and ticks it at the control
/// rate. Commands received after STATE(step_index = t) apply to step t + 1.
class LiveSession {
 public:
  LiveSession(harness::ExperimentConfig cfg, Clock clock, SessionOptions opt = {})
      : cfg_(std::move(cfg)),
        opt_(opt),
        clock_(std::move(clock)),
        env_(harness::make_environment(cfg_)),
        state_(train::make_train_state<float>(harness::make_model_spec(cfg_, *env_), cfg_.algorithm)),
        memory_(cfg_.memory_capacity, cfg_.algorithm.seed) {
    harness::validate(cfg_);
    train::OnlineOptions o;
    o.env_seed = cfg_.algorithm.seed;
    o.gate = cfg_.gate;
    o.max_env_steps = cfg_.max_env_steps;
    runner_ = std::make_unique<train::EpisodeRunner<float>>(*env_, state_, memory_, cfg_.algorithm, cfg_.reward, o);
    finished_ = cfg_.episodes == 0;
    if (!finished_) runner_->begin(0);
  }

  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  bool connected() const { return connected_; }
  bool finished() const { return finished_; }
  bool paused() const { return paused_; }
  bool takeover() const { return takeover_; }
  std::int64_t episode() const { return episode_; }
  const harness::MetricsLog& metrics() const { return log_; }
  const ReplayMemory& memory() const { return memory_; }
  const std::vector<LabelRecord>& labels() const { return labels_; }
  const std::vector<train::EpisodeReport>& episodes() const { return reports_; }
  const std::vector<std::int64_t>& aborted_episodes() const { return aborted_; }
  const harness::ExperimentConfig& config() const { return cfg_; }
  const train::TrainState<float>& train_state() const { return state_; }
  double period_s() const { return 1.0 / cfg_.live_rate_hz; }

  /// A client attached: greets it with HELLO, CONFIG and the current STATE.
  /// The first connection starts the rollout.
  std::vector<SessionMessage> connect() {
    if (connected_) throw Error(ErrorCode::Busy, "a client is already attached");
    connected_ = true;
    started_ = true;
    out_seq_ = 0;
    in_seq_.reset();
    last_inbound_ = clock_();
    paused_ = false;
    pause_since_.reset();
    std::vector<SessionMessage> out;
    emit(out, MessageKind::Hello, hello_payload());
    emit(out, MessageKind::Config, config_payload());
    if (!finished_) emit(out, MessageKind::State, state_payload(last_step_));
    return out;
  }

  /// The client left. Any takeover stays active and pauses on silence; the
  /// stale human action is dropped.
  void disconnect() {
    connected_ = false;
    latest_human_.reset();
  }

  /// Handles one inbound line. Returns any ERROR replies.
  std::vector<SessionMessage> handle_line(std::string_view line) {
    std::vector<SessionMessage> out;
    log_line("in", std::string(line));
    last_inbound_ = clock_();
    paused_ = false;
    pause_since_.reset();
    std::optional<std::int64_t> reply_to;
    try {
      const auto m = parse_message(line);
      reply_to = m.seq;
      if (in_seq_ && m.seq <= *in_seq_) {
        throw Error(ErrorCode::Protocol, "seq must increase (last " + std::to_string(*in_seq_) + ")");
      }
      apply(m);
      in_seq_ = m.seq;
    } catch (const Error& e) {
      nlohmann::json p = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
      p["in_reply_to"] = reply_to ? nlohmann::json(*reply_to) : nlohmann::json();
      emit(out, MessageKind::Error, p);
    }
    return out;
  }

  /// One control period: executes a step unless paused or not started.
  std::vector<SessionMessage> tick() {
    std::vector<SessionMessage> out;
    if (finished_ || !started_) return out;
    const double now = clock_();
    if (takeover_ && now - last_inbound_ >= opt_.heartbeat_s) {
      if (!pause_since_) pause_since_ = now;
      paused_ = true;
    }
    if (paused_) {
      if (now - *pause_since_ >= opt_.abort_s) {
        abort_episode(out);
      } else {
        emit(out, MessageKind::State, state_payload(last_step_));
      }
      return out;
    }

    std::optional<std::vector<double>> human;
    if (takeover_) human = latest_human_ ? *latest_human_ : neutral_action();
    const auto label = std::exchange(pending_label_, std::nullopt);
    const auto rep = runner_->step(human, label);
    if (label) labels_.push_back({episode_, rep.step_index, *label, rep.owner == envs::Owner::Agent});
    last_step_ = rep;
    emit(out, MessageKind::State, state_payload(last_step_));
    if (rep.closed) close_episode(out, false);
    return out;
  }

  /// Writes metrics, dataset, checkpoint, labels and the message log under
  /// out_dir/run_0/.
  void save(const std::string& out_dir) const {
    const auto paths = harness::run_paths(out_dir, 0);
    const auto dir = std::filesystem::path(paths.metrics_csv).parent_path();
    std::filesystem::create_directories(dir);
    nn::write_json_file((std::filesystem::path(out_dir) / "config.json").string(), harness::to_json(cfg_));
    harness::save_metrics_csv(log_, paths.metrics_csv);
    save_dataset(memory_, paths.dataset_jsonl);
    harness::save_checkpoint(paths.checkpoint_json, cfg_, state_);
    std::ofstream labels(dir / "labels.jsonl", std::ios::trunc);
    for (const auto& l : labels_) {
      labels << nlohmann::json{{"episode", l.episode}, {"step_index", l.step_index}, {"action", l.action},
                               {"agent_step", l.agent_step}}
                    .dump()
             << '\n';
    }
    std::ofstream session_log(dir / "session_log.jsonl", std::ios::trunc);
    for (const auto& entry : message_log_) session_log << entry.dump() << '\n';
    if (!labels || !session_log) throw Error(ErrorCode::IoError, "cannot write session files under " + dir.string());
  }

 private:
  void apply(const SessionMessage& m) {
    switch (m.kind) {
      case MessageKind::Hello: return;
      case MessageKind::Takeover:
        if (takeover_) throw Error(ErrorCode::Protocol, "TAKEOVER while a takeover is active");
        require_open();
        takeover_ = true;
        latest_human_.reset();
        return;
      case MessageKind::HumanAction:
        if (!takeover_) throw Error(ErrorCode::Protocol, "HUMAN_ACTION outside a takeover");
        latest_human_ = payload_action(m, env_->action_box().dim());
        return;
      case MessageKind::Release:
        if (!takeover_) throw Error(ErrorCode::Protocol, "RELEASE without a takeover");
        takeover_ = false;
        latest_human_.reset();
        return;
      case MessageKind::Label:
        require_open();
        pending_label_ = payload_action(m, env_->action_box().dim());
        return;
      default:
        throw Error(ErrorCode::Protocol, std::string(to_string(m.kind)) + " is server-to-client only");
    }
  }

  void require_open() const {
    if (finished_) throw Error(ErrorCode::Protocol, "session finished");
  }

  std::vector<double> neutral_action() const {
    const auto& box = env_->action_box();
    std::vector<double> a(box.dim());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = box.center(i);
    return a;
  }

  void abort_episode(std::vector<SessionMessage>& out) {
    runner_->close(TerminalKind::TimeLimit);
    close_episode(out, true);
  }

  void close_episode(std::vector<SessionMessage>& out, bool aborted) {
    auto report = runner_->end();
    nlohmann::json metrics = {{"steps", report.row.steps},
                              {"supervised_steps", report.row.supervised_steps},
                              {"episode_return", report.row.episode_return},
                              {"avg_abs_angular_acc", report.row.avg_abs_angular_acc},
                              {"action_error", report.row.action_error ? nlohmann::json(*report.row.action_error)
                                                                        : nlohmann::json()},
                              {"success", report.row.success}};
    emit(out, MessageKind::EpisodeEnd,
         {{"episode", episode_},
          {"terminal_kind", std::string(reil::to_string(report.episode.terminal_kind))},
          {"aborted", aborted},
          {"metrics", metrics}});
    if (aborted) {
      aborted_.push_back(episode_);
    } else {
      log_.rows.push_back(report.row);
    }
    const bool success = report.row.success;
    reports_.push_back(std::move(report));
    takeover_ = false;
    paused_ = false;
    pause_since_.reset();
    latest_human_.reset();
    pending_label_.reset();
    last_step_.reset();
    ++episode_;
    if (episode_ >= cfg_.episodes || (cfg_.stop_on_success && success) || runner_->budget_exhausted()) {
      finished_ = true;
      return;
    }
    runner_->begin(episode_);
    emit(out, MessageKind::State, state_payload(last_step_));
  }

  nlohmann::json hello_payload() const {
    const auto& box = env_->action_box();
    return {{"server", "reil"},
            {"protocol", 1},
            {"env", env_->name()},
            {"mode", std::string(train::to_string(cfg_.algorithm.mode))},
            {"obs_dim", env_->obs_dim()},
            {"action_low", box.low},
            {"action_high", box.high},
            {"control_hz", cfg_.live_rate_hz},
            {"heartbeat_s", opt_.heartbeat_s},
            {"abort_s", opt_.abort_s},
            {"episodes", cfg_.episodes}};
  }

  nlohmann::json config_payload() const {
    nlohmann::json p = {{"experiment", harness::to_json(cfg_)}};
    if (cfg_.env == harness::EnvKind::Cartpole) {
      p["note"] = "live cart-pole runs slowed to the control rate; metrics are not comparable to headless runs";
    }
    return p;
  }

  // step_index is that of the last executed step, -1 right after a reset.
  nlohmann::json state_payload(const std::optional<train::StepReport>& step) const {
    nlohmann::json p = {{"episode", episode_},
                        {"step_index", step ? step->step_index : std::int64_t{-1}},
                        {"obs", env_->observe()},
                        {"env", env_->state_json()},
                        {"f_demo", step ? step->f_demo : 0},
                        {"owner", step ? envs::to_string(step->owner) : "NONE"},
                        {"takeover", takeover_},
                        {"paused", paused_}};
    p["action"] = step ? nlohmann::json(step->executed_action) : nlohmann::json();
    p["agent_action"] = step ? nlohmann::json(step->agent_action) : nlohmann::json();
    return p;
  }

  void emit(std::vector<SessionMessage>& out, MessageKind kind, nlohmann::json payload) {
    SessionMessage m{kind, 0, std::move(payload)};
    if (connected_) {
      m.seq = ++out_seq_;
      out.push_back(m);
    }
    log_line("out", to_line(m));
  }

  void log_line(const char* dir, std::string line) {
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    message_log_.push_back({{"dir", dir}, {"t", clock_()}, {"line", std::move(line)}});
  }

  harness::ExperimentConfig cfg_;
  SessionOptions opt_;
  Clock clock_;
  std::unique_ptr<envs::Environment> env_;
  train::TrainState<float> state_;
  ReplayMemory memory_;
  std::unique_ptr<train::EpisodeRunner<float>> runner_;
  harness::MetricsLog log_;
  std::vector<train::EpisodeReport> reports_;
  std::vector<std::int64_t> aborted_;
  std::vector<LabelRecord> labels_;
  std::vector<nlohmann::json> message_log_;
  std::optional<train::StepReport> last_step_;
  std::optional<std::vector<double>> latest_human_;
  std::optional<std::vector<double>> pending_label_;
  std::optional<std::int64_t> in_seq_;
  std::optional<double> pause_since_;
  std::int64_t out_seq_ = 0;
  std::int64_t episode_ = 0;
  double last_inbound_ = 0.0;
  bool connected_ = false;
  bool started_ = false;
  bool takeover_ = false;
  bool paused_ = false;
  bool finished_ = false;
};

}  // namespace reil::bridge
