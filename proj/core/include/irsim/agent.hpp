#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "irsim/env.hpp"
#include "irsim/nn.hpp"
#include "irsim/scenario.hpp"

namespace irsim {

struct Experience {
  Eigen::VectorXd state;
  Eigen::VectorXd action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool done = false;
};

// Fixed-capacity ring with a uniform sampler; sampling requires at least
// one full batch stored.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Experience e);
  void clear();

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return total_pushed_; }

  // Logical index 0 is the oldest surviving experience.
  const Experience& at(std::size_t logical) const;

  std::vector<const Experience*> sample(int batch, RngStream& rng) const;

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::uint64_t total_pushed_ = 0;
  std::vector<Experience> items_;
};

// Zero-mean Ornstein-Uhlenbeck exploration noise. The scale follows a
// per-episode linear decay handled by ou_schedule.
class OuNoise {
 public:
  OuNoise(int dim, double theta);

  void reset();  // state back to zero at episode start
  void set_scale(double scale) { scale_ = scale; }
  double scale() const { return scale_; }
  const Eigen::VectorXd& state() const { return state_; }

  // x <- x + theta * (0 - x) + scale * N(0, 1), per dimension.
  const Eigen::VectorXd& sample(RngStream& rng);

  nlohmann::json to_json() const;
  void load_json(const nlohmann::json& j);

 private:
  double theta_;
  double scale_ = 0.0;
  Eigen::VectorXd state_;
};

// Scale for the given episode: max(floor, initial * (1 - episode/total)).
double ou_schedule(double initial, double floor, int episode,
                   int total_episodes);

// Bootstrapped regression targets: y = r + rho * Q'(s', mu'(s')), with the
// bootstrap dropped on terminal transitions.
Eigen::VectorXd critic_targets(const Eigen::MatrixXd& next_states,
                               const Eigen::VectorXd& rewards,
                               const std::vector<bool>& done,
                               nn::Net& actor_target, nn::Net& critic_target,
                               double rho);

struct TrainDiagnostics {
  double critic_loss = 0.0;
  double mean_q = 0.0;
};

// Deterministic-policy actor-critic with target copies, replay, and OU
// exploration. One instance is single-threaded; run seeds in parallel by
// instantiating one agent per seed.
class Agent {
 public:
  Agent(int state_dim, int action_dim, const LearnerConfig& config,
        std::uint64_t seed);

  // Noise-free policy, eval-mode forward.
  Eigen::VectorXd greedy_action(const Eigen::VectorXd& state);
  // Policy plus OU noise, clipped to [-1, 1].
  Eigen::VectorXd select_action(const Eigen::VectorXd& state);

  void store(Experience e) { replay_.push(std::move(e)); }
  bool ready_to_train() const {
    return replay_.size() >= static_cast<std::size_t>(config_.batch_size);
  }

  // One critic regression step, one deterministic policy-gradient step,
  // then soft updates of both targets.
  TrainDiagnostics train_step();

  void begin_episode(double noise_scale);
  void clear_replay() { replay_.clear(); }

  // Bootstrap targets are clamped to the feasible episode-return range.
  // With an undiscounted objective the regression has no contraction, so
  // unclamped bootstrapping lets overestimation grow without bound; any
  // value outside the attainable return interval is certainly wrong.
  void set_target_clip(double lo, double hi) {
    target_clip_lo_ = lo;
    target_clip_hi_ = hi;
  }

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  const LearnerConfig& config() const { return config_; }
  int phase() const { return phase_; }
  void set_phase(int phase) { phase_ = phase; }

  nn::Net& actor() { return actor_; }
  nn::Net& critic() { return critic_; }
  nn::Net& actor_target() { return actor_target_; }
  nn::Net& critic_target() { return critic_target_; }
  ReplayBuffer& replay() { return replay_; }
  OuNoise& noise() { return noise_; }

  void save(const std::string& path) const;
  static Agent load(const std::string& path);

  nlohmann::json to_json() const;
  static Agent from_json(const nlohmann::json& j);

 private:
  int state_dim_;
  int action_dim_;
  LearnerConfig config_;
  int phase_ = 1;

  nn::Net actor_, critic_, actor_target_, critic_target_;
  nn::AdamState adam_actor_, adam_critic_;
  ReplayBuffer replay_;
  OuNoise noise_;
  RngStream noise_rng_{0};
  RngStream replay_rng_{0};
  double target_clip_lo_ = -1e300;
  double target_clip_hi_ = 1e300;
};

// Feasible episode-return interval for a scenario: step rewards are
// bounded below by U*(step cost + outage penalty) per slot and above by
// zero, with the arrival and success bonuses on top.
std::pair<double, double> return_bounds(const Scenario& scenario);

// Raw policy output in [-1, 1]^(3U) -> environment action: displacements
// scaled by the per-slot step limit, power share mapped to [0, 1].
EnvAction to_env_action(const Eigen::VectorXd& raw, double step_limit);

struct EpisodeMetric {
  int episode = 0;
  int phase = 1;
  double cum_reward = 0.0;
  double mqi = 0.0;
  bool reached = false;
};

void write_metrics_csv(const std::vector<EpisodeMetric>& metrics,
                       const std::string& path);

struct TrainOptions {
  ChannelSource channel_source = ChannelSource::kRadioMap;
  int phase1_episodes = -1;  // -1 keeps the scenario's configured count
  int phase2_episodes = -1;
};

struct TrainRun {
  Agent agent;
  std::vector<EpisodeMetric> metrics;
};

// Two-phase training: destination phase with the inducing reward, network
// transfer (replay cleared, noise rescaled), then QoS phase.
TrainRun train_dtdpg(const Scenario& scenario, const TrainOptions& options,
                     std::uint64_t seed);

// Single-phase baseline on the combined reward with one decaying noise
// schedule over the same total episode budget.
TrainRun train_ddpg_baseline(const Scenario& scenario,
                             const TrainOptions& options, std::uint64_t seed);

struct EvalEpisode {
  double cum_reward = 0.0;
  double mqi = 0.0;
  bool reached = false;
  std::vector<SlotRecord> trace;
};

// Greedy rollouts; traces kept when requested.
std::vector<EvalEpisode> evaluate(Agent& agent, const Scenario& scenario,
                                  int episodes, ChannelSource source,
                                  std::uint64_t seed, bool keep_traces);

// Aggregation helpers for summaries and comparisons.
double median(std::vector<double> values);
double reach_rate_last(const std::vector<EpisodeMetric>& metrics, int last_n,
                       int phase);
std::vector<double> mqi_last(const std::vector<EpisodeMetric>& metrics,
                             int last_n, int phase);

}  // namespace irsim
