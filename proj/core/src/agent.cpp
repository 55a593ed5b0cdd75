#include "irsim/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace irsim {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return RngStream::substream(seed, index).next_u64();
}

VectorXd to_vector(const std::vector<double>& values) {
  VectorXd v(static_cast<int>(values.size()));
  for (int i = 0; i < v.size(); ++i) v(i) = values[i];
  return v;
}

}  // namespace

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0)
    throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  items_.reserve(capacity_);
}

void ReplayBuffer::push(Experience e) {
  if (items_.size() < capacity_) {
    items_.push_back(std::move(e));
  } else {
    items_[next_] = std::move(e);
  }
  next_ = (next_ + 1) % capacity_;
  ++total_pushed_;
}

void ReplayBuffer::clear() {
  items_.clear();
  next_ = 0;
}

const Experience& ReplayBuffer::at(std::size_t logical) const {
  if (logical >= items_.size())
    throw std::out_of_range("ReplayBuffer::at: index past size");
  if (items_.size() < capacity_) return items_[logical];
  return items_[(next_ + logical) % capacity_];
}

std::vector<const Experience*> ReplayBuffer::sample(int batch,
                                                    RngStream& rng) const {
  if (batch < 1 || items_.size() < static_cast<std::size_t>(batch))
    throw std::logic_error("ReplayBuffer::sample: fewer items than batch");
  std::vector<const Experience*> out;
  out.reserve(batch);
  for (int i = 0; i < batch; ++i)
    out.push_back(&items_[rng.uniform_index(items_.size())]);
  return out;
}

OuNoise::OuNoise(int dim, double theta)
    : theta_(theta), state_(VectorXd::Zero(dim)) {}

void OuNoise::reset() { state_.setZero(); }

const VectorXd& OuNoise::sample(RngStream& rng) {
  for (int i = 0; i < state_.size(); ++i)
    state_(i) += theta_ * (0.0 - state_(i)) + scale_ * rng.normal();
  return state_;
}

json OuNoise::to_json() const {
  json j;
  j["theta"] = theta_;
  j["scale"] = scale_;
  json st = json::array();
  for (int i = 0; i < state_.size(); ++i) st.push_back(state_(i));
  j["state"] = std::move(st);
  return j;
}

void OuNoise::load_json(const json& j) {
  theta_ = j.at("theta").get<double>();
  scale_ = j.at("scale").get<double>();
  const json& st = j.at("state");
  state_.resize(static_cast<int>(st.size()));
  for (int i = 0; i < state_.size(); ++i) state_(i) = st[i].get<double>();
}

double ou_schedule(double initial, double floor, int episode,
                   int total_episodes) {
  if (total_episodes < 1)
    throw std::invalid_argument("ou_schedule: total episodes must be >= 1");
  const double fraction =
      static_cast<double>(episode) / static_cast<double>(total_episodes);
  return std::max(floor, initial * (1.0 - fraction));
}

VectorXd critic_targets(const MatrixXd& next_states, const VectorXd& rewards,
                        const std::vector<bool>& done, nn::Net& actor_target,
                        nn::Net& critic_target, double rho) {
  const int batch = static_cast<int>(next_states.rows());
  if (batch == 0) throw std::invalid_argument("critic_targets: empty batch");
  if (rewards.size() != batch || static_cast<int>(done.size()) != batch)
    throw std::invalid_argument("critic_targets: batch size mismatch");

  const MatrixXd next_actions =
      actor_target.forward(next_states, nn::ForwardMode::kEval);
  MatrixXd joint(batch, next_states.cols() + next_actions.cols());
  joint << next_states, next_actions;
  const MatrixXd q_next = critic_target.forward(joint, nn::ForwardMode::kEval);

  VectorXd y(batch);
  for (int i = 0; i < batch; ++i)
    y(i) = done[i] ? rewards(i) : rewards(i) + rho * q_next(i, 0);
  return y;
}

Agent::Agent(int state_dim, int action_dim, const LearnerConfig& config,
             std::uint64_t seed)
    : state_dim_(state_dim),
      action_dim_(action_dim),
      config_(config),
      actor_(nn::NetSpec::actor(state_dim, action_dim, config.hidden1,
                                config.hidden2)),
      critic_(nn::NetSpec::critic(state_dim, action_dim, config.hidden1,
                                  config.hidden2)),
      actor_target_(actor_.spec()),
      critic_target_(critic_.spec()),
      replay_(static_cast<std::size_t>(config.buffer_capacity)),
      noise_(action_dim, config.ou_theta),
      noise_rng_(RngStream::substream(seed, 1)),
      replay_rng_(RngStream::substream(seed, 2)) {
  RngStream init_rng = RngStream::substream(seed, 0);
  actor_.init_params(init_rng);
  critic_.init_params(init_rng);
  actor_target_ = actor_;
  critic_target_ = critic_;
  adam_actor_ = nn::AdamState::zeros_like(actor_);
  adam_critic_ = nn::AdamState::zeros_like(critic_);
}

VectorXd Agent::greedy_action(const VectorXd& state) {
  MatrixXd row(1, state_dim_);
  row.row(0) = state.transpose();
  return actor_.forward(row, nn::ForwardMode::kEval).row(0).transpose();
}

VectorXd Agent::select_action(const VectorXd& state) {
  VectorXd action = greedy_action(state) + noise_.sample(noise_rng_);
  return action.cwiseMax(-1.0).cwiseMin(1.0);
}

void Agent::begin_episode(double noise_scale) {
  noise_.set_scale(noise_scale);
  noise_.reset();
}

TrainDiagnostics Agent::train_step() {
  if (!ready_to_train())
    throw std::logic_error("Agent::train_step: replay smaller than a batch");
  const int batch = config_.batch_size;
  const auto sampled = replay_.sample(batch, replay_rng_);

  MatrixXd states(batch, state_dim_);
  MatrixXd actions(batch, action_dim_);
  MatrixXd next_states(batch, state_dim_);
  VectorXd rewards(batch);
  std::vector<bool> done(batch);
  for (int i = 0; i < batch; ++i) {
    states.row(i) = sampled[i]->state.transpose();
    actions.row(i) = sampled[i]->action.transpose();
    next_states.row(i) = sampled[i]->next_state.transpose();
    rewards(i) = sampled[i]->reward * config_.reward_scale;
    done[i] = sampled[i]->done;
  }

  const double scale = config_.reward_scale;
  const VectorXd y = critic_targets(next_states, rewards, done, actor_target_,
                                    critic_target_, config_.discount)
                         .cwiseMax(target_clip_lo_ * scale)
                         .cwiseMin(target_clip_hi_ * scale);

  // Critic regression on the sampled transitions.
  MatrixXd joint(batch, state_dim_ + action_dim_);
  joint << states, actions;
  nn::ForwardCache critic_cache;
  const MatrixXd q = critic_.forward(joint, nn::ForwardMode::kTrain,
                                     &critic_cache, true);
  const VectorXd err = q.col(0) - y;
  const double critic_loss = err.squaredNorm() / batch;
  MatrixXd dq(batch, 1);
  dq.col(0) = (2.0 / batch) * err;
  nn::Grads critic_grads;
  critic_.backward(critic_cache, dq, &critic_grads);
  nn::adam_step(critic_, critic_grads, adam_critic_, config_.critic_lr);

  // Deterministic policy gradient: ascend Q(s, mu(s)) through the critic's
  // action input. This critic pass keeps its running stats untouched.
  nn::ForwardCache actor_cache;
  const MatrixXd policy_actions =
      actor_.forward(states, nn::ForwardMode::kTrain, &actor_cache, true);
  MatrixXd joint_pi(batch, state_dim_ + action_dim_);
  joint_pi << states, policy_actions;
  nn::ForwardCache critic_cache2;
  const MatrixXd q_pi = critic_.forward(joint_pi, nn::ForwardMode::kTrain,
                                        &critic_cache2, false);
  const MatrixXd dq_pi = MatrixXd::Constant(batch, 1, -1.0 / batch);
  const MatrixXd d_joint = critic_.backward(critic_cache2, dq_pi, nullptr);
  const MatrixXd d_action = d_joint.rightCols(action_dim_);
  nn::Grads actor_grads;
  actor_.backward(actor_cache, d_action, &actor_grads);
  nn::adam_step(actor_, actor_grads, adam_actor_, config_.actor_lr);

  nn::soft_update(critic_target_, critic_, config_.tau);
  nn::soft_update(actor_target_, actor_, config_.tau);

  return {critic_loss, q_pi.mean()};
}

json Agent::to_json() const {
  json j;
  j["format"] = "irsim-agent-v1";
  j["state_dim"] = state_dim_;
  j["action_dim"] = action_dim_;
  j["phase"] = phase_;
  json cfg;
  cfg["actor_lr"] = config_.actor_lr;
  cfg["critic_lr"] = config_.critic_lr;
  cfg["discount"] = config_.discount;
  cfg["reward_scale"] = config_.reward_scale;
  cfg["tau"] = config_.tau;
  cfg["batch_size"] = config_.batch_size;
  cfg["buffer_capacity"] = config_.buffer_capacity;
  cfg["phase1_episodes"] = config_.phase1_episodes;
  cfg["phase2_episodes"] = config_.phase2_episodes;
  cfg["hidden1"] = config_.hidden1;
  cfg["hidden2"] = config_.hidden2;
  cfg["ou_scale_phase1"] = config_.ou_scale_phase1;
  cfg["ou_scale_phase2"] = config_.ou_scale_phase2;
  cfg["ou_floor"] = config_.ou_floor;
  cfg["ou_theta"] = config_.ou_theta;
  j["config"] = std::move(cfg);
  j["actor"] = actor_.to_json();
  j["critic"] = critic_.to_json();
  j["actor_target"] = actor_target_.to_json();
  j["critic_target"] = critic_target_.to_json();
  j["adam_actor"] = adam_actor_.to_json();
  j["adam_critic"] = adam_critic_.to_json();
  j["noise"] = noise_.to_json();
  return j;
}

Agent Agent::from_json(const json& j) {
  if (j.value("format", std::string()) != "irsim-agent-v1")
    throw std::runtime_error("Agent::from_json: not an agent checkpoint");
  LearnerConfig cfg;
  const json& cj = j.at("config");
  cfg.actor_lr = cj.at("actor_lr").get<double>();
  cfg.critic_lr = cj.at("critic_lr").get<double>();
  cfg.discount = cj.at("discount").get<double>();
  cfg.reward_scale = cj.at("reward_scale").get<double>();
  cfg.tau = cj.at("tau").get<double>();
  cfg.batch_size = cj.at("batch_size").get<int>();
  cfg.buffer_capacity = cj.at("buffer_capacity").get<int>();
  cfg.phase1_episodes = cj.at("phase1_episodes").get<int>();
  cfg.phase2_episodes = cj.at("phase2_episodes").get<int>();
  cfg.hidden1 = cj.at("hidden1").get<int>();
  cfg.hidden2 = cj.at("hidden2").get<int>();
  cfg.ou_scale_phase1 = cj.at("ou_scale_phase1").get<double>();
  cfg.ou_scale_phase2 = cj.at("ou_scale_phase2").get<double>();
  cfg.ou_floor = cj.at("ou_floor").get<double>();
  cfg.ou_theta = cj.at("ou_theta").get<double>();

  Agent agent(j.at("state_dim").get<int>(), j.at("action_dim").get<int>(),
              cfg, 0);
  agent.phase_ = j.at("phase").get<int>();
  agent.actor_ = nn::Net::from_json(j.at("actor"));
  agent.critic_ = nn::Net::from_json(j.at("critic"));
  agent.actor_target_ = nn::Net::from_json(j.at("actor_target"));
  agent.critic_target_ = nn::Net::from_json(j.at("critic_target"));
  agent.adam_actor_ = nn::AdamState::from_json(j.at("adam_actor"));
  agent.adam_critic_ = nn::AdamState::from_json(j.at("adam_critic"));
  agent.noise_.load_json(j.at("noise"));
  return agent;
}

void Agent::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("Agent::save: cannot open " + path);
  out << to_json().dump();
  if (!out) throw std::runtime_error("Agent::save: write failed for " + path);
}

Agent Agent::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("Agent::load: cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("Agent::load: " + path + ": " + e.what());
  }
  return from_json(j);
}

std::pair<double, double> return_bounds(const Scenario& scenario) {
  const double n = scenario.num_irs();
  const double lo =
      -n * (1.0 + std::max(0.0, scenario.lambda)) * scenario.t_total;
  const double hi = kRewardArrival * n + kRewardSuccess;
  return {lo, hi};
}

EnvAction to_env_action(const VectorXd& raw, double step_limit) {
  if (raw.size() % 3 != 0)
    throw std::invalid_argument("to_env_action: raw size must be 3 per IR");
  EnvAction action;
  action.irs.resize(raw.size() / 3);
  for (std::size_t u = 0; u < action.irs.size(); ++u) {
    action.irs[u].dx_m = raw(3 * u) * step_limit;
    action.irs[u].dy_m = raw(3 * u + 1) * step_limit;
    action.irs[u].power_fraction =
        std::clamp(0.5 * (raw(3 * u + 2) + 1.0), 0.0, 1.0);
  }
  return action;
}

void write_metrics_csv(const std::vector<EpisodeMetric>& metrics,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out << "episode,phase,cum_reward,mqi,reached\n";
  char buf[96];
  for (const EpisodeMetric& m : metrics) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.6f,%.6f,%d", m.episode, m.phase,
                  m.cum_reward, m.mqi, m.reached ? 1 : 0);
    out << buf << '\n';
  }
}

namespace {

struct EpisodeRun {
  double cum_reward = 0.0;
  double mqi = 0.0;
  bool reached = false;
};

EpisodeRun run_training_episode(Env& env, Agent& agent,
                                std::uint64_t episode_seed) {
  env.reset(episode_seed);
  const double step_limit =
      env.scenario().v_max * env.scenario().slot_seconds;
  VectorXd state = to_vector(env.observe());
  EpisodeRun run;
  bool done = false;
  while (!done) {
    const VectorXd action = agent.select_action(state);
    const StepOutcome out = env.step(to_env_action(action, step_limit));
    VectorXd next_state = to_vector(env.observe());
    agent.store({state, action, out.reward, next_state, out.done});
    if (agent.ready_to_train()) agent.train_step();
    run.cum_reward += out.reward;
    state = std::move(next_state);
    done = out.done;
  }
  run.mqi = env.episode_mqi();
  run.reached = env.all_arrived();
  return run;
}

}  // namespace

TrainRun train_dtdpg(const Scenario& scenario, const TrainOptions& options,
                     std::uint64_t seed) {
  const LearnerConfig& cfg = scenario.learner;
  const int phase1 = options.phase1_episodes >= 0 ? options.phase1_episodes
                                                  : cfg.phase1_episodes;
  const int phase2 = options.phase2_episodes >= 0 ? options.phase2_episodes
                                                  : cfg.phase2_episodes;

  Env env(scenario);
  env.set_channel_source(options.channel_source);
  Agent agent(env.observation_dim(), env.action_dim(), cfg, seed);
  const auto [clip_lo, clip_hi] = return_bounds(scenario);
  agent.set_target_clip(clip_lo, clip_hi);
  std::vector<EpisodeMetric> metrics;
  metrics.reserve(phase1 + phase2);

  env.set_reward_mode(RewardMode::kPhase1);
  agent.set_phase(1);
  for (int ep = 0; ep < phase1; ++ep) {
    agent.begin_episode(
        ou_schedule(cfg.ou_scale_phase1, cfg.ou_floor, ep, std::max(phase1, 1)));
    const EpisodeRun run =
        run_training_episode(env, agent, derive_seed(seed, ep));
    metrics.push_back({ep, 1, run.cum_reward, run.mqi, run.reached});
  }

  // Transfer: the trained networks carry over as-is; exploration restarts
  // with the phase-2 scale and the replay is emptied since the reward
  // changes meaning.
  agent.clear_replay();
  agent.set_phase(2);
  env.set_reward_mode(RewardMode::kPhase2);
  for (int ep = 0; ep < phase2; ++ep) {
    agent.begin_episode(
        ou_schedule(cfg.ou_scale_phase2, cfg.ou_floor, ep, std::max(phase2, 1)));
    const EpisodeRun run =
        run_training_episode(env, agent, derive_seed(seed, phase1 + ep));
    metrics.push_back({phase1 + ep, 2, run.cum_reward, run.mqi, run.reached});
  }

  return {std::move(agent), std::move(metrics)};
}

TrainRun train_ddpg_baseline(const Scenario& scenario,
                             const TrainOptions& options, std::uint64_t seed) {
  const LearnerConfig& cfg = scenario.learner;
  const int phase1 = options.phase1_episodes >= 0 ? options.phase1_episodes
                                                  : cfg.phase1_episodes;
  const int phase2 = options.phase2_episodes >= 0 ? options.phase2_episodes
                                                  : cfg.phase2_episodes;
  const int total = phase1 + phase2;

  Env env(scenario);
  env.set_channel_source(options.channel_source);
  env.set_reward_mode(RewardMode::kCombined);
  Agent agent(env.observation_dim(), env.action_dim(), cfg, seed);
  const auto [clip_lo, clip_hi] = return_bounds(scenario);
  agent.set_target_clip(clip_lo, clip_hi);
  std::vector<EpisodeMetric> metrics;
  metrics.reserve(total);

  for (int ep = 0; ep < total; ++ep) {
    agent.begin_episode(
        ou_schedule(cfg.ou_scale_phase1, cfg.ou_floor, ep, std::max(total, 1)));
    const EpisodeRun run =
        run_training_episode(env, agent, derive_seed(seed, ep));
    metrics.push_back({ep, 1, run.cum_reward, run.mqi, run.reached});
  }

  return {std::move(agent), std::move(metrics)};
}

std::vector<EvalEpisode> evaluate(Agent& agent, const Scenario& scenario,
                                  int episodes, ChannelSource source,
                                  std::uint64_t seed, bool keep_traces) {
  Env env(scenario);
  env.set_channel_source(source);
  env.set_reward_mode(RewardMode::kPhase2);
  const double step_limit = scenario.v_max * scenario.slot_seconds;

  std::vector<EvalEpisode> results;
  results.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(derive_seed(seed, ep));
    VectorXd state = to_vector(env.observe());
    EvalEpisode result;
    bool done = false;
    int slot = 0;
    while (!done) {
      const VectorXd action = agent.greedy_action(state);
      const StepOutcome out = env.step(to_env_action(action, step_limit));
      if (keep_traces) {
        SlotRecord rec;
        rec.slot = slot;
        const int n = env.num_irs();
        rec.x.resize(n);
        rec.y.resize(n);
        for (int u = 0; u < n; ++u) {
          rec.x[u] = out.state.positions[u].x;
          rec.y[u] = out.state.positions[u].y;
        }
        rec.power_mw = out.power_mw;
        rec.rate_bps = out.rate_bps;
        rec.outage = out.outage;
        rec.arrived = out.state.arrived;
        rec.reward = out.reward;
        result.trace.push_back(std::move(rec));
      }
      result.cum_reward += out.reward;
      state = to_vector(env.observe());
      done = out.done;
      ++slot;
    }
    result.mqi = env.episode_mqi();
    result.reached = env.all_arrived();
    results.push_back(std::move(result));
  }
  return results;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median: empty input");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double reach_rate_last(const std::vector<EpisodeMetric>& metrics, int last_n,
                       int phase) {
  std::vector<const EpisodeMetric*> filtered;
  for (const EpisodeMetric& m : metrics)
    if (phase < 0 || m.phase == phase) filtered.push_back(&m);
  if (filtered.empty()) return 0.0;
  const std::size_t begin =
      filtered.size() > static_cast<std::size_t>(last_n)
          ? filtered.size() - static_cast<std::size_t>(last_n)
          : 0;
  int reached = 0;
  for (std::size_t i = begin; i < filtered.size(); ++i)
    if (filtered[i]->reached) ++reached;
  return static_cast<double>(reached) /
         static_cast<double>(filtered.size() - begin);
}

std::vector<double> mqi_last(const std::vector<EpisodeMetric>& metrics,
                             int last_n, int phase) {
  std::vector<double> values;
  for (const EpisodeMetric& m : metrics)
    if (phase < 0 || m.phase == phase) values.push_back(m.mqi);
  if (values.size() > static_cast<std::size_t>(last_n))
    values.erase(values.begin(), values.end() - last_n);
  return values;
}

}  // namespace irsim
