#include <benchmark/benchmark.h>

#include "irsim/agent.hpp"
#include "irsim/env.hpp"
#include "irsim/layout.hpp"
#include "irsim/noma.hpp"
#include "irsim/radiomap.hpp"
#include "irsim/rng.hpp"
#include "irsim/scenario.hpp"

namespace {

irsim::Scenario desk() {
  return irsim::load_scenario(std::string(IRSIM_SCENARIO_DIR) + "/desk.json");
}

void OcclusionCount(benchmark::State& state) {
  const irsim::Scenario sc = desk();
  const irsim::Point3 tx = sc.serving_ap().position;
  irsim::RngStream rng(1);
  for (auto _ : state) {
    const irsim::Point3 rx{rng.uniform(0.0, 10.0), rng.uniform(0.0, 6.0), 1.5};
    benchmark::DoNotOptimize(irsim::count_occlusions(sc.layout, tx, rx));
  }
}
BENCHMARK(OcclusionCount);

void PowerMapBuild(benchmark::State& state) {
  const irsim::Scenario sc = desk();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        irsim::build_power_map(sc.layout, sc.serving_ap(), 1.5));
  }
}
BENCHMARK(PowerMapBuild);

void ClusterSinrEval(benchmark::State& state) {
  irsim::RngStream rng(2);
  std::vector<irsim::IrLinkState> states;
  std::vector<double> power;
  for (int i = 0; i < 2; ++i) {
    states.push_back({i, rng.uniform(0.01, 2.0), rng.uniform(0.0, 1.0), 0.5});
    power.push_back(rng.uniform(0.0, 50.0));
  }
  for (auto _ : state) {
    const auto order = irsim::decoding_order(irsim::equivalent_gains(states));
    benchmark::DoNotOptimize(
        irsim::cluster_sinr(order, states, {power}, -1.0));
  }
}
BENCHMARK(ClusterSinrEval);

void EnvStep(benchmark::State& state) {
  irsim::Env env(desk());
  env.reset(1);
  irsim::RngStream rng(3);
  irsim::EnvAction action;
  action.irs.assign(2, {0.1, 0.1, 0.5});
  for (auto _ : state) {
    benchmark::DoNotOptimize(env.step(action));
    if (env.state().elapsed >= env.scenario().t_total) env.reset(1);
  }
}
BENCHMARK(EnvStep);

void ActorForwardBatch64(benchmark::State& state) {
  irsim::nn::Net net(irsim::nn::NetSpec::actor(6, 6, 64, 128));
  irsim::RngStream rng(4);
  net.init_params(rng);
  Eigen::MatrixXd batch(64, 6);
  for (int r = 0; r < 64; ++r)
    for (int c = 0; c < 6; ++c) batch(r, c) = rng.uniform(-1, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        net.forward(batch, irsim::nn::ForwardMode::kTrain, nullptr, false));
  }
}
BENCHMARK(ActorForwardBatch64);

void TrainStep(benchmark::State& state) {
  const irsim::Scenario sc = desk();
  irsim::Env env(sc);
  irsim::Agent agent(env.observation_dim(), env.action_dim(), sc.learner, 5);
  env.reset(1);
  agent.begin_episode(0.5);
  Eigen::VectorXd obs(env.observation_dim());
  auto refresh = [&] {
    const auto values = env.observe();
    for (int i = 0; i < obs.size(); ++i) obs(i) = values[i];
  };
  refresh();
  const double limit = sc.v_max * sc.slot_seconds;
  while (!agent.ready_to_train()) {
    const Eigen::VectorXd action = agent.select_action(obs);
    const auto out = env.step(irsim::to_env_action(action, limit));
    Eigen::VectorXd prev = obs;
    refresh();
    agent.store({prev, action, out.reward, obs, out.done});
    if (out.done) env.reset(2);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(agent.train_step());
  }
}
BENCHMARK(TrainStep);

}  // namespace

BENCHMARK_MAIN();
