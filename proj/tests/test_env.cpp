#include <doctest.h>

#include <cmath>
#include <vector>

#include "irsim/agent.hpp"
#include "irsim/env.hpp"
#include "irsim/rng.hpp"
#include "irsim/units.hpp"

using namespace irsim;

namespace {

// 10 m x 6 m room at 0.5 m resolution with a short mid-room wall, one
// serving AP and one interferer behind the east wall.
Scenario test_scenario(int num_irs = 2, MaMode mode = MaMode::kNoma) {
  Scenario sc;
  sc.name = "test";
  GridSpec grid{0.0, 0.0, 0.5, 20, 12};
  std::vector<ObstacleCell> obstacles;
  for (int iy = 0; iy <= 4; ++iy) obstacles.push_back({9, iy, 0.0, 2.5});
  sc.layout = build_layout(grid, obstacles);

  ApConfig serving;
  serving.id = "ap";
  serving.position = {5.0, 3.0, 2.0};
  serving.tx_power_dbm = 20.0;
  serving.role = ApRole::kServing;
  sc.aps.push_back(serving);

  ApConfig jammer;
  jammer.id = "ext";
  jammer.position = {14.0, 3.0, 2.0};
  jammer.tx_power_dbm = 20.0;
  jammer.role = ApRole::kInterferer;
  sc.aps.push_back(jammer);

  sc.irs.push_back({{1.25, 1.25, 0.0}, {8.75, 5.25, 0.0}});
  if (num_irs > 1) sc.irs.push_back({{1.25, 4.75, 0.0}, {8.25, 0.75, 0.0}});

  sc.t_total = 60;
  sc.ma_mode = mode;
  sc.learner.batch_size = 8;
  sc.learner.buffer_capacity = 512;
  return sc;
}

EnvAction still_action(int n) {
  EnvAction a;
  a.irs.assign(n, {0.0, 0.0, 0.5});
  return a;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("scenario validation catches broken setups") {
  Scenario sc = test_scenario();
  CHECK_NOTHROW(validate_scenario(sc));

  Scenario no_serving = sc;
  no_serving.aps[0].role = ApRole::kInterferer;
  CHECK_THROWS_WITH_AS(validate_scenario(no_serving),
                       doctest::Contains("serving"), std::runtime_error);

  Scenario outside = sc;
  outside.irs[0].start = {-3.0, 1.0, 0.0};
  CHECK_THROWS_WITH_AS(validate_scenario(outside),
                       doctest::Contains("outside"), std::runtime_error);

  Scenario blocked = sc;
  blocked.irs[0].start = {4.6, 1.2, 0.0};  // inside the wall strip
  CHECK_THROWS_WITH_AS(validate_scenario(blocked), doctest::Contains("blocked"),
                       std::runtime_error);

  // Dead-end: ring of wall around the destination.
  Scenario walled = test_scenario(1);
  std::vector<ObstacleCell> cells;
  for (int iy = 0; iy <= 4; ++iy) cells.push_back({9, iy, 0.0, 2.5});
  for (int ix = 15; ix <= 19; ++ix) cells.push_back({ix, 8, 0.0, 2.5});
  for (int iy = 9; iy <= 11; ++iy) cells.push_back({15, iy, 0.0, 2.5});
  walled.layout = build_layout(walled.layout.grid, cells);
  walled.irs[0].destination = {9.25, 5.25, 0.0};
  CHECK_THROWS_WITH_AS(validate_scenario(walled), doctest::Contains("path"),
                       std::runtime_error);
}

TEST_CASE("reset: determinism and clean counters") {
  Env env(test_scenario());
  const EnvState a = env.reset(7);
  const EnvState b = env.reset(7);
  CHECK(a.positions[0].x == b.positions[0].x);
  CHECK(a.gain_dbm == b.gain_dbm);
  CHECK(a.elapsed == 0);
  for (int u = 0; u < env.num_irs(); ++u) {
    CHECK(a.outage_slots[u] == 0);
    CHECK_FALSE(a.arrived[u]);
  }
}

TEST_CASE("reset gains equal the radio-map cells under expected fading") {
  const Scenario sc = test_scenario();
  Env env(sc);
  env.set_channel_source(ChannelSource::kRadioMap);
  const EnvState state = env.reset(1);
  const GridSpec& grid = sc.layout.grid;
  for (int u = 0; u < env.num_irs(); ++u) {
    const int ix = grid.cell_index_x(sc.irs[u].start.x);
    const int iy = grid.cell_index_y(sc.irs[u].start.y);
    CHECK(state.gain_dbm[u] == env.serving_map().values.at(ix, iy));
  }
}

TEST_CASE("pushing into a wall cancels that axis and still costs a step") {
  Scenario sc = test_scenario(1);
  sc.irs[0].start = {4.25, 1.25, 0.0};  // just west of the wall column
  Env env(sc);
  env.set_reward_mode(RewardMode::kPhase1);
  env.reset(3);

  EnvAction a = still_action(1);
  a.irs[0].dx_m = 0.6;  // into the wall cell at x in [4.5, 5.0)
  const StepOutcome out = env.step(a);
  CHECK(out.state.positions[0].x == 4.25);
  // Step cost applies; inducing term keeps the total in [-1, 0].
  CHECK(out.reward <= 0.0);
  CHECK(out.reward >= -1.0);
}

TEST_CASE("axis sliding: blocked x, free y") {
  Scenario sc = test_scenario(1);
  sc.irs[0].start = {4.25, 1.25, 0.0};
  Env env(sc);
  env.reset(3);
  EnvAction a = still_action(1);
  a.irs[0].dx_m = 0.5;
  a.irs[0].dy_m = 0.5;
  const StepOutcome out = env.step(a);
  CHECK(out.state.positions[0].x == 4.25);
  CHECK(out.state.positions[0].y == doctest::Approx(1.75));
}

TEST_CASE("motion magnitude is clipped to the per-slot limit") {
  Scenario sc = test_scenario(1);
  Env env(sc);
  env.reset(3);
  EnvAction a = still_action(1);
  a.irs[0].dx_m = 30.0;
  a.irs[0].dy_m = 40.0;
  const StepOutcome out = env.step(a);
  const double moved = std::hypot(out.state.positions[0].x - 1.25,
                                  out.state.positions[0].y - 1.25);
  CHECK(moved <= sc.v_max * sc.slot_seconds + 1e-12);
}

TEST_CASE("arrival pays the bonuses and finishes the episode") {
  Scenario sc = test_scenario(1);
  sc.irs[0].start = {8.25, 5.25, 0.0};  // one step from the destination
  Env env(sc);
  env.set_reward_mode(RewardMode::kPhase1);
  env.reset(5);
  EnvAction a = still_action(1);
  a.irs[0].dx_m = 0.5;
  const StepOutcome out = env.step(a);
  CHECK(out.new_arrival[0]);
  CHECK(out.done);
  // Step term is near zero at the destination; bonuses dominate.
  CHECK(out.reward > kRewardArrival + kRewardSuccess - 1.5);
  CHECK(out.state.mission_slots[0] == 1);

  // Arrived IRs stay frozen afterwards.
  EnvAction push = still_action(1);
  push.irs[0].dx_m = -0.9;
  const StepOutcome after = env.step(push);
  CHECK(after.state.positions[0].x == out.state.positions[0].x);
}

TEST_CASE("raw power shares are normalized onto the budget") {
  Scenario sc = test_scenario();
  sc.cluster_power_budget_dbm = 20.0;  // 100 mW
  Env env(sc);
  env.reset(2);
  EnvAction a = still_action(2);
  a.irs[0].power_fraction = 1.0;
  a.irs[1].power_fraction = 1.0;
  const StepOutcome out = env.step(a);
  CHECK(out.power_mw[0] == doctest::Approx(50.0).epsilon(1e-12));
  CHECK(out.power_mw[1] == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("power feasibility holds for any raw action") {
  Scenario sc = test_scenario();
  Env env(sc);
  env.reset(11);
  RngStream rng(13);
  const double budget = sc.budget_mw();
  for (int t = 0; t < 500; ++t) {
    EnvAction a = still_action(2);
    for (auto& ir : a.irs) {
      ir.dx_m = rng.uniform(-1.5, 1.5);
      ir.dy_m = rng.uniform(-1.5, 1.5);
      ir.power_fraction = rng.uniform(-0.5, 1.5);
    }
    const StepOutcome out = env.step(a);
    double total = 0.0;
    for (double p : out.power_mw) total += p;
    CHECK(total <= budget + 1e-12);
    if (out.done) env.reset(rng.next_u64());
  }
}

TEST_CASE("reward_phase1 worked examples") {
  // At the destination, not yet flagged: -1 + 1 = 0, arrival bonus apart.
  CHECK(reward_phase1({0.0}, 10.0, 0, false) == doctest::Approx(0.0));
  CHECK(reward_phase1({0.0}, 10.0, 1, false) == doctest::Approx(10.0));
  // d = d_max zeroes the inducement.
  CHECK(reward_phase1({10.0}, 10.0, 0, false) == doctest::Approx(-1.0));
  // Two IRs at half distance.
  CHECK(reward_phase1({5.0, 5.0}, 10.0, 0, false) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(reward_phase1({-1.0}, 10.0, 0, false),
                  std::invalid_argument);
}

TEST_CASE("reward_phase2 worked examples") {
  CHECK(reward_phase2({true, false}, 0, false, 1.0) == doctest::Approx(-3.0));
  CHECK(reward_phase2({false, false}, 0, false, 1.0) == doctest::Approx(-2.0));
  CHECK(reward_phase2({false}, 1, true, 1.0) ==
        doctest::Approx(-1.0 + 10.0 + 200.0));
  // lambda = 0 ignores outage entirely.
  CHECK(reward_phase2({true, true}, 0, false, 0.0) == doctest::Approx(-2.0));
}

TEST_CASE("observation normalization and layout") {
  Scenario sc = test_scenario(1);
  sc.irs[0].start = {0.0, 0.0, 0.0};
  sc.irs[0].destination = {8.75, 5.25, 0.0};
  Env env(sc);
  env.reset(2);
  std::vector<double> obs = env.observe();
  REQUIRE(obs.size() == 3);
  CHECK(obs[0] == 0.0);
  CHECK(obs[1] == 0.0);
  // Gain normalization: (dBm + 100) / 70.
  CHECK(obs[2] == doctest::Approx((env.state().gain_dbm[0] + 100.0) / 70.0));

  Scenario corner = test_scenario(1);
  corner.irs[0].start = {10.0, 6.0, 0.0};
  corner.irs[0].destination = {8.75, 5.25, 0.0};
  Env env2(corner);
  env2.reset(2);
  obs = env2.observe();
  CHECK(obs[0] == 1.0);
  CHECK(obs[1] == 1.0);

  Env env3(test_scenario(2));
  CHECK(env3.observe().size() == 6);
}

TEST_CASE("fuzz: positions stay in bounds and off blocked cells") {
  Scenario sc = test_scenario();
  Env env(sc);
  env.reset(17);
  RngStream rng(18);
  const GridSpec& grid = sc.layout.grid;
  for (int t = 0; t < 100000; ++t) {
    EnvAction a = still_action(2);
    for (auto& ir : a.irs) {
      ir.dx_m = rng.uniform(-2.0, 2.0);
      ir.dy_m = rng.uniform(-2.0, 2.0);
      ir.power_fraction = rng.uniform(0.0, 1.0);
    }
    const StepOutcome out = env.step(a);
    for (int u = 0; u < 2; ++u) {
      const Point3& p = out.state.positions[u];
      REQUIRE(grid.contains(p.x, p.y));
      REQUIRE_FALSE(cell_blocked(sc.layout, grid.cell_index_x(p.x),
                                 grid.cell_index_y(p.y),
                                 sc.ir_antenna_height));
    }
    if (out.done) env.reset(rng.next_u64());
  }
}

TEST_CASE("episode MQI equals the closed form applied to the trace") {
  Scenario sc = test_scenario();
  Env env(sc);
  env.set_reward_mode(RewardMode::kPhase2);
  RngStream rng(19);
  for (int episode = 0; episode < 5; ++episode) {
    env.reset(100 + episode);
    std::vector<int> outage_count(2, 0);
    std::vector<int> arrival_slot(2, sc.t_total);
    bool done = false;
    int slot = 0;
    while (!done) {
      EnvAction a = still_action(2);
      for (auto& ir : a.irs) {
        ir.dx_m = rng.uniform(-1.0, 1.0);
        ir.dy_m = rng.uniform(-1.0, 1.0);
        ir.power_fraction = rng.uniform(0.0, 1.0);
      }
      const StepOutcome out = env.step(a);
      ++slot;
      for (int u = 0; u < 2; ++u) {
        if (out.new_arrival[u]) arrival_slot[u] = slot;
        if (out.outage[u] && !out.state.arrived[u]) ++outage_count[u];
      }
      done = out.done;
    }
    const double expected =
        sc.t_total -
        ((arrival_slot[0] + sc.lambda * outage_count[0]) +
         (arrival_slot[1] + sc.lambda * outage_count[1]));
    CHECK(env.episode_mqi() == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("phase-2 return is an affine shift of MQI plus bonuses") {
  Scenario sc = test_scenario();
  Env env(sc);
  env.set_reward_mode(RewardMode::kPhase2);
  RngStream rng(23);
  for (int episode = 0; episode < 10; ++episode) {
    env.reset(200 + episode);
    double total_reward = 0.0;
    int arrivals = 0;
    bool success = false;
    bool done = false;
    while (!done) {
      EnvAction a = still_action(2);
      for (auto& ir : a.irs) {
        ir.dx_m = rng.uniform(-1.0, 1.0);
        ir.dy_m = rng.uniform(-1.0, 1.0);
        ir.power_fraction = rng.uniform(0.0, 1.0);
      }
      const StepOutcome out = env.step(a);
      total_reward += out.reward;
      for (bool na : out.new_arrival)
        if (na) ++arrivals;
      done = out.done;
      success = out.done && env.all_arrived();
    }
    const double bonuses =
        kRewardArrival * arrivals + (success ? kRewardSuccess : 0.0);
    // sum(phase-2 rewards) = MQI - T_total + bonuses, exactly.
    CHECK(total_reward == doctest::Approx(env.episode_mqi() - sc.t_total +
                                          bonuses)
                              .epsilon(1e-9));
  }
}

TEST_CASE("deterministic traces for both channel sources") {
  for (ChannelSource source :
       {ChannelSource::kRadioMap, ChannelSource::kSampled}) {
    Scenario sc = test_scenario();
    auto run = [&](std::uint64_t seed) {
      Env env(sc);
      env.set_channel_source(source);
      env.reset(seed);
      RngStream rng(41);
      std::vector<double> record;
      for (int t = 0; t < 40; ++t) {
        EnvAction a = still_action(2);
        for (auto& ir : a.irs) {
          ir.dx_m = rng.uniform(-1.0, 1.0);
          ir.dy_m = rng.uniform(-1.0, 1.0);
          ir.power_fraction = rng.uniform(0.0, 1.0);
        }
        const StepOutcome out = env.step(a);
        for (int u = 0; u < 2; ++u) {
          record.push_back(out.state.positions[u].x);
          record.push_back(out.state.positions[u].y);
          record.push_back(out.rate_bps[u]);
        }
        record.push_back(out.reward);
        if (out.done) break;
      }
      return record;
    };
    CHECK(run(77) == run(77));
  }
}

TEST_CASE("non-finite actions are rejected") {
  Env env(test_scenario());
  env.reset(1);
  EnvAction a = still_action(2);
  a.irs[0].dx_m = std::nan("");
  CHECK_THROWS_AS(env.step(a), std::invalid_argument);
  CHECK_THROWS_AS(env.step(still_action(1)), std::invalid_argument);
}

}  // TEST_SUITE
