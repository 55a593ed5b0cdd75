#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "irsim/noma.hpp"
#include "irsim/rng.hpp"
#include "irsim/scenario.hpp"

namespace irsim {

// Step rewards (time cost, per-IR arrival bonus, all-arrived bonus).
inline constexpr double kRewardStepCost = -1.0;
inline constexpr double kRewardArrival = 10.0;
inline constexpr double kRewardSuccess = 200.0;

enum class RewardMode {
  kPhase1,    // destination training: inducing reward 1 - d/d_max
  kPhase2,    // QoS training: -lambda per outage slot
  kCombined,  // single-phase baseline: inducing + QoS together
};

enum class ChannelSource { kRadioMap, kSampled };

struct EnvState {
  std::vector<Point3> positions;  // z = 0
  std::vector<bool> arrived;
  std::vector<double> gain_dbm;  // serving AP received power per IR
  int elapsed = 0;
  std::vector<int> outage_slots;
  std::vector<int> mission_slots;  // slots to arrival; t_total if never
};

struct EnvAction {
  struct IrAction {
    double dx_m = 0.0;  // requested displacement, meters per slot
    double dy_m = 0.0;
    double power_fraction = 0.0;  // raw share in [0, 1]
  };
  std::vector<IrAction> irs;
};

struct StepOutcome {
  double reward = 0.0;
  EnvState state;
  bool done = false;
  std::vector<double> rate_bps;
  std::vector<bool> outage;
  std::vector<bool> new_arrival;
  std::vector<double> power_mw;
};

// Destination-training step reward over the IRs still on mission: each
// contributes step cost plus an inducing term 1 - d/d_max, plus arrival
// and success bonuses.
double reward_phase1(const std::vector<double>& distances_m, double d_max_m,
                     int new_arrivals, bool all_arrived);

// QoS-training step reward: step cost plus -lambda per IR in outage this
// slot, plus the same bonuses.
double reward_phase2(const std::vector<bool>& outage_flags, int new_arrivals,
                     bool all_arrived, double lambda);

// Episodic environment for one scenario. Radio maps for every AP are
// built once at construction; per-slot gains come either from those maps
// or from live occlusion-counted draws with sampled fading.
class Env {
 public:
  explicit Env(const Scenario& scenario);

  EnvState reset(std::uint64_t seed);
  StepOutcome step(const EnvAction& action);

  void set_reward_mode(RewardMode mode) { reward_mode_ = mode; }
  void set_channel_source(ChannelSource source) { channel_source_ = source; }
  RewardMode reward_mode() const { return reward_mode_; }
  ChannelSource channel_source() const { return channel_source_; }

  // Positions scaled to [0,1] by room extent, gains via (dBm + 100) / 70,
  // in ir_id order; length 3 * num_irs.
  std::vector<double> observe() const;

  const EnvState& state() const { return state_; }
  const Scenario& scenario() const { return scenario_; }
  int num_irs() const { return scenario_.num_irs(); }
  int observation_dim() const { return 3 * num_irs(); }
  int action_dim() const { return 3 * num_irs(); }
  bool all_arrived() const;

  // Eq.-style episode score from the accumulated counters; meaningful
  // once the episode is done.
  double episode_mqi() const;

  const PowerMap& serving_map() const { return serving_map_; }
  const std::vector<PowerMap>& interferer_maps() const {
    return interferer_maps_;
  }

 private:
  struct LinkInputs {
    std::vector<IrLinkState> states;
    std::vector<double> serving_dbm;
  };
  LinkInputs compute_link_inputs();

  Scenario scenario_;
  PowerMap serving_map_;
  std::vector<PowerMap> interferer_maps_;
  double noise_mw_ = 0.0;

  RewardMode reward_mode_ = RewardMode::kPhase1;
  ChannelSource channel_source_ = ChannelSource::kRadioMap;

  EnvState state_;
  RngStream fading_rng_{0};
};

// One trace row per slot; exported by evaluation runs.
struct SlotRecord {
  int slot = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> power_mw;
  std::vector<double> rate_bps;
  std::vector<bool> outage;
  std::vector<bool> arrived;
  double reward = 0.0;
};

// Columns: slot, then per IR (x, y, power_mw, rate_bps, outage, arrived),
// then reward.
void write_trace_csv(const std::vector<SlotRecord>& trace, int num_irs,
                     const std::string& path);

}  // namespace irsim
