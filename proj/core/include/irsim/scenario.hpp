#pragma once

#include <string>
#include <vector>

#include "irsim/layout.hpp"
#include "irsim/radiomap.hpp"

namespace irsim {

enum class MaMode { kNoma, kOma };

struct IrEndpoints {
  Point3 start;        // z = 0, floor position
  Point3 destination;  // z = 0
};

// Training hyperparameters; scenario files may override any field.
// The critic regresses on rewards multiplied by reward_scale, a positive
// constant that leaves the induced policy ordering unchanged but keeps
// value magnitudes well conditioned next to the large success bonus.
struct LearnerConfig {
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  double discount = 0.95;
  double reward_scale = 0.01;
  double tau = 0.002;
  int batch_size = 64;
  int buffer_capacity = 50000;
  int phase1_episodes = 300;
  int phase2_episodes = 200;
  int hidden1 = 64;
  int hidden2 = 128;
  double ou_scale_phase1 = 0.5;
  double ou_scale_phase2 = 0.4;
  double ou_floor = 0.05;
  double ou_theta = 0.15;
};

// Full experiment description: room, transmitters, missions, link budget.
struct Scenario {
  std::string name;
  InteriorLayout layout;
  std::vector<ApConfig> aps;  // exactly one serving
  std::vector<IrEndpoints> irs;

  double bandwidth_hz = 15000.0;
  double demand_bps = 60000.0;
  double noise_density_dbm_hz = -100.0;
  double cluster_power_budget_dbm = 20.0;
  double v_max = 1.0;
  double lambda = 1.0;
  int t_total = 1000;
  MaMode ma_mode = MaMode::kNoma;
  double arrival_radius = 0.5;
  double ir_antenna_height = 1.5;
  double slot_seconds = 1.0;

  LearnerConfig learner;

  int num_irs() const { return static_cast<int>(irs.size()); }
  const ApConfig& serving_ap() const;
  std::vector<ApConfig> interferer_aps() const;
  double noise_power_mw() const;
  double budget_mw() const;
  double room_diagonal() const;
};

// Parses a scenario JSON file and validates every load-time invariant:
// exactly one serving AP, in-bounds unblocked starts/destinations, and a
// grid flood-fill path from each start to its destination.
Scenario load_scenario(const std::string& path);

// Same checks for an in-memory scenario (used by tests and generators).
void validate_scenario(const Scenario& scenario);

std::string to_string(MaMode mode);
MaMode ma_mode_from_string(const std::string& text);

}  // namespace irsim
