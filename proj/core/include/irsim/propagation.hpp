#pragma once

#include "irsim/rng.hpp"

namespace irsim {

// Indoor path loss parameters. Defaults are the 2 GHz office values:
// distance power coefficient 25.5 and per-obstacle penetration loss
// 15 + 4(n-1) dB. The 5 GHz set (31, 16 + 0(n-1)) is selectable by field.
struct PropagationParams {
  double freq_mhz = 2000.0;
  double dist_power_coeff = 25.5;
  double floor_loss_base = 15.0;
  double floor_loss_step = 4.0;

  static PropagationParams office_2ghz() { return {}; }
  static PropagationParams office_5ghz() { return {5200.0, 31.0, 16.0, 0.0}; }
};

enum class FadingMode { kExpected, kSampled };

// Rayleigh small-scale fading: amplitude Rayleigh, power gain unit-mean
// exponential. Expected mode returns the mean power gain (1.0) so maps
// encode pure path loss.
struct FadingModel {
  FadingMode mode = FadingMode::kExpected;
};

// Losses below clamp the distance to 1 m; the models are far-field.
inline constexpr double kMinLossDistanceM = 1.0;

// 20*log10(f) - 28, f in MHz.
double basic_loss_db(const PropagationParams& params);

// Obstructed path: L0 + N*log10(d) + floor_loss_base + floor_loss_step*(n-1).
// Requires n >= 1; callers with n == 0 must use los_loss_db.
double nlos_loss_db(double distance_m, int n_obstacles,
                    const PropagationParams& params);

// Unobstructed path: 16.9*log10(d) - 27.2 + 20*log10(f).
double los_loss_db(double distance_m, const PropagationParams& params);

// Path loss picked by obstacle count.
inline double path_loss_db(double distance_m, int n_obstacles,
                           const PropagationParams& params) {
  return n_obstacles == 0 ? los_loss_db(distance_m, params)
                          : nlos_loss_db(distance_m, n_obstacles, params);
}

// Power gain draw: 1.0 in expected mode, unit-mean exponential otherwise.
double sample_fading(const FadingModel& model, RngStream& rng);

// tx - loss + 10*log10(fading power gain).
double received_power_dbm(double tx_power_dbm, double loss_db,
                          double fading_power_gain);

}  // namespace irsim
