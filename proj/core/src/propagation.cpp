#include "irsim/propagation.hpp"

#include <cmath>
#include <stdexcept>

namespace irsim {

double basic_loss_db(const PropagationParams& params) {
  if (params.freq_mhz <= 0.0)
    throw std::invalid_argument("basic_loss_db: frequency must be positive");
  return 20.0 * std::log10(params.freq_mhz) - 28.0;
}

double nlos_loss_db(double distance_m, int n_obstacles,
                    const PropagationParams& params) {
  if (distance_m <= 0.0)
    throw std::invalid_argument("nlos_loss_db: distance must be positive");
  if (n_obstacles < 1)
    throw std::invalid_argument(
        "nlos_loss_db: requires n >= 1; use los_loss_db for clear paths");
  const double d = std::max(distance_m, kMinLossDistanceM);
  const double penetration =
      params.floor_loss_base + params.floor_loss_step * (n_obstacles - 1);
  return basic_loss_db(params) + params.dist_power_coeff * std::log10(d) +
         penetration;
}

double los_loss_db(double distance_m, const PropagationParams& params) {
  if (distance_m <= 0.0)
    throw std::invalid_argument("los_loss_db: distance must be positive");
  if (params.freq_mhz <= 0.0)
    throw std::invalid_argument("los_loss_db: frequency must be positive");
  const double d = std::max(distance_m, kMinLossDistanceM);
  return 16.9 * std::log10(d) - 27.2 + 20.0 * std::log10(params.freq_mhz);
}

double sample_fading(const FadingModel& model, RngStream& rng) {
  if (model.mode == FadingMode::kExpected) return 1.0;
  return rng.exponential(1.0);
}

double received_power_dbm(double tx_power_dbm, double loss_db,
                          double fading_power_gain) {
  if (fading_power_gain <= 0.0)
    throw std::invalid_argument(
        "received_power_dbm: fading power gain must be positive");
  return tx_power_dbm - loss_db + 10.0 * std::log10(fading_power_gain);
}

}  // namespace irsim
