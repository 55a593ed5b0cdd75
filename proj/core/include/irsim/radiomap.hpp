#pragma once

#include <string>
#include <vector>

#include "irsim/layout.hpp"
#include "irsim/propagation.hpp"

namespace irsim {

enum class ApRole { kServing, kInterferer };

struct ApConfig {
  std::string id;
  Point3 position;  // antenna position, z is the mount height
  double tx_power_dbm = 20.0;
  PropagationParams params;
  ApRole role = ApRole::kServing;
};

// Received power (dBm) from one transmitter at the center of every cell,
// sampled at a fixed receiver height.
struct PowerMap {
  GridSpec grid;
  double rx_height = 0.0;
  Grid2d<double> values;
};

// Serving power over interference-plus-noise, in dB, per cell.
struct SinrMap {
  GridSpec grid;
  Grid2d<double> values;
};

// Sentinel for cells outside the room when maps wider than the room are
// imported; legal SINR values (including 0 dB) are never confused with it.
inline constexpr double kOutOfRoomSinrDb = -999.0;

// Expected-fading received power per cell: 3D distance from the AP antenna
// to the cell center at rx_height (clamped to 1 m), occlusion-counted path
// loss, zero-dB expected fading. If obstacle_counts is non-null it is
// resized to the grid and filled with the per-cell occlusion count.
PowerMap build_power_map(const InteriorLayout& layout, const ApConfig& ap,
                         double rx_height,
                         Grid2d<int>* obstacle_counts = nullptr);

// Per cell: serving linear power over (sum of interferer linear powers +
// noise). All maps must share one grid.
SinrMap build_sinr_map(const PowerMap& serving,
                       const std::vector<PowerMap>& interferers,
                       double noise_dbm);

// CSV with a `# grid n_x n_y cell_size origin_x origin_y rx_height`
// header line, then n_y rows of n_x comma-separated values, 6 decimals.
void export_map(const PowerMap& map, const std::string& path);
void export_map(const SinrMap& map, const std::string& path);
PowerMap import_power_map(const std::string& path);
SinrMap import_sinr_map(const std::string& path);

// AWGN power for a band: density (dBm/Hz) + 10*log10(bandwidth).
double noise_power_dbm(double noise_density_dbm_hz, double bandwidth_hz);

}  // namespace irsim
