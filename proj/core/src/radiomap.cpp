#include "irsim/radiomap.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "irsim/units.hpp"

namespace irsim {

namespace {

double distance_3d(const Point3& a, const Point3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

void write_grid_csv(const GridSpec& grid, double rx_height,
                    const Grid2d<double>& values, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_map: cannot open " + path);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "# grid %d %d %.6f %.6f %.6f %.6f", grid.n_x,
                grid.n_y, grid.cell_size, grid.origin_x, grid.origin_y,
                rx_height);
  out << buf << '\n';
  for (int iy = 0; iy < grid.n_y; ++iy) {
    for (int ix = 0; ix < grid.n_x; ++ix) {
      std::snprintf(buf, sizeof(buf), "%.6f", values.at(ix, iy));
      out << buf;
      if (ix + 1 < grid.n_x) out << ',';
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("export_map: write failed for " + path);
}

struct ParsedMap {
  GridSpec grid;
  double rx_height = 0.0;
  Grid2d<double> values;
};

ParsedMap read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_map: cannot open " + path);

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("import_map: " + path + ":1: empty file");

  ParsedMap map;
  {
    std::istringstream hdr(line);
    std::string hash, tag;
    hdr >> hash >> tag >> map.grid.n_x >> map.grid.n_y >>
        map.grid.cell_size >> map.grid.origin_x >> map.grid.origin_y >>
        map.rx_height;
    if (hash != "#" || tag != "grid" || !hdr || map.grid.n_x < 1 ||
        map.grid.n_y < 1 || map.grid.cell_size <= 0.0)
      throw std::runtime_error("import_map: " + path +
                               ":1: malformed grid header");
  }

  map.values = Grid2d<double>(map.grid.n_x, map.grid.n_y, 0.0);
  for (int iy = 0; iy < map.grid.n_y; ++iy) {
    const int line_no = iy + 2;
    if (!std::getline(in, line))
      throw std::runtime_error("import_map: " + path + ":" +
                               std::to_string(line_no) + ": missing data row");
    std::istringstream row(line);
    std::string field;
    for (int ix = 0; ix < map.grid.n_x; ++ix) {
      if (!std::getline(row, field, ','))
        throw std::runtime_error("import_map: " + path + ":" +
                                 std::to_string(line_no) +
                                 ": too few columns");
      try {
        map.values.at(ix, iy) = std::stod(field);
      } catch (const std::exception&) {
        throw std::runtime_error("import_map: " + path + ":" +
                                 std::to_string(line_no) +
                                 ": bad numeric field '" + field + "'");
      }
    }
    if (std::getline(row, field, ','))
      throw std::runtime_error("import_map: " + path + ":" +
                               std::to_string(line_no) + ": too many columns");
  }
  return map;
}

}  // namespace

PowerMap build_power_map(const InteriorLayout& layout, const ApConfig& ap,
                         double rx_height, Grid2d<int>* obstacle_counts) {
  if (!std::isfinite(ap.position.x) || !std::isfinite(ap.position.y) ||
      !std::isfinite(ap.position.z))
    throw std::invalid_argument("build_power_map: AP position must be finite");
  if (rx_height < 0.0)
    throw std::invalid_argument("build_power_map: rx_height must be >= 0");

  const GridSpec& grid = layout.grid;
  PowerMap map;
  map.grid = grid;
  map.rx_height = rx_height;
  map.values = Grid2d<double>(grid.n_x, grid.n_y, 0.0);
  if (obstacle_counts) *obstacle_counts = Grid2d<int>(grid.n_x, grid.n_y, 0);

  for (int iy = 0; iy < grid.n_y; ++iy) {
    for (int ix = 0; ix < grid.n_x; ++ix) {
      const Point3 rx{grid.cell_center_x(ix), grid.cell_center_y(iy),
                      rx_height};
      const double d = std::max(distance_3d(ap.position, rx),
                                kMinLossDistanceM);
      const OcclusionReport occ = count_occlusions(layout, ap.position, rx);
      const double loss = path_loss_db(d, occ.n_obstacles, ap.params);
      map.values.at(ix, iy) = ap.tx_power_dbm - loss;
      if (obstacle_counts) obstacle_counts->at(ix, iy) = occ.n_obstacles;
    }
  }
  return map;
}

SinrMap build_sinr_map(const PowerMap& serving,
                       const std::vector<PowerMap>& interferers,
                       double noise_dbm) {
  for (const PowerMap& pm : interferers)
    if (!(pm.grid == serving.grid))
      throw std::invalid_argument(
          "build_sinr_map: interferer map grid does not match serving grid");

  const GridSpec& grid = serving.grid;
  SinrMap map;
  map.grid = grid;
  map.values = Grid2d<double>(grid.n_x, grid.n_y, 0.0);
  const double noise_mw = dbm_to_mw(noise_dbm);

  for (int iy = 0; iy < grid.n_y; ++iy) {
    for (int ix = 0; ix < grid.n_x; ++ix) {
      if (interferers.empty()) {
        // Interference-free ratio collapses to a dB subtraction; doing it
        // in the dB domain keeps SINR == SNR exact.
        map.values.at(ix, iy) = serving.values.at(ix, iy) - noise_dbm;
        continue;
      }
      double denom_mw = noise_mw;
      for (const PowerMap& pm : interferers)
        denom_mw += dbm_to_mw(pm.values.at(ix, iy));
      const double sinr = dbm_to_mw(serving.values.at(ix, iy)) / denom_mw;
      map.values.at(ix, iy) = linear_to_db(sinr);
    }
  }
  return map;
}

void export_map(const PowerMap& map, const std::string& path) {
  write_grid_csv(map.grid, map.rx_height, map.values, path);
}

void export_map(const SinrMap& map, const std::string& path) {
  write_grid_csv(map.grid, 0.0, map.values, path);
}

PowerMap import_power_map(const std::string& path) {
  ParsedMap parsed = read_grid_csv(path);
  return {parsed.grid, parsed.rx_height, std::move(parsed.values)};
}

SinrMap import_sinr_map(const std::string& path) {
  ParsedMap parsed = read_grid_csv(path);
  return {parsed.grid, std::move(parsed.values)};
}

double noise_power_dbm(double noise_density_dbm_hz, double bandwidth_hz) {
  if (bandwidth_hz <= 0.0)
    throw std::invalid_argument("noise_power_dbm: bandwidth must be positive");
  return noise_density_dbm_hz + 10.0 * std::log10(bandwidth_hz);
}

}  // namespace irsim
