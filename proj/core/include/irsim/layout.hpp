#pragma once

#include <vector>

#include "irsim/grid.hpp"

namespace irsim {

// One cuboid obstacle occupying a whole grid cell footprint between two
// heights. z_bot == z_top == 0 marks an empty cell.
struct ObstacleCell {
  int cell_x = 0;
  int cell_y = 0;
  double z_bot = 0.0;
  double z_top = 0.0;
};

// Brick-model interior: the grid plus bottom/top height matrices. Obstacle
// footprints are whole cells; hanging objects (z_bottom > 0) are allowed.
struct InteriorLayout {
  GridSpec grid;
  Grid2d<double> z_bottom;
  Grid2d<double> z_top;

  // Cached list of nonempty cells; occlusion counting traverses this.
  std::vector<ObstacleCell> occupied;

  bool cell_empty(int ix, int iy) const {
    return z_bottom.at(ix, iy) == 0.0 && z_top.at(ix, iy) == 0.0;
  }
};

struct OcclusionReport {
  int n_obstacles = 0;
  bool is_los = true;
};

// Fills the listed cells; later entries for the same cell overwrite
// earlier ones. Throws std::invalid_argument naming the offending entry
// on out-of-range indices or z_bot > z_top.
InteriorLayout build_layout(const GridSpec& grid,
                            const std::vector<ObstacleCell>& obstacles);

// True iff the cell's cuboid overlaps the vertical interval (0, robot_height).
bool cell_blocked(const InteriorLayout& layout, int cell_x, int cell_y,
                  double robot_height);

// Slab-method segment/AABB test on the closed segment a-b and closed box.
// Boundary contact counts as intersection; a zero-length segment reduces
// to point-in-box.
bool segment_intersects_cuboid(const Point3& a, const Point3& b,
                               const Point3& box_min, const Point3& box_max);

// Number of distinct nonempty cells whose cuboid intersects the segment
// tx-rx. Endpoint cells count like any other.
OcclusionReport count_occlusions(const InteriorLayout& layout,
                                 const Point3& tx, const Point3& rx);

}  // namespace irsim
