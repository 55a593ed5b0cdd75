#include "irsim/layout.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace irsim {

InteriorLayout build_layout(const GridSpec& grid,
                            const std::vector<ObstacleCell>& obstacles) {
  if (grid.cell_size <= 0.0)
    throw std::invalid_argument("build_layout: cell_size must be positive");
  if (grid.n_x < 1 || grid.n_y < 1)
    throw std::invalid_argument("build_layout: grid must have at least one cell");

  InteriorLayout layout;
  layout.grid = grid;
  layout.z_bottom = Grid2d<double>(grid.n_x, grid.n_y, 0.0);
  layout.z_top = Grid2d<double>(grid.n_x, grid.n_y, 0.0);

  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const ObstacleCell& ob = obstacles[i];
    if (!grid.in_range(ob.cell_x, ob.cell_y))
      throw std::invalid_argument(
          "build_layout: obstacle " + std::to_string(i) + " cell (" +
          std::to_string(ob.cell_x) + "," + std::to_string(ob.cell_y) +
          ") outside grid " + std::to_string(grid.n_x) + "x" +
          std::to_string(grid.n_y));
    if (ob.z_bot > ob.z_top)
      throw std::invalid_argument(
          "build_layout: obstacle " + std::to_string(i) +
          " has z_bot > z_top (" + std::to_string(ob.z_bot) + " > " +
          std::to_string(ob.z_top) + ")");
    layout.z_bottom.at(ob.cell_x, ob.cell_y) = ob.z_bot;
    layout.z_top.at(ob.cell_x, ob.cell_y) = ob.z_top;
  }

  for (int iy = 0; iy < grid.n_y; ++iy)
    for (int ix = 0; ix < grid.n_x; ++ix)
      if (!layout.cell_empty(ix, iy))
        layout.occupied.push_back({ix, iy, layout.z_bottom.at(ix, iy),
                                   layout.z_top.at(ix, iy)});

  return layout;
}

bool cell_blocked(const InteriorLayout& layout, int cell_x, int cell_y,
                  double robot_height) {
  if (!layout.grid.in_range(cell_x, cell_y))
    throw std::out_of_range("cell_blocked: cell index out of range");
  if (robot_height <= 0.0)
    throw std::invalid_argument("cell_blocked: robot_height must be positive");
  const double bot = layout.z_bottom.at(cell_x, cell_y);
  const double top = layout.z_top.at(cell_x, cell_y);
  return top > bot && bot < robot_height && top > 0.0;
}

bool segment_intersects_cuboid(const Point3& a, const Point3& b,
                               const Point3& box_min, const Point3& box_max) {
  const double origin[3] = {a.x, a.y, a.z};
  const double dir[3] = {b.x - a.x, b.y - a.y, b.z - a.z};
  const double lo[3] = {box_min.x, box_min.y, box_min.z};
  const double hi[3] = {box_max.x, box_max.y, box_max.z};

  double t_enter = 0.0;
  double t_exit = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (dir[axis] == 0.0) {
      // Degenerate slab: the segment runs parallel to these faces.
      if (origin[axis] < lo[axis] || origin[axis] > hi[axis]) return false;
      continue;
    }
    double t_near = (lo[axis] - origin[axis]) / dir[axis];
    double t_far = (hi[axis] - origin[axis]) / dir[axis];
    if (t_near > t_far) std::swap(t_near, t_far);
    t_enter = std::max(t_enter, t_near);
    t_exit = std::min(t_exit, t_far);
    if (t_enter > t_exit) return false;
  }
  return true;
}

OcclusionReport count_occlusions(const InteriorLayout& layout,
                                 const Point3& tx, const Point3& rx) {
  if (tx.x == rx.x && tx.y == rx.y && tx.z == rx.z)
    throw std::invalid_argument("count_occlusions: tx and rx coincide");

  const GridSpec& g = layout.grid;
  int n = 0;
  for (const ObstacleCell& ob : layout.occupied) {
    const Point3 lo{g.origin_x + ob.cell_x * g.cell_size,
                    g.origin_y + ob.cell_y * g.cell_size, ob.z_bot};
    const Point3 hi{lo.x + g.cell_size, lo.y + g.cell_size, ob.z_top};
    if (segment_intersects_cuboid(tx, rx, lo, hi)) ++n;
  }
  return {n, n == 0};
}

}  // namespace irsim
