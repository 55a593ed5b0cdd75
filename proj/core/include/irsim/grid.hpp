#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace irsim {

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

// Uniform 2D discretization of the room floor. Columns run along x,
// rows along y; cell (ix, iy) covers
// [origin + ix*cell, origin + (ix+1)*cell) on each axis.
struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_size = 1.0;
  int n_x = 1;
  int n_y = 1;

  double extent_x() const { return n_x * cell_size; }
  double extent_y() const { return n_y * cell_size; }
  double max_x() const { return origin_x + extent_x(); }
  double max_y() const { return origin_y + extent_y(); }

  bool in_range(int ix, int iy) const {
    return ix >= 0 && ix < n_x && iy >= 0 && iy < n_y;
  }
  bool contains(double x, double y) const {
    return x >= origin_x && x <= max_x() && y >= origin_y && y <= max_y();
  }

  double cell_center_x(int ix) const { return origin_x + (ix + 0.5) * cell_size; }
  double cell_center_y(int iy) const { return origin_y + (iy + 0.5) * cell_size; }

  // Cell containing a position; points on the far edges map to the last
  // cell so the closed room [min, max] is fully covered.
  int cell_index_x(double x) const {
    int ix = static_cast<int>(std::floor((x - origin_x) / cell_size));
    if (ix < 0) ix = 0;
    if (ix >= n_x) ix = n_x - 1;
    return ix;
  }
  int cell_index_y(double y) const {
    int iy = static_cast<int>(std::floor((y - origin_y) / cell_size));
    if (iy < 0) iy = 0;
    if (iy >= n_y) iy = n_y - 1;
    return iy;
  }

  bool operator==(const GridSpec&) const = default;
};

// Dense per-cell storage with (ix, iy) addressing.
template <typename T>
class Grid2d {
 public:
  Grid2d() = default;
  Grid2d(int n_x, int n_y, T fill = T{})
      : n_x_(n_x), n_y_(n_y), data_(static_cast<std::size_t>(n_x) * n_y, fill) {}

  T& at(int ix, int iy) { return data_[index(ix, iy)]; }
  const T& at(int ix, int iy) const { return data_[index(ix, iy)]; }

  int n_x() const { return n_x_; }
  int n_y() const { return n_y_; }

  const std::vector<T>& raw() const { return data_; }

  bool operator==(const Grid2d&) const = default;

 private:
  std::size_t index(int ix, int iy) const {
    if (ix < 0 || ix >= n_x_ || iy < 0 || iy >= n_y_)
      throw std::out_of_range("Grid2d: cell index out of range");
    return static_cast<std::size_t>(iy) * n_x_ + ix;
  }

  int n_x_ = 0;
  int n_y_ = 0;
  std::vector<T> data_;
};

}  // namespace irsim
