#pragma once

#include <string>

#include "vdlab/matrix.hpp"

namespace vdlab {

// Little-endian binary grid: magic "VDGR", u32 n_rows, u32 n_cols,
// f32 frame_rate, then 32-bit floats row-major.
void write_grid(const std::string& path, const Matrix& grid, double frame_rate);

struct GridFile {
  Matrix grid;
  double frame_rate = 0.0;
};

GridFile read_grid(const std::string& path);

// One row per frame, columns comma-separated with 9 significant digits.
void write_grid_csv(const std::string& path, const Matrix& grid);

}  // namespace vdlab
