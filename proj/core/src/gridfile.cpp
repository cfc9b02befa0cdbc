#include "vdlab/gridfile.hpp"

#include <cstring>
#include <fstream>

#include "vdlab/errors.hpp"
#include "vdlab/util.hpp"

namespace vdlab {

namespace {

const char kMagic[4] = {'V', 'D', 'G', 'R'};

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
  std::uint32_t u;
  std::memcpy(&u, &f, 4);
  put_u32(out, u);
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
  const std::uint32_t u = get_u32(p);
  float f;
  std::memcpy(&f, &u, 4);
  return f;
}

}  // namespace

void write_grid(const std::string& path, const Matrix& grid, double frame_rate) {
  std::string out;
  out.reserve(16 + grid.data().size() * 4);
  out.append(kMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(grid.rows()));
  put_u32(out, static_cast<std::uint32_t>(grid.cols()));
  put_f32(out, static_cast<float>(frame_rate));
  for (double v : grid.data()) put_f32(out, static_cast<float>(v));
  write_text_file(path, out);
}

GridFile read_grid(const std::string& path) {
  const std::string text = read_text_file(path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(text.data());
  if (text.size() < 16 || std::memcmp(bytes, kMagic, 4) != 0) {
    throw ParseError("not a grid file: " + path);
  }
  const std::uint32_t rows = get_u32(bytes + 4);
  const std::uint32_t cols = get_u32(bytes + 8);
  GridFile out;
  out.frame_rate = get_f32(bytes + 12);
  const std::size_t expected = 16 + static_cast<std::size_t>(rows) * cols * 4;
  if (text.size() != expected) {
    throw ParseError(strfmt("grid file size mismatch (%zu vs %zu): %s", text.size(), expected,
                            path.c_str()));
  }
  out.grid = Matrix(rows, cols);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i) {
    out.grid.data()[i] = get_f32(bytes + 16 + i * 4);
  }
  return out;
}

void write_grid_csv(const std::string& path, const Matrix& grid) {
  std::string out;
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      if (c > 0) out.push_back(',');
      out += strfmt("%.9g", grid(r, c));
    }
    out.push_back('\n');
  }
  write_text_file(path, out);
}

}  // namespace vdlab
