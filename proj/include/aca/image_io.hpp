#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "aca/errors.hpp"
#include "aca/strategy.hpp"
#include "aca/vec.hpp"

namespace aca {

namespace detail {

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace detail

// Binary PGM (P5), maxval 255. Input is one grayscale plane, row-major.
inline void write_pgm(const std::filesystem::path& path, const Vec& plane, std::size_t height, std::size_t width) {
  if (plane.size() != height * width) throw std::invalid_argument("write_pgm: plane size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open image file for writing: " + path.string());
  out << "P5\n" << width << ' ' << height << "\n255\n";
  for (double v : plane) out.put(static_cast<char>(detail::to_byte(v)));
}

// Binary PPM (P6), maxval 255. Input is channel-planar RGB, converted to the
// interleaved layout PPM expects.
inline void write_ppm(const std::filesystem::path& path, const Vec& planes, std::size_t height, std::size_t width) {
  if (planes.size() != 3 * height * width) throw std::invalid_argument("write_ppm: expected 3 channel planes");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open image file for writing: " + path.string());
  out << "P6\n" << width << ' ' << height << "\n255\n";
  const std::size_t plane = height * width;
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) out.put(static_cast<char>(detail::to_byte(planes[c * plane + i])));
}

// Writes a flattened feature vector as PGM or PPM according to the geometry.
inline void write_image(const std::filesystem::path& path, const Vec& features, const ImageGeometry& geometry) {
  if (!geometry.valid() || features.size() != geometry.flat_size())
    throw std::invalid_argument("write_image: features do not match the image geometry");
  if (geometry.channels == 1)
    write_pgm(path, features, geometry.height, geometry.width);
  else if (geometry.channels == 3)
    write_ppm(path, features, geometry.height, geometry.width);
  else
    throw std::invalid_argument("write_image: only 1 (PGM) or 3 (PPM) channels supported");
}

}  // namespace aca
