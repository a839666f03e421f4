#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "sketchparse/numcore/tensor.hpp"

namespace sketchparse::imaging {

/// Thrown for unreadable or malformed image files.
class ImageIoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 8-bit single-channel grid. The tag keeps ink rasters and part-label maps
/// from being mixed up.
template <typename Tag>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t width, std::size_t height, std::uint8_t fill = 0)
      : width_(width), height_(height), pixels_(width * height, fill) {}
  Grid(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != width_ * height_) {
      throw ContractViolation("grid " + std::to_string(width_) + "x" + std::to_string(height_) +
                              " given " + std::to_string(pixels_.size()) + " pixels");
    }
  }

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t& at(std::size_t x, std::size_t y) { return pixels_[y * width_ + x]; }
  std::uint8_t at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  std::uint8_t& operator[](std::size_t i) { return pixels_[i]; }
  std::uint8_t operator[](std::size_t i) const { return pixels_[i]; }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  bool same_size(const auto& other) const {
    return width_ == other.width() && height_ == other.height();
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

struct RasterTag {};
struct LabelTag {};

/// Grayscale image. For sketches 0 is blank and 255 is ink.
using Raster = Grid<RasterTag>;
/// Per-pixel part id, 0 = background.
using LabelMap = Grid<LabelTag>;

inline constexpr std::uint8_t kInk = 255;

/// Binary PGM ("P5", maxval 255).
template <typename Tag>
Grid<Tag> read_pgm(const std::filesystem::path& path);
template <typename Tag>
void write_pgm(const Grid<Tag>& image, const std::filesystem::path& path);

inline Raster read_raster(const std::filesystem::path& p) { return read_pgm<RasterTag>(p); }
inline LabelMap read_labels(const std::filesystem::path& p) { return read_pgm<LabelTag>(p); }

std::string encode_pgm(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& px);

/// Number of nonzero pixels.
template <typename Tag>
std::size_t count_nonzero(const Grid<Tag>& g) {
  std::size_t n = 0;
  for (auto v : g.pixels()) n += v != 0;
  return n;
}

}  // namespace sketchparse::imaging
