#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace styleval {

// 8-bit RGB raster, row-major interleaved. PNG and JPEG inputs are both
// decoded to this representation.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // size = width * height * 3

  bool empty() const { return width == 0 || height == 0; }

  const std::uint8_t* at(int y, int x) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  std::uint8_t* at(int y, int x) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  // Content address over dimensions and pixel bytes; embedding cache key.
  std::string content_hash() const;
};

// Dispatches on magic bytes; throws Error(decode_error) for anything that
// is not a decodable PNG or JPEG, Error(io_error) if unreadable.
Image load_image(const std::filesystem::path& path);

void save_png(const Image& img, const std::filesystem::path& path);
void save_jpeg(const Image& img, const std::filesystem::path& path,
               int quality = 92);

}  // namespace styleval
