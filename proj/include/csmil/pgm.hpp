#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace csmil {

// 8-bit grayscale image, row-major.
struct GrayImage {
    size_t width = 0;
    size_t height = 0;
    std::vector<uint8_t> pixels;

    uint8_t at(size_t y, size_t x) const { return pixels[y * width + x]; }
    uint8_t& at(size_t y, size_t x) { return pixels[y * width + x]; }
};

// Binary PGM ("P5", maxval 255).
void write_pgm(const std::string& path, const GrayImage& img);
GrayImage read_pgm(const std::string& path);

} // namespace csmil
