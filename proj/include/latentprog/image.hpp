#pragma once

#include <filesystem>
#include <vector>

namespace lp {

// Single-channel image, row-major, intensities nominally in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int h, int w, double fill = 0.0) : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {}

    double& at(int y, int x) { return pixels[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const noexcept { return pixels.size(); }

    bool operator==(const Image&) const = default;
};

void clamp_unit(Image& img);

// Binary PGM (P5). maxval 255 writes one byte per pixel, up to 65535 two bytes
// big-endian as the format prescribes.
void write_pgm(const std::filesystem::path& path, const Image& img, int maxval = 65535);
Image read_pgm(const std::filesystem::path& path);

} // namespace lp
