#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace spatialqa {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, row-major, origin top-left.
class Raster {
public:
    Raster(int width, int height, Rgb background = {255, 255, 255});

    int width() const { return width_; }
    int height() const { return height_; }
    std::span<const std::uint8_t> pixels() const { return pixels_; }

    Rgb at(int x, int y) const;
    void set(int x, int y, Rgb color);

    void fill_rect(int x0, int y0, int x1, int y1, Rgb color);
    void stroke_rect(int x0, int y0, int x1, int y1, Rgb color);
    void fill_circle(double cx, double cy, double r, Rgb color);
    /// Convex or simple polygon, even-odd scanline fill at pixel centers.
    void fill_polygon(std::span<const std::array<double, 2>> pts, Rgb color);
    void draw_line(double x0, double y0, double x1, double y1, Rgb color);
    /// 5x7 bitmap glyphs scaled by `scale`; unsupported characters render blank.
    void draw_text(int x, int y, std::string_view text, Rgb color, int scale = 1);

    /// Lossless PNG encoding.
    std::string encode_png() const;
    void write_png(const std::filesystem::path& path) const;

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

/// Fixed, visually distinct palette; index 0 is reserved for background/empty.
Rgb palette_color(int index);

}  // namespace spatialqa
