#pragma once

#include "msr/geometry.hpp"
#include "msr/types.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace msr {

/// Grayscale raster, row-major doubles. Pixel (x, y) sits at integer
/// coordinates with x growing rightward and y downward; interpolation treats
/// pixel centers as those integer positions.
struct ImageGrid {
    int width = 0;
    int height = 0;
    std::vector<double> intensities;

    ImageGrid() = default;

    ImageGrid(int w, int h, double fill = 0.0)
        : width(w), height(h),
          intensities(static_cast<size_t>(w) * static_cast<size_t>(h), fill) {
        if (w < 0 || h < 0) {
            throw DimensionMismatchError("image: negative dimensions");
        }
    }

    bool empty() const { return width == 0 || height == 0; }

    double at(int x, int y) const {
        return intensities[static_cast<size_t>(y) * width + x];
    }
    double& at(int x, int y) {
        return intensities[static_cast<size_t>(y) * width + x];
    }

    bool contains(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
};

/// Bilinear sample; coordinates outside the grid read as zero.
double sample_bilinear_zero(const ImageGrid& img, double x, double y);

/// Bilinear sample with edge replication (coordinates clamp to the border).
double sample_bilinear_clamp(const ImageGrid& img, double x, double y);

Eigen::Vector2d image_center(const ImageGrid& img);

/// Shrink factor that brings max(width, height) down to `max_side`;
/// 1.0 when the image is already small enough.
double downscale_factor(int width, int height, int max_side);

/// Downscales so the longer side equals `max_side` (no-op when already
/// within bounds). Aspect ratio is preserved up to rounding.
ImageGrid downscale(const ImageGrid& img, int max_side);

/// Gradient magnitude from central differences; one-sided at the borders.
ImageGrid gradient_magnitude(const ImageGrid& img);

/// Linear rescale onto [0, 1] by the maximum magnitude. A constant-zero
/// image stays all zero.
ImageGrid normalize_max(const ImageGrid& img);

struct RotatedImage {
    ImageGrid image;
    /// Per-pixel fraction of the bilinear footprint that fell inside the
    /// source image; 1 where the sample was fully covered.
    ImageGrid coverage;
};

/// Rotates content counterclockwise-in-math-convention by `angle_deg` about
/// the image center on the (x right, y down) grid; out-of-source pixels are
/// zero. angle 0 is an exact copy.
RotatedImage rotate_about_center(const ImageGrid& img, double angle_deg);

/// Mirrors the image about a line (a 2D hyperplane) in pixel coordinates.
ImageGrid reflect_image(const ImageGrid& img, const Hyperplane& line);

/// 2D rotation matrix for `angle_deg` in the (x right, y down) frame.
Eigen::Matrix2d rotation2(double angle_deg);

/// Intersection of the line with the pixel rectangle [0,w-1]x[0,h-1];
/// nullopt when the line misses the rectangle.
std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_line_to_image(
    const Hyperplane& line, int width, int height);

}  // namespace msr
