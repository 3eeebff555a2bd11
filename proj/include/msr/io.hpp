#pragma once

#include "msr/evaluation.hpp"
#include "msr/image.hpp"
#include "msr/pairing.hpp"
#include "msr/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace msr {

/// Reads a PNG (any color layout, converted to luminance) or a PGM (plain P2
/// or raw P5). The format is detected from the file signature, not the
/// extension. Intensities are scaled onto [0, 1].
ImageGrid load_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG; intensities are clamped to [0, 1].
void save_png(const ImageGrid& img, const std::filesystem::path& path);

struct Rgb {
    unsigned char r = 0, g = 0, b = 0;
};

/// 8-bit RGB raster for drawing overlays on top of analyzed images.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<unsigned char> pixels;  // row-major, 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h);

    /// Grayscale base layer to draw on.
    static RgbImage from_grayscale(const ImageGrid& img);

    void set(int x, int y, Rgb color);
    bool contains(int x, int y) const {
        return x >= 0 && x < width && y >= 0 && y < height;
    }
};

/// Draws the segment with the given stroke width (clipped to the image).
void draw_segment(RgbImage& img, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b, Rgb color, int thickness = 1);

void save_png(const RgbImage& img, const std::filesystem::path& path);

/// Plain-text point cloud: one point per line, whitespace-separated
/// coordinates, '#' comments, dimension fixed by the first data line.
PointCloud load_point_cloud(const std::filesystem::path& path);
void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path);

/// Same coordinate format with blank lines separating skeletons; an optional
/// `> id` header names the skeleton that follows (defaults to its index).
std::vector<Skeleton> load_skeletons(const std::filesystem::path& path);
void save_skeletons(const std::vector<Skeleton>& skeletons,
                    const std::filesystem::path& path);

/// Orthographic scatter of the cloud viewed along `axis` (points projected
/// onto the two directions completing `axis` to an orthonormal basis),
/// written as a standalone SVG. Works for any dimension >= 2; in 2D the
/// "projection" is the rotation that puts the axis vertical. When `plane` is
/// given and its normal survives the projection, its trace is drawn as a
/// line through the scatter.
void save_svg_projection(const PointCloud& cloud, const Vector& axis,
                         const std::filesystem::path& path,
                         const Hyperplane* plane = nullptr);

/// Deterministic orthonormal completion of a unit vector: the returned
/// columns [axis | u_1 | ... | u_{n-1}] form a right-handed-ish basis built
/// from the coordinate axes least aligned with `axis`.
Matrix complete_basis(const Vector& axis);

/// One detected segment in a results CSV. `rank` is 1-based and orders the
/// detections of an image from most to least confident.
struct DetectionRow {
    std::string image_id;
    int rank = 1;
    Eigen::Vector2d a{0.0, 0.0};
    Eigen::Vector2d b{0.0, 0.0};
    double confidence = 0.0;
};

/// CSV with header `image_id,rank,x1,y1,x2,y2,confidence`, one detection per
/// line. Loading preserves file order; writing emits rows as given.
std::vector<DetectionRow> load_detections(const std::filesystem::path& path);
void save_detections(const std::vector<DetectionRow>& rows,
                     const std::filesystem::path& path);

/// Rank-ordered predictions per image, for the precision/recall metrics.
PredictionSet group_detections(const std::vector<DetectionRow>& rows);

/// CSV with header `image_id,x1,y1,x2,y2` (the format load_ground_truth
/// reads back).
void save_ground_truth(const std::vector<GroundTruthSegment>& rows,
                       const std::filesystem::path& path);

}  // namespace msr
