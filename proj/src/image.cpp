#include "msr/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace msr {

namespace {

// Shared bilinear kernel: returns the four corner weights and indices.
struct Taps {
    int x0, y0;
    double fx, fy;
};

Taps taps_at(double x, double y) {
    const double fx0 = std::floor(x);
    const double fy0 = std::floor(y);
    return {static_cast<int>(fx0), static_cast<int>(fy0), x - fx0, y - fy0};
}

void require_nonempty(const ImageGrid& img, const char* what) {
    if (img.empty()) {
        throw DegenerateInputError(std::string(what) + ": empty image");
    }
}

}  // namespace

double sample_bilinear_zero(const ImageGrid& img, double x, double y) {
    require_nonempty(img, "sample_bilinear_zero");
    const Taps t = taps_at(x, y);
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const int px = t.x0 + dx;
            const int py = t.y0 + dy;
            if (!img.contains(px, py)) continue;
            const double w = (dx ? t.fx : 1.0 - t.fx) * (dy ? t.fy : 1.0 - t.fy);
            acc += w * img.at(px, py);
        }
    }
    return acc;
}

double sample_bilinear_clamp(const ImageGrid& img, double x, double y) {
    require_nonempty(img, "sample_bilinear_clamp");
    const Taps t = taps_at(x, y);
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
            const int px = std::clamp(t.x0 + dx, 0, img.width - 1);
            const int py = std::clamp(t.y0 + dy, 0, img.height - 1);
            const double w = (dx ? t.fx : 1.0 - t.fx) * (dy ? t.fy : 1.0 - t.fy);
            acc += w * img.at(px, py);
        }
    }
    return acc;
}

Eigen::Vector2d image_center(const ImageGrid& img) {
    return {(img.width - 1) / 2.0, (img.height - 1) / 2.0};
}

double downscale_factor(int width, int height, int max_side) {
    if (max_side < 1) {
        throw DegenerateInputError("downscale: max_side must be positive");
    }
    const int longer = std::max(width, height);
    if (longer <= max_side) return 1.0;
    return static_cast<double>(max_side) / static_cast<double>(longer);
}

ImageGrid downscale(const ImageGrid& img, int max_side) {
    require_nonempty(img, "downscale");
    const double s = downscale_factor(img.width, img.height, max_side);
    if (s == 1.0) return img;

    const int nw = std::max(
        1, static_cast<int>(std::lround(img.width * s)));
    const int nh = std::max(
        1, static_cast<int>(std::lround(img.height * s)));
    ImageGrid out(nw, nh);
    // Map output pixel centers back through x_src = (x + 0.5)/s - 0.5 so the
    // image extent is preserved; edge replication avoids darkened borders.
    for (int y = 0; y < nh; ++y) {
        const double sy = (y + 0.5) / s - 0.5;
        for (int x = 0; x < nw; ++x) {
            const double sx = (x + 0.5) / s - 0.5;
            out.at(x, y) = sample_bilinear_clamp(img, sx, sy);
        }
    }
    return out;
}

ImageGrid gradient_magnitude(const ImageGrid& img) {
    require_nonempty(img, "gradient_magnitude");
    ImageGrid out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            double gx = 0.0, gy = 0.0;
            if (img.width > 1) {
                const int xl = std::max(0, x - 1);
                const int xr = std::min(img.width - 1, x + 1);
                gx = (img.at(xr, y) - img.at(xl, y)) / (xr - xl);
            }
            if (img.height > 1) {
                const int yl = std::max(0, y - 1);
                const int yr = std::min(img.height - 1, y + 1);
                gy = (img.at(x, yr) - img.at(x, yl)) / (yr - yl);
            }
            out.at(x, y) = std::hypot(gx, gy);
        }
    }
    return out;
}

ImageGrid normalize_max(const ImageGrid& img) {
    require_nonempty(img, "normalize_max");
    const double peak =
        *std::max_element(img.intensities.begin(), img.intensities.end());
    ImageGrid out = img;
    if (peak > 0.0) {
        for (double& v : out.intensities) v /= peak;
    }
    return out;
}

Eigen::Matrix2d rotation2(double angle_deg) {
    const double a = angle_deg * M_PI / 180.0;
    Eigen::Matrix2d r;
    r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    return r;
}

RotatedImage rotate_about_center(const ImageGrid& img, double angle_deg) {
    require_nonempty(img, "rotate_about_center");
    RotatedImage out{ImageGrid(img.width, img.height),
                     ImageGrid(img.width, img.height)};
    // Exact multiples of a full turn copy the input bit for bit.
    if (std::fmod(angle_deg, 360.0) == 0.0) {
        out.image = img;
        out.coverage = ImageGrid(img.width, img.height, 1.0);
        return out;
    }

    const Eigen::Matrix2d inv = rotation2(-angle_deg);
    const Eigen::Vector2d c = image_center(img);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Eigen::Vector2d p =
                inv * (Eigen::Vector2d(x, y) - c) + c;
            out.image.at(x, y) = sample_bilinear_zero(img, p.x(), p.y());
            // Coverage: how much of the bilinear footprint was in bounds.
            const Taps t = taps_at(p.x(), p.y());
            double cov = 0.0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    if (!img.contains(t.x0 + dx, t.y0 + dy)) continue;
                    cov += (dx ? t.fx : 1.0 - t.fx) * (dy ? t.fy : 1.0 - t.fy);
                }
            out.coverage.at(x, y) = cov;
        }
    }
    return out;
}

ImageGrid reflect_image(const ImageGrid& img, const Hyperplane& line) {
    require_nonempty(img, "reflect_image");
    if (line.dimension() != 2) {
        throw DimensionMismatchError("reflect_image: line must be 2D");
    }
    ImageGrid out(img.width, img.height);
    // The mirror is an involution, so pulling back through the reflection
    // itself lands on the source pixel.
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const Vector p = line.reflect((Vector(2) << x, y).finished());
            out.at(x, y) = sample_bilinear_zero(img, p[0], p[1]);
        }
    }
    return out;
}

std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_line_to_image(
    const Hyperplane& line, int width, int height) {
    if (line.dimension() != 2) {
        throw DimensionMismatchError("clip_line_to_image: line must be 2D");
    }
    if (width < 1 || height < 1) {
        throw DegenerateInputError("clip_line_to_image: empty image");
    }
    // Parametric form through the point on the line nearest the rectangle
    // center, clipped Liang-Barsky style against [0,w-1]x[0,h-1].
    const Eigen::Vector2d n(line.normal()[0], line.normal()[1]);
    const Eigen::Vector2d dir(-n.y(), n.x());
    const Eigen::Vector2d mid((width - 1) / 2.0, (height - 1) / 2.0);
    const Vector mid_v = (Vector(2) << mid.x(), mid.y()).finished();
    const Vector p0_v = line.project(mid_v);
    const Eigen::Vector2d p0(p0_v[0], p0_v[1]);

    double t_lo = -std::numeric_limits<double>::infinity();
    double t_hi = std::numeric_limits<double>::infinity();
    const double bounds[2][2] = {{0.0, static_cast<double>(width - 1)},
                                 {0.0, static_cast<double>(height - 1)}};
    for (int axis = 0; axis < 2; ++axis) {
        const double d = dir[axis];
        const double p = p0[axis];
        if (std::abs(d) < 1e-15) {
            if (p < bounds[axis][0] - 1e-9 || p > bounds[axis][1] + 1e-9) {
                return std::nullopt;
            }
            continue;
        }
        double a = (bounds[axis][0] - p) / d;
        double b = (bounds[axis][1] - p) / d;
        if (a > b) std::swap(a, b);
        t_lo = std::max(t_lo, a);
        t_hi = std::min(t_hi, b);
    }
    if (!(t_lo <= t_hi)) return std::nullopt;
    return std::make_pair(Eigen::Vector2d(p0 + t_lo * dir),
                          Eigen::Vector2d(p0 + t_hi * dir));
}

}  // namespace msr
