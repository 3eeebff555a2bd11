#include "msr/synth.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace msr::synth {

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

SymmetrySegment ordered_segment(Eigen::Vector2d a, Eigen::Vector2d b) {
    if (b.x() < a.x() || (b.x() == a.x() && b.y() < a.y())) {
        std::swap(a, b);
    }
    SymmetrySegment seg;
    seg.a = a;
    seg.b = b;
    return seg;
}

}  // namespace

ImageGrid value_noise_texture(int width, int height, Rng& rng) {
    if (width < 1 || height < 1) {
        throw DimensionMismatchError("value noise: empty image");
    }
    ImageGrid img(width, height, 0.0);
    double cell = std::max(width, height) / 3.0;
    double amplitude = 1.0;
    while (cell >= 2.0) {
        const int gw = static_cast<int>((width - 1) / cell) + 2;
        const int gh = static_cast<int>((height - 1) / cell) + 2;
        std::vector<double> lattice(static_cast<size_t>(gw) * gh);
        for (double& v : lattice) v = rng.uniform(-1.0, 1.0);
        for (int y = 0; y < height; ++y) {
            const double gy = y / cell;
            const int y0 = static_cast<int>(gy);
            const double fy = smoothstep(gy - y0);
            for (int x = 0; x < width; ++x) {
                const double gx = x / cell;
                const int x0 = static_cast<int>(gx);
                const double fx = smoothstep(gx - x0);
                const double* row = &lattice[static_cast<size_t>(y0) * gw + x0];
                const double top = row[0] + fx * (row[1] - row[0]);
                const double bot = row[gw] + fx * (row[gw + 1] - row[gw]);
                img.at(x, y) += amplitude * (top + fy * (bot - top));
            }
        }
        cell /= 2.0;
        amplitude /= 2.0;
    }
    for (double& v : img.intensities) v = v * v * v;
    const auto [lo, hi] = std::minmax_element(img.intensities.begin(),
                                              img.intensities.end());
    const double range = *hi - *lo;
    for (double& v : img.intensities) {
        v = range > 0.0 ? (v - *lo) / range : 0.5;
    }
    return img;
}

MirroredImage mirrored_image(int width, int height, double angle_deg,
                             double offset_px, Rng& rng) {
    const ImageGrid texture = value_noise_texture(width, height, rng);
    const double a = angle_deg * M_PI / 180.0;
    Vector normal(2), anchor(2);
    normal << std::cos(a), std::sin(a);
    const Eigen::Vector2d center = image_center(texture);
    anchor << center.x() + offset_px, center.y();
    Hyperplane axis(std::move(normal), std::move(anchor));

    const auto clip = clip_line_to_image(axis, width, height);
    if (!clip) {
        throw DegenerateInputError("mirrored image: axis misses the image");
    }

    // I = (T + T∘S) / 2 is symmetric wherever it is evaluated, because S
    // swaps the two terms; the clamped bilinear extension keeps T defined at
    // every reflected position.
    const double n0 = axis.normal()(0);
    const double n1 = axis.normal()(1);
    const double d = axis.signed_distance();
    ImageGrid img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const double off = n0 * x + n1 * y - d;
            const double rx = x - 2.0 * off * n0;
            const double ry = y - 2.0 * off * n1;
            img.at(x, y) =
                0.5 * (texture.at(x, y) + sample_bilinear_clamp(texture, rx, ry));
        }
    }
    return {std::move(img), std::move(axis),
            ordered_segment(clip->first, clip->second)};
}

MirroredImage random_mirrored_image(const MirroredImageParams& params,
                                    Rng& rng) {
    double angle = params.tilt_sigma_deg * rng.normal();
    while (std::abs(angle) > params.max_angle_deg) {
        angle = params.tilt_sigma_deg * rng.normal();
    }
    const double offset = rng.uniform(-params.max_offset_frac * params.width,
                                      params.max_offset_frac * params.width);
    return mirrored_image(params.width, params.height, angle, offset, rng);
}

PlantedCloud planted_plane_cloud(int base_points, double noise_frac,
                                 Rng& rng) {
    if (base_points < 4) {
        throw DegenerateInputError(
            "planted cloud: need at least 4 base points");
    }

    // Shape: an ellipsoid with distinct semiaxes, modulated by a smooth
    // low-frequency radial bump field. The bumps must be strong enough to
    // break the ellipsoid's own mirror planes, or those show up as
    // competing near-symmetries of the final cloud.
    Vector axes(3);
    for (int i = 0; i < 3; ++i) axes(i) = rng.uniform(0.6, 1.4);
    constexpr int kBumps = 6;
    Matrix freq(kBumps, 3);
    Vector amp(kBumps), phase(kBumps);
    for (int k = 0; k < kBumps; ++k) {
        for (int j = 0; j < 3; ++j) freq(k, j) = rng.uniform(-3.0, 3.0);
        amp(k) = rng.uniform(0.05, 0.12);
        phase(k) = rng.uniform(0.0, 2.0 * M_PI);
    }

    PointCloud base(base_points, 3);
    for (int i = 0; i < base_points; ++i) {
        const Vector u = rng.unit_vector(3);
        double rho = 1.0;
        for (int k = 0; k < kBumps; ++k) {
            rho += amp(k) * std::cos(freq.row(k).dot(u) + phase(k));
        }
        base.set_point(i, (rho * u).cwiseProduct(axes));
    }

    const Vector normal = rng.unit_vector(3);
    const Vector anchor = rng.uniform(-0.4, 0.4) * normal;
    Hyperplane plane(normal, anchor);

    const PointCloud mirrored = reflect_points(base, plane);
    Matrix all(2 * base.size(), 3);
    all << base.points(), mirrored.points();
    PointCloud cloud(std::move(all));

    if (noise_frac > 0.0) {
        const double sigma = noise_frac * bbox_diagonal(cloud);
        for (Eigen::Index i = 0; i < cloud.size(); ++i) {
            cloud.points().row(i) += (sigma * rng.gaussian_vector(3)).transpose();
        }
    }
    return {std::move(cloud), std::move(plane)};
}

MirroredSkeletons mirrored_skeletons(int pairs, double jitter_frac, Rng& rng) {
    if (pairs < 1) {
        throw DegenerateInputError("mirrored skeletons: need at least 1 pair");
    }
    const Vector normal = rng.unit_vector(3);
    const Hyperplane plane(normal, Vector::Zero(3));

    constexpr int kJoints = 12;
    std::vector<Skeleton> bases;
    bases.reserve(static_cast<size_t>(pairs));
    for (int s = 0; s < pairs; ++s) {
        // Random walk started well off the plane, then smoothed into a curve.
        Matrix joints(kJoints, 3);
        Vector p = plane.normal() * rng.uniform(0.6, 1.2) +
                   0.8 * rng.gaussian_vector(3);
        p = p + plane.normal() * std::max(0.0, 0.4 - plane.offset_of(p));
        for (int j = 0; j < kJoints; ++j) {
            joints.row(j) = p.transpose();
            p += 0.3 * rng.unit_vector(3) + 0.1 * rng.gaussian_vector(3);
        }
        for (int pass = 0; pass < 2; ++pass) {
            Matrix smooth = joints;
            for (int j = 1; j + 1 < kJoints; ++j) {
                smooth.row(j) =
                    (joints.row(j - 1) + joints.row(j) + joints.row(j + 1)) /
                    3.0;
            }
            joints = std::move(smooth);
        }
        bases.push_back({std::move(joints), "s" + std::to_string(s)});
    }

    MirroredSkeletons out(plane);
    out.skeletons = bases;
    for (int s = 0; s < pairs; ++s) {
        Matrix mirrored(kJoints, 3);
        for (int j = 0; j < kJoints; ++j) {
            mirrored.row(j) =
                plane.reflect(bases[static_cast<size_t>(s)].points.row(j)
                                  .transpose())
                    .transpose();
        }
        out.skeletons.push_back({std::move(mirrored),
                                 "s" + std::to_string(s) + "m"});
        out.true_pairs.emplace_back(s, pairs + s);
    }

    if (jitter_frac > 0.0) {
        Matrix pooled(2 * pairs * kJoints, 3);
        for (int s = 0; s < 2 * pairs; ++s) {
            pooled.middleRows(s * kJoints, kJoints) =
                out.skeletons[static_cast<size_t>(s)].points;
        }
        const double sigma =
            jitter_frac * bbox_diagonal(PointCloud(std::move(pooled)));
        for (Skeleton& skel : out.skeletons) {
            for (Eigen::Index j = 0; j < skel.size(); ++j) {
                skel.points.row(j) += (sigma * rng.gaussian_vector(3)).transpose();
            }
        }
    }
    return out;
}

}  // namespace msr::synth
