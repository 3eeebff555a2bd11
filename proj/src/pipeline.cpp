#include "msr/pipeline.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace msr {

namespace {

Vector cloud_centroid(const PointCloud& cloud) {
    return cloud.points().colwise().mean().transpose();
}

/// A cloud determines a symmetry plane only if it has at least dim + 1
/// finite points that span the whole space.
void validate_cloud(const PointCloud& cloud) {
    const Eigen::Index dim = cloud.dimension();
    if (cloud.empty() || dim < 2) {
        throw DegenerateInputError(
            "symmetry detection: need a non-empty cloud in dimension >= 2");
    }
    if (!cloud.points().allFinite()) {
        throw DegenerateInputError(
            "symmetry detection: cloud contains non-finite coordinates");
    }
    if (cloud.size() < dim + 1) {
        throw DegenerateInputError(
            "symmetry detection: need at least dim + 1 points, got " +
            std::to_string(cloud.size()) + " in dimension " +
            std::to_string(dim));
    }
    const Matrix centered =
        cloud.points().rowwise() - cloud.points().colwise().mean();
    const Eigen::JacobiSVD<Matrix> svd(centered);
    const auto& sv = svd.singularValues();
    if (sv(0) <= 0.0 || sv(dim - 1) <= 1e-12 * sv(0)) {
        throw DegenerateInputError(
            "symmetry detection: points do not span the space");
    }
}

/// Covariance principal axes through the centroid. A mirror-symmetric cloud
/// has its plane normal among the covariance eigenvectors, so these starts
/// follow the data pose where fixed canonical axes can sit arbitrarily far
/// from the answer.
std::vector<Hyperplane> principal_planes(const PointCloud& cloud) {
    const Vector centroid = cloud_centroid(cloud);
    const Matrix centered = cloud.points().rowwise() - centroid.transpose();
    const Matrix cov =
        centered.transpose() * centered / static_cast<double>(cloud.size());
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(cov);
    std::vector<Hyperplane> planes;
    planes.reserve(static_cast<size_t>(cloud.dimension()));
    for (Eigen::Index i = 0; i < cloud.dimension(); ++i) {
        planes.emplace_back(solver.eigenvectors().col(i), centroid);
    }
    return planes;
}

/// Canonical planes plus the non-redundant principal planes.
std::vector<Hyperplane> default_starts(const PointCloud& cloud) {
    std::vector<Hyperplane> starts = canonical_planes(cloud);
    for (const Hyperplane& p : principal_planes(cloud)) {
        bool duplicate = false;
        for (const Hyperplane& existing : starts) {
            if (plane_angle_distance(existing, p).angle_rad < 1e-6) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            starts.push_back(p);
        }
    }
    return starts;
}

}  // namespace

std::vector<Hyperplane> canonical_planes(const PointCloud& cloud) {
    if (cloud.empty()) {
        throw DegenerateInputError("canonical planes: empty cloud");
    }
    const Eigen::Index dim = cloud.dimension();
    const Vector centroid = cloud_centroid(cloud);
    std::vector<Hyperplane> planes;
    planes.reserve(static_cast<size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) {
        Vector normal = Vector::Zero(dim);
        normal(i) = 1.0;
        planes.emplace_back(std::move(normal), centroid);
    }
    return planes;
}

SymmetryDetection detect_symmetry_points(const PointCloud& cloud,
                                         const MsrConfig& config) {
    if (config.backend != Backend::Icp) {
        throw Error("point-cloud symmetry detection requires the Icp backend");
    }
    validate_cloud(cloud);
    const Eigen::Index dim = cloud.dimension();

    const std::vector<Hyperplane> starts = config.initial_planes.empty()
                                               ? default_starts(cloud)
                                               : config.initial_planes;
    for (const Hyperplane& p : starts) {
        if (p.dimension() != dim) {
            throw DimensionMismatchError(
                "symmetry detection: initial plane dimension does not match "
                "the cloud");
        }
    }

    struct Candidate {
        Hyperplane plane;
        double confidence;
        int index;
        RegistrationResult registration;
    };
    std::vector<Candidate> candidates;
    std::vector<RunDiagnostic> diagnostics;
    diagnostics.reserve(starts.size());

    const double scale = bbox_diagonal(cloud);
    const int rounds = std::max(1, config.refine_rounds);
    for (int i = 0; i < static_cast<int>(starts.size()); ++i) {
        RunDiagnostic diag;
        diag.initial_plane_index = i;
        try {
            Hyperplane plane = starts[i];
            RegistrationResult reg;
            for (int round = 0; round < rounds; ++round) {
                const PointCloud mirrored = reflect_points(cloud, plane);
                reg = icp_register(mirrored, cloud, config.icp);
                Hyperplane next =
                    symmetry_plane_from_registration(plane, reg.transform);
                const PlaneSeparation step = plane_angle_distance(next, plane);
                plane = std::move(next);
                if (step.angle_rad < 1e-10 && step.offset < 1e-10 * scale) {
                    break;
                }
            }
            diag.succeeded = true;
            diag.registration = reg;
            const double confidence = reg.confidence;
            candidates.push_back(
                {std::move(plane), confidence, i, std::move(reg)});
        } catch (const Error& e) {
            diag.succeeded = false;
            diag.message = e.what();
        }
        diagnostics.push_back(std::move(diag));
    }

    if (candidates.empty()) {
        std::vector<std::string> details;
        details.reserve(diagnostics.size());
        for (const RunDiagnostic& d : diagnostics) {
            details.push_back("initial plane " +
                              std::to_string(d.initial_plane_index) + ": " +
                              d.message);
        }
        throw DetectionError(
            "symmetry detection failed for every initial plane",
            std::move(details));
    }

    std::stable_sort(candidates.begin(), candidates.end(),
                     [](const Candidate& a, const Candidate& b) {
                         if (a.confidence != b.confidence) {
                             return a.confidence > b.confidence;
                         }
                         return a.index < b.index;
                     });

    SymmetryDetection best(candidates.front().plane);
    best.confidence = candidates.front().confidence;
    best.initial_plane_index = candidates.front().index;
    best.registration = candidates.front().registration;
    best.ranked_alternatives.reserve(candidates.size());
    for (const Candidate& c : candidates) {
        best.ranked_alternatives.emplace_back(c.plane, c.confidence);
    }
    best.diagnostics = std::move(diagnostics);
    return best;
}

std::vector<SymmetryDetection> detect_symmetry_2d(const ImageGrid& image,
                                                  const MsrConfig& config) {
    if (config.backend != Backend::Nxc) {
        throw Error("image symmetry detection requires the Nxc backend");
    }
    if (image.empty()) {
        throw DegenerateInputError("image symmetry detection: empty image");
    }

    const Hyperplane line = [&]() -> Hyperplane {
        if (!config.initial_planes.empty()) {
            const Hyperplane& given = config.initial_planes.front();
            if (given.dimension() != 2) {
                throw DimensionMismatchError(
                    "image symmetry detection: initial line must be 2D");
            }
            return given;
        }
        Vector normal(2);
        normal << 1.0, 0.0;
        const Eigen::Vector2d c = image_center(image);
        Vector anchor(2);
        anchor << c.x(), c.y();
        return Hyperplane(std::move(normal), std::move(anchor));
    }();

    const ImageGrid mirrored = reflect_image(image, line);
    const std::vector<RegistrationResult> registrations =
        nxc_register(mirrored, image, config.nxc);
    if (registrations.empty()) {
        throw DetectionError(
            "image symmetry detection: no registration consensus",
            {"no patch reached the correlation threshold"});
    }

    std::vector<SymmetryDetection> detections;
    std::vector<std::pair<Hyperplane, double>> ranked;
    std::vector<std::string> failures;
    for (const RegistrationResult& reg : registrations) {
        try {
            Hyperplane plane =
                symmetry_plane_from_registration(line, reg.transform);
            SymmetryDetection det(plane);
            det.confidence = reg.confidence;
            det.initial_plane_index = 0;
            det.registration = reg;
            RunDiagnostic diag;
            diag.initial_plane_index = 0;
            diag.succeeded = true;
            diag.registration = reg;
            det.diagnostics.push_back(std::move(diag));
            ranked.emplace_back(std::move(plane), reg.confidence);
            detections.push_back(std::move(det));
        } catch (const Error& e) {
            failures.emplace_back(e.what());
        }
    }
    if (detections.empty()) {
        throw DetectionError(
            "image symmetry detection: no consensus transform yields a line",
            std::move(failures));
    }
    for (size_t i = 0; i < detections.size(); ++i) {
        detections[i].ranked_alternatives.assign(
            ranked.begin() + static_cast<std::ptrdiff_t>(i), ranked.end());
    }
    return detections;
}

SymmetrySegment line_to_segment(const Hyperplane& line,
                                const ImageGrid& image) {
    if (line.dimension() != 2) {
        throw DimensionMismatchError("line_to_segment: line must be 2D");
    }
    if (image.empty()) {
        throw DegenerateInputError("line_to_segment: empty image");
    }
    const auto clip = clip_line_to_image(line, image.width, image.height);
    if (!clip) {
        throw Error("line_to_segment: line does not intersect the image");
    }

    const Eigen::Vector2d entry = clip->first;
    const double span = (clip->second - entry).norm();
    constexpr int kHalfWindow = 10;  // 21 x 21 window

    SymmetrySegment segment;
    if (span < 1e-12) {
        segment.a = entry;
        segment.b = entry;
        return segment;
    }
    const Eigen::Vector2d dir = (clip->second - entry) / span;

    // Walk the clipped line in 1 px steps (plus the far endpoint when the
    // span is fractional) and score how much mirrored gradient support each
    // step has: the weaker of the two per-side mean gradient magnitudes in a
    // window around the step.
    std::vector<double> params;
    const int whole = static_cast<int>(std::floor(span));
    params.reserve(static_cast<size_t>(whole) + 2);
    for (int s = 0; s <= whole; ++s) {
        params.push_back(static_cast<double>(s));
    }
    if (span - static_cast<double>(whole) > 1e-9) {
        params.push_back(span);
    }

    const ImageGrid grad = gradient_magnitude(image);
    const double n0 = line.normal()(0);
    const double n1 = line.normal()(1);
    const double d = line.signed_distance();

    std::vector<double> scores;
    scores.reserve(params.size());
    for (const double t : params) {
        const Eigen::Vector2d c = entry + t * dir;
        const int cx = static_cast<int>(std::lround(c.x()));
        const int cy = static_cast<int>(std::lround(c.y()));
        double sum_neg = 0.0, sum_pos = 0.0;
        int count_neg = 0, count_pos = 0;
        for (int y = cy - kHalfWindow; y <= cy + kHalfWindow; ++y) {
            for (int x = cx - kHalfWindow; x <= cx + kHalfWindow; ++x) {
                if (!grad.contains(x, y)) {
                    continue;
                }
                const double offset = n0 * x + n1 * y - d;
                if (offset > 1e-9) {
                    sum_pos += grad.at(x, y);
                    ++count_pos;
                } else if (offset < -1e-9) {
                    sum_neg += grad.at(x, y);
                    ++count_neg;
                }
            }
        }
        const double mean_pos = count_pos > 0 ? sum_pos / count_pos : 0.0;
        const double mean_neg = count_neg > 0 ? sum_neg / count_neg : 0.0;
        scores.push_back(std::min(mean_pos, mean_neg));
    }

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    const double median = (n % 2 == 1)
                              ? sorted[n / 2]
                              : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    const double threshold = 0.5 * median;

    // Longest contiguous run of steps strictly above the threshold; the
    // earliest run wins ties. A blank image scores 0 > 0 nowhere and falls
    // back to the single best step.
    int best_begin = -1, best_end = -1;
    int run_begin = -1;
    for (int i = 0; i <= static_cast<int>(scores.size()); ++i) {
        const bool above = i < static_cast<int>(scores.size()) &&
                           scores[static_cast<size_t>(i)] > threshold;
        if (above && run_begin < 0) {
            run_begin = i;
        } else if (!above && run_begin >= 0) {
            if (best_begin < 0 || (i - 1) - run_begin > best_end - best_begin) {
                best_begin = run_begin;
                best_end = i - 1;
            }
            run_begin = -1;
        }
    }

    double lo, hi;
    if (best_begin >= 0) {
        lo = params[static_cast<size_t>(best_begin)];
        hi = params[static_cast<size_t>(best_end)];
        if (best_begin == best_end) {
            lo = std::max(0.0, lo - 0.5);
            hi = std::min(span, hi + 0.5);
        }
    } else {
        const size_t best = static_cast<size_t>(std::distance(
            scores.begin(), std::max_element(scores.begin(), scores.end())));
        lo = std::max(0.0, params[best] - 0.5);
        hi = std::min(span, params[best] + 0.5);
    }

    segment.a = entry + lo * dir;
    segment.b = entry + hi * dir;
    if (segment.b.x() < segment.a.x() ||
        (segment.b.x() == segment.a.x() && segment.b.y() < segment.a.y())) {
        std::swap(segment.a, segment.b);
    }
    return segment;
}

}  // namespace msr
