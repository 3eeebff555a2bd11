#pragma once

#include "msr/geometry.hpp"
#include "msr/icp.hpp"
#include "msr/image.hpp"
#include "msr/nxc.hpp"
#include "msr/types.hpp"

#include <string>
#include <utility>
#include <vector>

namespace msr {

enum class Backend { Icp, Nxc };

struct MsrConfig {
    /// Reflection planes to start from; empty means one start per canonical
    /// basis direction through the centroid (point clouds) or a vertical
    /// line through the center (images).
    std::vector<Hyperplane> initial_planes;
    /// Point clouds register with Icp, images with Nxc; the mismatched
    /// combination is rejected.
    Backend backend = Backend::Icp;
    IcpConfig icp;
    NxcConfig nxc;
    /// Per start, the reflect/register/extract step repeats with the freshly
    /// extracted plane until the plane stops moving (or this cap is hit).
    /// Registration alone lands near the symmetry plane; re-reflecting about
    /// the refined plane keeps correspondences honest and converges to the
    /// fixed point. 1 = single pass. Point clouds only.
    int refine_rounds = 10;
};

/// What happened for one registration start (kept even when it failed, so
/// callers can see why a detection degraded or errored).
struct RunDiagnostic {
    int initial_plane_index = -1;
    bool succeeded = false;
    std::string message;  // failure reason when !succeeded
    RegistrationResult registration;
};

/// One detected symmetry plane.
struct SymmetryDetection {
    Hyperplane plane;
    double confidence = 0.0;
    /// Index of the initial plane that produced this detection.
    int initial_plane_index = -1;
    /// This detection and everything ranked below it, confidence
    /// non-increasing; ranked_alternatives[0].first equals plane.
    std::vector<std::pair<Hyperplane, double>> ranked_alternatives;
    /// Registration quality behind this detection (rms, support/iterations).
    RegistrationResult registration;
    /// Per-start outcomes, including failed starts.
    std::vector<RunDiagnostic> diagnostics;

    explicit SymmetryDetection(Hyperplane p) : plane(std::move(p)) {}
};

/// Default multi-start planes for a cloud: one per canonical basis
/// direction, each through the centroid.
std::vector<Hyperplane> canonical_planes(const PointCloud& cloud);

/// Mirror-symmetry detection for point clouds: reflect about each initial
/// plane, register the reflection back onto the data with trimmed ICP, read
/// the plane off the composed map (repeating per refine_rounds), and keep
/// the start with the highest registration confidence (ties: lowest start
/// index). When no initial planes are given, the starts are the canonical
/// planes followed by the covariance principal axes through the centroid —
/// a symmetric cloud's normal is always among the latter, whatever its
/// pose. Requires the Icp backend and at least dim + 1 points spanning the
/// space. Throws DetectionError listing per-start diagnostics when every
/// start fails.
SymmetryDetection detect_symmetry_points(const PointCloud& cloud,
                                         const MsrConfig& config = {});

/// Mirror-symmetry detection for images: reflect about the initial line
/// (first entry of initial_planes, or a vertical line through the center),
/// register the mirrored image back with patch-vote consensus, and convert
/// each ranked consensus transform into a symmetry line. Requires the Nxc
/// backend. Throws DetectionError when registration finds no consensus.
std::vector<SymmetryDetection> detect_symmetry_2d(const ImageGrid& image,
                                                  const MsrConfig& config);

struct SymmetrySegment {
    /// Both endpoints lie on the detected line, ordered lexicographically.
    Eigen::Vector2d a{0.0, 0.0};
    Eigen::Vector2d b{0.0, 0.0};
};

/// Trims an infinite symmetry line to its gradient-supported extent: walk
/// the line in 1 px steps; score each step as min(mean gradient magnitude
/// left of the line, right of the line) over a 21x21 window; threshold at
/// 50% of the per-image median step score; keep the longest contiguous run
/// above threshold (earliest on ties), clipped to image bounds. Falls back
/// to a 1 px segment at the best-scoring step when no step clears the
/// threshold. Throws when the line misses the image rectangle.
SymmetrySegment line_to_segment(const Hyperplane& line, const ImageGrid& image);

}  // namespace msr
