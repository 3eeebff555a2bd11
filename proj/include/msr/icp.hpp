#pragma once

#include "msr/types.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace msr {

/// Exact nearest-neighbor index over a fixed cloud. Splits on the widest
/// dimension at the median; queries prune with per-node bounding boxes, so
/// results are exact. Distance ties resolve to the lowest point index.
class KdTree {
public:
    explicit KdTree(const PointCloud& cloud);
    ~KdTree();
    KdTree(KdTree&&) noexcept;
    KdTree& operator=(KdTree&&) noexcept;

    struct Neighbor {
        int index;
        double distance;
    };

    Neighbor nearest(const Vector& query) const;

    Eigen::Index size() const;
    Eigen::Index dimension() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Nearest neighbor in `reference` for every point of `query`; exact, ties
/// to the lowest index.
std::vector<KdTree::Neighbor> nearest_neighbors(const PointCloud& query,
                                                const PointCloud& reference);

/// Least-squares rigid alignment of paired points: rotation via the SVD of
/// the cross-covariance with a determinant-+1 correction, translation from
/// the centroids. source and target must pair up row by row.
RigidTransform best_rigid_transform(const PointCloud& source,
                                    const PointCloud& target);

struct IcpConfig {
    int max_iterations = 100;
    /// Stop when the trimmed RMS improves by less than this (relative to the
    /// target's bounding-box diagonal).
    double convergence_threshold = 1e-9;
    /// Fraction of worst-matching points dropped before each alignment step.
    double trim_fraction = 0.1;
};

struct RegistrationResult {
    RigidTransform transform;
    /// In [0, 1]; exp(-rms / (0.1 * bbox diagonal of the target)).
    double confidence = 0.0;
    /// Trimmed RMS point-to-point distance at the final iterate. For
    /// consensus-based registration, the weighted RMS vote residual.
    double rms_error = 0.0;
    /// Iterations actually run. For consensus-based registration, the number
    /// of supporting votes.
    int iterations_used = 0;
    /// Trimmed RMS after each iteration; non-increasing by construction.
    std::vector<double> rms_history;
};

/// Trimmed point-to-point ICP aligning `moving` onto `target`. Deterministic:
/// no sampling, exact nearest neighbors, fixed trim count
/// m = ceil((1 - trim) * N) clamped to at least dim + 1.
RegistrationResult icp_register(const PointCloud& moving,
                                const PointCloud& target,
                                const IcpConfig& config = {});

}  // namespace msr
