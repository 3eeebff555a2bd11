#pragma once

#include "msr/geometry.hpp"
#include "msr/types.hpp"

#include <string>
#include <vector>

namespace msr {

/// Ordered polyline of joint positions in R^n.
struct Skeleton {
    Matrix points;  // rows are joints, in order
    std::string id;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dimension() const { return points.cols(); }
};

struct DtwOptions {
    /// Reversal-invariant: also match against the reversed sequence and keep
    /// the cheaper direction.
    bool try_reversed = true;
    /// Divide the summed distance by the warping-path length.
    bool normalize_by_path_length = false;
};

/// Dynamic-time-warping distance between two joint sequences: sum of
/// Euclidean joint distances along the best monotone alignment path
/// (steps advance i, j, or both; endpoints anchored).
double dtw_cost(const Skeleton& a, const Skeleton& b,
                const DtwOptions& options = {});

/// Pairwise mirror-match costs: entry (i, j) is the DTW distance between
/// skeleton i and skeleton j reflected about the plane, symmetrized as
/// min(C(i,j), C(j,i)). The diagonal measures each skeleton against its own
/// mirror image.
Matrix symmetry_cost_matrix(const std::vector<Skeleton>& skeletons,
                            const Hyperplane& plane,
                            const DtwOptions& options = {});

struct Assignment {
    std::vector<int> permutation;  // row i pairs with column permutation[i]
    double total_cost = 0.0;
};

/// Minimum-cost perfect assignment on a square cost matrix (shortest
/// augmenting paths, O(n^3)). Among equal-cost optima (1e-9 relative
/// tolerance), returns the lexicographically smallest permutation.
Assignment munkres(const Matrix& costs);

struct SkeletonPair {
    int first = 0;
    int second = 0;
    double cost = 0.0;
    /// True when the assignment maps the two onto each other both ways;
    /// one-directional matches are kept but flagged.
    bool mutual = true;
};

struct PairingResult {
    std::vector<SkeletonPair> pairs;
    std::vector<int> unmatched;  // indices left over (odd counts)
    double total_cost = 0.0;     // sum of reported pair costs
};

/// Pairs skeletons into mirror couples about the plane: assignment on the
/// symmetrized DTW cost matrix with self-pairing forbidden. Odd counts get
/// one virtual partner, whose real partner is reported unmatched.
PairingResult pair_skeletons(const std::vector<Skeleton>& skeletons,
                             const Hyperplane& plane,
                             const DtwOptions& options = {});

}  // namespace msr
