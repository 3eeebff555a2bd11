#include "msr/icp.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace msr {

namespace {
constexpr int kLeafSize = 8;
}

struct KdTree::Impl {
    struct Node {
        int left = -1;
        int right = -1;
        int begin = 0;
        int end = 0;  // leaf range into `order` when left == -1
        Vector bb_lo, bb_hi;
    };

    Matrix pts;
    std::vector<int> order;
    std::vector<Node> nodes;
    int root = -1;

    int build(int begin, int end) {
        Node node;
        node.begin = begin;
        node.end = end;
        const Eigen::Index dim = pts.cols();
        node.bb_lo = Vector::Constant(dim, std::numeric_limits<double>::infinity());
        node.bb_hi = Vector::Constant(dim, -std::numeric_limits<double>::infinity());
        for (int k = begin; k < end; ++k) {
            const auto row = pts.row(order[static_cast<size_t>(k)]);
            for (Eigen::Index d = 0; d < dim; ++d) {
                node.bb_lo[d] = std::min(node.bb_lo[d], row[d]);
                node.bb_hi[d] = std::max(node.bb_hi[d], row[d]);
            }
        }

        const int id = static_cast<int>(nodes.size());
        nodes.push_back(node);
        if (end - begin <= kLeafSize) return id;

        // Split the widest dimension at the median; ties in coordinate break
        // on the point index so the layout is deterministic.
        Eigen::Index split_dim = 0;
        double widest = -1.0;
        for (Eigen::Index d = 0; d < dim; ++d) {
            const double extent = node.bb_hi[d] - node.bb_lo[d];
            if (extent > widest) {
                widest = extent;
                split_dim = d;
            }
        }
        if (widest <= 0.0) return id;  // all points identical: keep as leaf

        const int mid = begin + (end - begin) / 2;
        std::nth_element(order.begin() + begin, order.begin() + mid,
                         order.begin() + end, [&](int a, int b) {
                             const double ca = pts(a, split_dim);
                             const double cb = pts(b, split_dim);
                             return ca < cb || (ca == cb && a < b);
                         });
        const int left = build(begin, mid);
        const int right = build(mid, end);
        nodes[static_cast<size_t>(id)].left = left;
        nodes[static_cast<size_t>(id)].right = right;
        return id;
    }

    double box_distance2(const Node& node, const Vector& q) const {
        double d2 = 0.0;
        for (Eigen::Index d = 0; d < q.size(); ++d) {
            double gap = 0.0;
            if (q[d] < node.bb_lo[d])
                gap = node.bb_lo[d] - q[d];
            else if (q[d] > node.bb_hi[d])
                gap = q[d] - node.bb_hi[d];
            d2 += gap * gap;
        }
        return d2;
    }

    void search(int id, const Vector& q, double& best_d2, int& best_idx) const {
        const Node& node = nodes[static_cast<size_t>(id)];
        // Equal box distance must still be visited: it may hold an
        // equidistant point with a lower index.
        if (box_distance2(node, q) > best_d2) return;

        if (node.left < 0) {
            for (int k = node.begin; k < node.end; ++k) {
                const int idx = order[static_cast<size_t>(k)];
                const double d2 = (pts.row(idx).transpose() - q).squaredNorm();
                if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
                    best_d2 = d2;
                    best_idx = idx;
                }
            }
            return;
        }

        const double dl = box_distance2(nodes[static_cast<size_t>(node.left)], q);
        const double dr = box_distance2(nodes[static_cast<size_t>(node.right)], q);
        if (dl <= dr) {
            search(node.left, q, best_d2, best_idx);
            search(node.right, q, best_d2, best_idx);
        } else {
            search(node.right, q, best_d2, best_idx);
            search(node.left, q, best_d2, best_idx);
        }
    }
};

KdTree::KdTree(const PointCloud& cloud) : impl_(std::make_unique<Impl>()) {
    if (cloud.empty()) {
        throw DegenerateInputError("kd-tree: cannot index an empty cloud");
    }
    impl_->pts = cloud.points();
    impl_->order.resize(static_cast<size_t>(cloud.size()));
    std::iota(impl_->order.begin(), impl_->order.end(), 0);
    impl_->nodes.reserve(static_cast<size_t>(2 * cloud.size() / kLeafSize + 2));
    impl_->root = impl_->build(0, static_cast<int>(cloud.size()));
}

KdTree::~KdTree() = default;
KdTree::KdTree(KdTree&&) noexcept = default;
KdTree& KdTree::operator=(KdTree&&) noexcept = default;

KdTree::Neighbor KdTree::nearest(const Vector& query) const {
    if (query.size() != impl_->pts.cols()) {
        throw DimensionMismatchError("kd-tree: query dimension mismatch");
    }
    double best_d2 = std::numeric_limits<double>::infinity();
    int best_idx = -1;
    impl_->search(impl_->root, query, best_d2, best_idx);
    return {best_idx, std::sqrt(best_d2)};
}

Eigen::Index KdTree::size() const { return impl_->pts.rows(); }
Eigen::Index KdTree::dimension() const { return impl_->pts.cols(); }

std::vector<KdTree::Neighbor> nearest_neighbors(const PointCloud& query,
                                                const PointCloud& reference) {
    if (query.dimension() != reference.dimension()) {
        throw DimensionMismatchError("nearest_neighbors: dimension mismatch");
    }
    const KdTree tree(reference);
    std::vector<KdTree::Neighbor> out;
    out.reserve(static_cast<size_t>(query.size()));
    for (Eigen::Index i = 0; i < query.size(); ++i) {
        out.push_back(tree.nearest(query.point(i)));
    }
    return out;
}

RigidTransform best_rigid_transform(const PointCloud& source,
                                    const PointCloud& target) {
    if (source.dimension() != target.dimension()) {
        throw DimensionMismatchError("best_rigid_transform: dimension mismatch");
    }
    if (source.size() != target.size()) {
        throw DimensionMismatchError(
            "best_rigid_transform: correspondence counts disagree");
    }
    if (source.empty()) {
        throw DegenerateInputError("best_rigid_transform: empty point sets");
    }

    const Vector ms = source.points().colwise().mean().transpose();
    const Vector mt = target.points().colwise().mean().transpose();
    Matrix sc = source.points();
    sc.rowwise() -= ms.transpose();
    Matrix tc = target.points();
    tc.rowwise() -= mt.transpose();

    // Cross-covariance H = sum s_i t_i^T; R = V U^T with a sign fix keeps
    // the solution a proper rotation.
    const Matrix h = sc.transpose() * tc;
    Eigen::JacobiSVD<Matrix> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix v = svd.matrixV();
    if ((v * svd.matrixU().transpose()).determinant() < 0.0) {
        v.col(v.cols() - 1) *= -1.0;
    }
    const Matrix r = v * svd.matrixU().transpose();
    return {r, mt - r * ms};
}

RegistrationResult icp_register(const PointCloud& moving,
                                const PointCloud& target,
                                const IcpConfig& config) {
    if (moving.dimension() != target.dimension()) {
        throw DimensionMismatchError("icp_register: dimension mismatch");
    }
    if (moving.empty() || target.empty()) {
        throw DegenerateInputError("icp_register: empty point cloud");
    }
    if (config.max_iterations < 1) {
        throw DegenerateInputError("icp_register: max_iterations must be >= 1");
    }
    if (!(config.trim_fraction >= 0.0) || config.trim_fraction >= 1.0) {
        throw DegenerateInputError("icp_register: trim_fraction must be in [0, 1)");
    }

    const Eigen::Index n = moving.size();
    const Eigen::Index dim = moving.dimension();
    // Fixed trim count: keep the m best pairs every iteration.
    Eigen::Index keep =
        n - static_cast<Eigen::Index>(std::floor(config.trim_fraction *
                                                 static_cast<double>(n)));
    keep = std::max(keep, std::min<Eigen::Index>(n, dim + 1));

    const double diag = bbox_diagonal(target);
    const double scale = diag > 0.0 ? diag : 1.0;
    const KdTree tree(target);

    RegistrationResult result;
    result.transform = RigidTransform::identity(dim);
    PointCloud current = moving;
    double prev_rms = std::numeric_limits<double>::infinity();

    std::vector<int> pair_order(static_cast<size_t>(n));
    std::vector<KdTree::Neighbor> nn(static_cast<size_t>(n));
    for (int iter = 0;; ++iter) {
        // One exact nearest-neighbor pass per round serves both the RMS of
        // the previous alignment and the correspondences of the next one.
        for (Eigen::Index i = 0; i < n; ++i)
            nn[static_cast<size_t>(i)] = tree.nearest(current.point(i));

        // Rank pairs by distance; ties break on the moving index.
        std::iota(pair_order.begin(), pair_order.end(), 0);
        std::sort(pair_order.begin(), pair_order.end(), [&](int a, int b) {
            const double da = nn[static_cast<size_t>(a)].distance;
            const double db = nn[static_cast<size_t>(b)].distance;
            return da < db || (da == db && a < b);
        });

        double sum = 0.0;
        for (Eigen::Index k = 0; k < keep; ++k) {
            const double d = nn[static_cast<size_t>(pair_order[static_cast<size_t>(k)])].distance;
            sum += d * d;
        }
        const double rms = std::sqrt(sum / static_cast<double>(keep));

        if (iter > 0) {
            result.rms_history.push_back(rms);
            result.rms_error = rms;
            result.iterations_used = iter;
            if (rms == 0.0 ||
                prev_rms - rms < config.convergence_threshold * scale) {
                break;
            }
        }
        if (iter == config.max_iterations) break;
        prev_rms = rms;

        // Refit from the original moving points: no drift accumulation.
        Matrix src(keep, dim), dst(keep, dim);
        for (Eigen::Index k = 0; k < keep; ++k) {
            const int i = pair_order[static_cast<size_t>(k)];
            src.row(k) = moving.points().row(i);
            dst.row(k) = target.points().row(nn[static_cast<size_t>(i)].index);
        }
        result.transform = best_rigid_transform(PointCloud(std::move(src)),
                                                PointCloud(std::move(dst)));
        current = result.transform.apply(moving);
    }

    result.confidence = std::exp(-result.rms_error / (0.1 * scale));
    return result;
}

}  // namespace msr
