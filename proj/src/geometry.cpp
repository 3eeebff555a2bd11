#include "msr/geometry.hpp"

#include "msr/random.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace msr {

namespace {

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* what) {
    if (a != b) {
        std::ostringstream msg;
        msg << what << ": dimensions disagree (" << a << " vs " << b << ")";
        throw DimensionMismatchError(msg.str());
    }
}

}  // namespace

double bbox_diagonal(const PointCloud& cloud) {
    if (cloud.size() < 2) return 0.0;
    const Vector extent = cloud.points().colwise().maxCoeff() -
                          cloud.points().colwise().minCoeff();
    return extent.norm();
}

Vector canonical_sign(Vector v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0.0) v = -v;
            return v;
        }
    }
    return v;
}

Hyperplane::Hyperplane(Vector normal, Vector anchor) {
    require_same_dim(normal.size(), anchor.size(), "hyperplane");
    if (normal.size() == 0) {
        throw DimensionMismatchError("hyperplane: zero-dimensional input");
    }
    const double norm = normal.norm();
    if (!(norm > 1e-12) || !normal.allFinite()) {
        throw DegenerateInputError("hyperplane: normal must be nonzero and finite");
    }
    normal_ = canonical_sign(normal / norm);
    anchor_ = std::move(anchor);
    signed_distance_ = anchor_.dot(normal_);
}

Hyperplane Hyperplane::restore(Vector unit_normal, Vector anchor) {
    require_same_dim(unit_normal.size(), anchor.size(), "hyperplane");
    if (unit_normal.size() == 0) {
        throw DimensionMismatchError("hyperplane: zero-dimensional input");
    }
    if (!unit_normal.allFinite() || !anchor.allFinite() ||
        std::abs(unit_normal.norm() - 1.0) > 1e-9) {
        throw DegenerateInputError("hyperplane: stored normal must be unit length");
    }
    Hyperplane plane;
    plane.normal_ = canonical_sign(std::move(unit_normal));
    plane.anchor_ = std::move(anchor);
    plane.signed_distance_ = plane.anchor_.dot(plane.normal_);
    return plane;
}

double Hyperplane::offset_of(const Vector& x) const {
    require_same_dim(x.size(), normal_.size(), "offset_of");
    return x.dot(normal_) - signed_distance_;
}

Vector Hyperplane::reflect(const Vector& x) const {
    return x - 2.0 * offset_of(x) * normal_;
}

Vector Hyperplane::project(const Vector& x) const {
    return x - offset_of(x) * normal_;
}

Matrix reflection_matrix(const Vector& v) {
    if (std::abs(v.norm() - 1.0) > 1e-9) {
        throw DegenerateInputError("reflection_matrix: v must be unit length");
    }
    const Eigen::Index n = v.size();
    return Matrix::Identity(n, n) - 2.0 * (v * v.transpose());
}

PointCloud reflect_points(const PointCloud& cloud, const Hyperplane& plane) {
    require_same_dim(cloud.dimension(), plane.dimension(), "reflect_points");
    // Rowwise x S_v + 2 d v^T; S_v is symmetric so no transpose is needed.
    const Matrix s = reflection_matrix(plane.normal());
    Matrix out = cloud.points() * s;
    out.rowwise() +=
        (2.0 * plane.signed_distance() * plane.normal()).transpose();
    return PointCloud(std::move(out));
}

Matrix orthonormalize_rotation(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0) {
        throw DimensionMismatchError("orthonormalize_rotation: matrix must be square");
    }
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Matrix u = svd.matrixU();
    const Matrix v = svd.matrixV();
    if ((u * v.transpose()).determinant() < 0.0) {
        u.col(u.cols() - 1) *= -1.0;
    }
    return u * v.transpose();
}

EigenPair eigenvector_minus_one(const Matrix& t) {
    if (t.rows() != t.cols() || t.rows() == 0) {
        throw DimensionMismatchError("eigenvector_minus_one: matrix must be square");
    }
    Eigen::EigenSolver<Matrix> solver(t);
    if (solver.info() != Eigen::Success) {
        throw Error("eigenvector_minus_one: eigendecomposition failed");
    }

    const auto& values = solver.eigenvalues();
    // Track both the closest *real* eigenvalue to -1 and the closest overall,
    // so the failure path can report what the spectrum actually contained.
    Eigen::Index best_real = -1;
    double best_real_gap = std::numeric_limits<double>::infinity();
    std::complex<double> closest_any = values[0];
    double closest_any_gap = std::numeric_limits<double>::infinity();

    for (Eigen::Index i = 0; i < values.size(); ++i) {
        const std::complex<double> lambda = values[i];
        const double gap = std::abs(lambda - std::complex<double>(-1.0, 0.0));
        if (gap < closest_any_gap) {
            closest_any_gap = gap;
            closest_any = lambda;
        }
        if (std::abs(lambda.imag()) <= 1e-6 && gap < best_real_gap) {
            best_real_gap = gap;
            best_real = i;
        }
    }

    if (best_real < 0 || best_real_gap > 0.5) {
        std::ostringstream msg;
        msg << "composed map has no eigenvalue near -1 (closest: "
            << closest_any.real();
        if (std::abs(closest_any.imag()) > 1e-12) {
            msg << (closest_any.imag() < 0 ? " - " : " + ")
                << std::abs(closest_any.imag()) << "i";
        }
        msg << "); the registration is not a reflection";
        throw NonReflectionError(msg.str(), closest_any);
    }

    const double lambda = values[best_real].real();
    // Eigenvector via the nullspace of (T - lambda I): the right singular
    // vector of the smallest singular value. More robust near repeated
    // eigenvalues than reading EigenSolver's possibly complex eigenvectors.
    const Matrix shifted = t - lambda * Matrix::Identity(t.rows(), t.cols());
    Eigen::JacobiSVD<Matrix> svd(shifted, Eigen::ComputeFullV);
    Vector w = svd.matrixV().col(t.cols() - 1);
    w = canonical_sign(w / w.norm());
    return {w, lambda};
}

ReflectionComposition compose_reflection(const Hyperplane& initial,
                                         const RigidTransform& registration) {
    require_same_dim(initial.dimension(), registration.dimension(),
                     "compose_reflection");
    const Matrix r = orthonormalize_rotation(registration.rotation);
    ReflectionComposition out{
        reflection_matrix(initial.normal()) * r.transpose(), initial,
        RigidTransform(r, registration.translation)};
    return out;
}

Hyperplane symmetry_plane_from_registration(const Hyperplane& initial,
                                            const RigidTransform& registration) {
    const ReflectionComposition comp = compose_reflection(initial, registration);
    const EigenPair pair = eigenvector_minus_one(comp.matrix);
    // The reflection sends q to q + 2 d v for any q on the initial plane's
    // normal line through the origin; registering back gives R (2 d v) + t.
    // The symmetry plane passes through the midpoint of that round trip.
    const Vector two_dv =
        2.0 * initial.signed_distance() * initial.normal();
    const Vector anchor = 0.5 * (comp.registration.rotation * two_dv +
                                 comp.registration.translation);
    return Hyperplane(pair.eigenvector, anchor);
}

PointCloud midpoints(const PointCloud& a, const PointCloud& b) {
    require_same_dim(a.dimension(), b.dimension(), "midpoints");
    if (a.size() != b.size()) {
        throw DimensionMismatchError("midpoints: clouds must have equal point counts");
    }
    return PointCloud(0.5 * (a.points() + b.points()));
}

Hyperplane fit_plane_to_midpoints(const PointCloud& points) {
    const Eigen::Index n = points.dimension();
    if (points.size() < n) {
        throw DegenerateInputError(
            "fit_plane_to_midpoints: need at least dimension-many points");
    }
    const Vector centroid = points.points().colwise().mean().transpose();
    Matrix centered = points.points();
    centered.rowwise() -= centroid.transpose();

    Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeFullV);
    const Vector sigma = svd.singularValues();
    // A unique plane needs the points to spread in n-1 independent
    // directions: the second-smallest singular value must be solidly nonzero.
    if (sigma[0] <= 0.0 || sigma[n - 2] <= 1e-9 * sigma[0]) {
        throw DegenerateInputError(
            "fit_plane_to_midpoints: points span fewer than n-1 dimensions");
    }
    const Vector normal = svd.matrixV().col(n - 1);
    return Hyperplane(normal, centroid);
}

PlaneSeparation plane_angle_distance(const Hyperplane& a, const Hyperplane& b) {
    require_same_dim(a.dimension(), b.dimension(), "plane_angle_distance");
    const double c = std::clamp(std::abs(a.normal().dot(b.normal())), 0.0, 1.0);
    return {std::acos(c), std::abs(b.offset_of(a.anchor()))};
}

Matrix random_rotation(Eigen::Index dim, Rng& rng) {
    Matrix g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    // Fix the QR sign ambiguity so the distribution is uniform, then force
    // determinant +1.
    for (Eigen::Index j = 0; j < dim; ++j) {
        if (r(j, j) < 0.0) q.col(j) *= -1.0;
    }
    if (q.determinant() < 0.0) q.col(dim - 1) *= -1.0;
    return q;
}

}  // namespace msr
