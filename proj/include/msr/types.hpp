#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace msr {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Base class for every error thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Inputs with mismatched dimensions (e.g. a 3D plane applied to 2D points).
struct DimensionMismatchError : Error {
    using Error::Error;
};

/// Inputs that are structurally valid but do not determine a result
/// (rank-deficient point sets, empty clouds, constant patches, ...).
struct DegenerateInputError : Error {
    using Error::Error;
};

/// Thrown when a composed map has no real eigenvalue near -1, i.e. the
/// registration did not produce anything close to a reflection.
struct NonReflectionError : Error {
    NonReflectionError(const std::string& what, std::complex<double> closest)
        : Error(what), closest_eigenvalue(closest) {}

    std::complex<double> closest_eigenvalue;
};

/// End-to-end detection failed for every attempted initialization.
struct DetectionError : Error {
    explicit DetectionError(const std::string& what,
                            std::vector<std::string> details = {})
        : Error(what), diagnostics(std::move(details)) {}

    std::vector<std::string> diagnostics;
};

/// Malformed input files (point clouds, skeletons, CSV, images).
struct ParseError : Error {
    using Error::Error;
};

/// N points in R^n stored row-wise. n is fixed at construction; rows() is the
/// point count, cols() the ambient dimension.
class PointCloud {
public:
    PointCloud() = default;

    explicit PointCloud(Matrix points) : points_(std::move(points)) {}

    PointCloud(Eigen::Index count, Eigen::Index dim) : points_(count, dim) {
        points_.setZero();
    }

    Eigen::Index size() const { return points_.rows(); }
    Eigen::Index dimension() const { return points_.cols(); }
    bool empty() const { return points_.rows() == 0; }

    Matrix& points() { return points_; }
    const Matrix& points() const { return points_; }

    Vector point(Eigen::Index i) const { return points_.row(i).transpose(); }
    void set_point(Eigen::Index i, const Vector& p) {
        points_.row(i) = p.transpose();
    }

private:
    Matrix points_;
};

/// Rigid map x -> R*x + t with R in SO(n).
struct RigidTransform {
    Matrix rotation;
    Vector translation;

    RigidTransform() = default;

    RigidTransform(Matrix r, Vector t)
        : rotation(std::move(r)), translation(std::move(t)) {
        if (rotation.rows() != rotation.cols() ||
            rotation.rows() != translation.size()) {
            throw DimensionMismatchError(
                "rigid transform: rotation and translation sizes disagree");
        }
    }

    static RigidTransform identity(Eigen::Index dim) {
        return {Matrix::Identity(dim, dim), Vector::Zero(dim)};
    }

    Eigen::Index dimension() const { return translation.size(); }

    Vector apply(const Vector& x) const { return rotation * x + translation; }

    /// Applies the transform to every row of a cloud.
    PointCloud apply(const PointCloud& cloud) const {
        if (cloud.dimension() != dimension()) {
            throw DimensionMismatchError(
                "rigid transform: cloud dimension does not match");
        }
        Matrix out = cloud.points() * rotation.transpose();
        out.rowwise() += translation.transpose();
        return PointCloud(std::move(out));
    }

    /// Composition (this after other): x -> this(other(x)).
    RigidTransform compose(const RigidTransform& other) const {
        return {rotation * other.rotation,
                rotation * other.translation + translation};
    }

    RigidTransform inverse() const {
        return {rotation.transpose(), -(rotation.transpose() * translation)};
    }
};

/// Diagonal length of the axis-aligned bounding box of a cloud; the scale
/// used to make thresholds unit-free. Zero for empty or single-point clouds.
double bbox_diagonal(const PointCloud& cloud);

}  // namespace msr
