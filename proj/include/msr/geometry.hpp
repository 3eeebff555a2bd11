#pragma once

#include "msr/types.hpp"

namespace msr {

/// An oriented hyperplane {x : <x, normal> = signed_distance} in R^n.
///
/// The stored normal is unit length with a canonical sign (the first
/// coordinate whose magnitude exceeds 1e-12 is positive), so two equal planes
/// compare equal regardless of how their normals were originally oriented.
class Hyperplane {
public:
    /// Builds the plane through `anchor` orthogonal to `normal`. The normal
    /// may have any nonzero length; it is normalized and sign-canonicalized.
    Hyperplane(Vector normal, Vector anchor);

    /// Rebuilds a plane from previously saved data. `unit_normal` must
    /// already have unit length (checked to 1e-9); renormalization is
    /// skipped so a reloaded plane reproduces the saved one bit for bit.
    static Hyperplane restore(Vector unit_normal, Vector anchor);

    Eigen::Index dimension() const { return normal_.size(); }
    const Vector& normal() const { return normal_; }
    const Vector& anchor() const { return anchor_; }

    /// d in the plane equation <x, v> = d; equals <anchor, normal>.
    double signed_distance() const { return signed_distance_; }

    /// Signed distance from x to the plane (positive on the normal side).
    double offset_of(const Vector& x) const;

    /// Mirror image of x about the plane: S_v x + 2 d v.
    Vector reflect(const Vector& x) const;

    /// Orthogonal projection of x onto the plane.
    Vector project(const Vector& x) const;

private:
    Hyperplane() = default;

    Vector normal_;
    Vector anchor_;
    double signed_distance_ = 0.0;
};

/// Chooses the canonical sign for a direction vector: flips it if the first
/// coordinate with magnitude > 1e-12 is negative.
Vector canonical_sign(Vector v);

/// Householder matrix S_v = I - 2 v v^T for a unit vector v (checked to
/// within 1e-9). S_v is symmetric, orthogonal, and has determinant -1.
Matrix reflection_matrix(const Vector& v);

/// Reflects every point of a cloud about the plane.
PointCloud reflect_points(const PointCloud& cloud, const Hyperplane& plane);

/// Nearest rotation factor of an invertible-ish matrix: the orthogonal polar
/// factor via SVD with a determinant-+1 correction.
Matrix orthonormalize_rotation(const Matrix& m);

struct EigenPair {
    Vector eigenvector;   // unit length, canonical sign
    double eigenvalue;    // the real eigenvalue closest to -1
};

/// Finds the real eigenvalue of T closest to -1 (it must lie within 0.5 of
/// -1) and a unit eigenvector for it. Throws NonReflectionError carrying the
/// globally closest eigenvalue when T has nothing near -1, which means the
/// composed map was not a reflection.
EigenPair eigenvector_minus_one(const Matrix& t);

/// Composition data of "reflect about `initial`, then apply the registration
/// rotation": the matrix whose -1 eigenvector is the symmetry-plane normal.
struct ReflectionComposition {
    Matrix matrix;        // S_v * R^T, orthogonal with determinant -1
    Hyperplane initial;   // the plane that was reflected about
    RigidTransform registration;
};

ReflectionComposition compose_reflection(const Hyperplane& initial,
                                         const RigidTransform& registration);

/// Recovers the symmetry plane from a registration that aligned
/// reflect(data, initial) back onto data. The normal is the -1 eigenvector
/// of S_v R^T; the anchor is 0.5 * (R * (2 d v) + t), the midpoint of the
/// origin's round trip through reflection and registration.
Hyperplane symmetry_plane_from_registration(const Hyperplane& initial,
                                            const RigidTransform& registration);

/// Pointwise midpoints 0.5 * (a_i + b_i) of two equally sized clouds.
PointCloud midpoints(const PointCloud& a, const PointCloud& b);

/// Least-squares hyperplane through a cloud: anchor at the centroid, normal
/// the singular direction of smallest spread. Throws DegenerateInputError
/// when the points span fewer than n-1 dimensions (plane underdetermined).
Hyperplane fit_plane_to_midpoints(const PointCloud& points);

struct PlaneSeparation {
    double angle_rad;   // angle between normals, folded into [0, pi/2]
    double offset;      // distance from a's anchor to plane b
};

/// How far apart two hyperplanes are, as (normal angle, anchor offset).
PlaneSeparation plane_angle_distance(const Hyperplane& a, const Hyperplane& b);

}  // namespace msr
