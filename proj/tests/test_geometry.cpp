#include "msr/geometry.hpp"

#include "msr/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace msr;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

PointCloud random_cloud(Eigen::Index count, Eigen::Index dim, Rng& rng) {
    Matrix m(count, dim);
    for (Eigen::Index i = 0; i < count; ++i)
        for (Eigen::Index j = 0; j < dim; ++j) m(i, j) = rng.uniform(-2.0, 2.0);
    return PointCloud(std::move(m));
}

Hyperplane random_plane(Eigen::Index dim, Rng& rng) {
    return Hyperplane(rng.unit_vector(dim), rng.gaussian_vector(dim));
}

}  // namespace

TEST_CASE("hyperplane normalizes and canonicalizes its normal") {
    const Hyperplane plane(vec2(0.0, -2.0), vec2(3.0, 1.0));
    CHECK(plane.normal()[0] == doctest::Approx(0.0));
    CHECK(plane.normal()[1] == doctest::Approx(1.0));
    CHECK(plane.signed_distance() == doctest::Approx(1.0));
    CHECK(plane.offset_of(vec2(7.0, 4.0)) == doctest::Approx(3.0));

    CHECK_THROWS_AS(Hyperplane(vec2(0.0, 0.0), vec2(1.0, 1.0)),
                    DegenerateInputError);
    Vector bad(3);
    bad << 1, 0, 0;
    CHECK_THROWS_AS(Hyperplane(bad, vec2(0.0, 0.0)), DimensionMismatchError);
}

TEST_CASE("reflection matrix for an axis normal") {
    const Matrix s = reflection_matrix(vec2(0.0, 1.0));
    CHECK(s(0, 0) == doctest::Approx(1.0));
    CHECK(s(0, 1) == doctest::Approx(0.0));
    CHECK(s(1, 0) == doctest::Approx(0.0));
    CHECK(s(1, 1) == doctest::Approx(-1.0));
    CHECK_THROWS_AS(reflection_matrix(vec2(1.0, 1.0)), DegenerateInputError);
}

TEST_CASE("reflecting a point about a tilted line") {
    // Frozen value, cross-checked against the componentwise oracle:
    // p=(1,2), v=(0.6,0.8), d=2.2; x=(2,1) has offset -0.2, so the mirror
    // image is (2,1) + 0.4*(0.6,0.8) = (2.24, 1.32).
    const Hyperplane plane(vec2(0.6, 0.8), vec2(1.0, 2.0));
    Matrix pts(1, 2);
    pts << 2.0, 1.0;
    const PointCloud out = reflect_points(PointCloud(pts), plane);
    CHECK(out.points()(0, 0) == doctest::Approx(2.24));
    CHECK(out.points()(0, 1) == doctest::Approx(1.32));

    const Vector expect =
        oracle::reflect_point(vec2(2.0, 1.0), plane.normal(),
                              plane.signed_distance());
    CHECK((out.point(0) - expect).norm() == doctest::Approx(0.0));
}

TEST_CASE("reflection agrees with the componentwise oracle") {
    Rng rng(101);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Hyperplane plane = random_plane(dim, rng);
        const PointCloud cloud = random_cloud(5, dim, rng);
        const PointCloud reflected = reflect_points(cloud, plane);
        for (Eigen::Index i = 0; i < cloud.size(); ++i) {
            const Vector expect = oracle::reflect_point(
                cloud.point(i), plane.normal(), plane.signed_distance());
            CHECK((reflected.point(i) - expect).norm() < 1e-12);
        }
    }
}

TEST_CASE("reflection is an involution and fixes the plane") {
    Rng rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Hyperplane plane = random_plane(dim, rng);
        const PointCloud cloud = random_cloud(8, dim, rng);

        const PointCloud twice =
            reflect_points(reflect_points(cloud, plane), plane);
        CHECK((twice.points() - cloud.points()).norm() < 1e-10);

        // Points projected onto the plane are fixed by the reflection.
        for (Eigen::Index i = 0; i < cloud.size(); ++i) {
            const Vector on_plane = plane.project(cloud.point(i));
            CHECK(std::abs(plane.offset_of(on_plane)) < 1e-12);
            CHECK((plane.reflect(on_plane) - on_plane).norm() < 1e-12);
        }
    }
}

TEST_CASE("reflection composed with a rotation is orthogonal with det -1") {
    Rng rng(13);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Vector v = rng.unit_vector(dim);
        const Matrix r = random_rotation(dim, rng);
        const Matrix t = reflection_matrix(v) * r.transpose();
        const Matrix gram = t.transpose() * t;
        CHECK((gram - Matrix::Identity(dim, dim)).norm() < 1e-10);
        CHECK(t.determinant() == doctest::Approx(-1.0).epsilon(1e-9));
    }
}

TEST_CASE("eigenvector of eigenvalue -1 for a known composition") {
    // S_{(1,0)} * rot(60 deg)^T = [[-1/2, -s3/2], [-s3/2, 1/2]]; its -1
    // eigenvector is (s3/2, 1/2): the plane normal halfway through the
    // rotation, as the theory demands.
    const double s3 = std::sqrt(3.0);
    Matrix t(2, 2);
    t << -0.5, -s3 / 2.0, -s3 / 2.0, 0.5;
    const EigenPair pair = eigenvector_minus_one(t);
    CHECK(pair.eigenvalue == doctest::Approx(-1.0));
    CHECK(pair.eigenvector[0] == doctest::Approx(s3 / 2.0));
    CHECK(pair.eigenvector[1] == doctest::Approx(0.5));
    CHECK((t * pair.eigenvector + pair.eigenvector).norm() < 1e-9);
}

TEST_CASE("matrices without a -1 eigenvalue are rejected") {
    const double a = 10.0 * M_PI / 180.0;
    Matrix rot(2, 2);
    rot << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
    CHECK_THROWS_AS(eigenvector_minus_one(rot), NonReflectionError);
    try {
        eigenvector_minus_one(rot);
    } catch (const NonReflectionError& e) {
        // The diagnostic must carry one of the two conjugate eigenvalues
        // e^{+-10i deg}, which live on the unit circle.
        CHECK(std::abs(e.closest_eigenvalue.real() - std::cos(a)) < 1e-9);
        CHECK(std::abs(std::abs(e.closest_eigenvalue.imag()) - std::sin(a)) <
              1e-9);
    }
}

TEST_CASE("orthonormalize_rotation recovers a rotation from a noisy matrix") {
    Rng rng(29);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Matrix r = random_rotation(dim, rng);
        Matrix noisy = r;
        for (Eigen::Index i = 0; i < dim; ++i)
            for (Eigen::Index j = 0; j < dim; ++j)
                noisy(i, j) += 1e-4 * rng.normal();
        const Matrix fixed = orthonormalize_rotation(noisy);
        CHECK((fixed.transpose() * fixed - Matrix::Identity(dim, dim)).norm() <
              1e-12);
        CHECK(fixed.determinant() == doctest::Approx(1.0));
        CHECK((fixed - r).norm() < 1e-3);
    }
}

TEST_CASE("plane recovery from an exact synthetic registration") {
    // If the data is symmetric about plane W and we reflect about plane V,
    // the exact registration back onto the data is R = S_w S_v,
    // t = 2 d_w w - R (2 d_v v). The recovered plane must be W.
    Rng rng(41);
    for (int rep = 0; rep < 500; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Hyperplane truth = random_plane(dim, rng);
        const Hyperplane initial = random_plane(dim, rng);

        const Matrix r =
            reflection_matrix(truth.normal()) * reflection_matrix(initial.normal());
        const Vector t = 2.0 * truth.signed_distance() * truth.normal() -
                         r * (2.0 * initial.signed_distance() * initial.normal());

        const Hyperplane recovered =
            symmetry_plane_from_registration(initial, RigidTransform(r, t));
        const PlaneSeparation gap = plane_angle_distance(recovered, truth);
        CHECK(gap.angle_rad < 1e-7);
        CHECK(gap.offset < 1e-7);
    }
}

TEST_CASE("plane recovery maps reflected points onto their sources") {
    // End-to-end identity on the points themselves: reflecting about the
    // recovered plane must equal reflect-then-register about the initial one.
    Rng rng(43);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Hyperplane truth = random_plane(dim, rng);
        const Hyperplane initial = random_plane(dim, rng);
        const Matrix r =
            reflection_matrix(truth.normal()) * reflection_matrix(initial.normal());
        const Vector t = 2.0 * truth.signed_distance() * truth.normal() -
                         r * (2.0 * initial.signed_distance() * initial.normal());
        const RigidTransform reg(r, t);

        const Hyperplane recovered = symmetry_plane_from_registration(initial, reg);
        const PointCloud cloud = random_cloud(6, dim, rng);
        const PointCloud via_recovered = reflect_points(cloud, recovered);
        const PointCloud via_registration =
            reg.apply(reflect_points(cloud, initial));
        CHECK((via_recovered.points() - via_registration.points()).norm() < 1e-8);
    }
}

TEST_CASE("midpoints of two small clouds") {
    Matrix a(2, 2), b(2, 2);
    a << 0, 0, 2, 2;
    b << 2, 0, 4, 2;
    const PointCloud mid = midpoints(PointCloud(a), PointCloud(b));
    CHECK(mid.points()(0, 0) == doctest::Approx(1.0));
    CHECK(mid.points()(0, 1) == doctest::Approx(0.0));
    CHECK(mid.points()(1, 0) == doctest::Approx(3.0));
    CHECK(mid.points()(1, 1) == doctest::Approx(2.0));

    Matrix c(1, 2);
    c << 0, 0;
    CHECK_THROWS_AS(midpoints(PointCloud(a), PointCloud(c)),
                    DimensionMismatchError);
}

TEST_CASE("midpoints between points and their mirror images lie on the plane") {
    Rng rng(53);
    for (int rep = 0; rep < 200; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Hyperplane plane = random_plane(dim, rng);
        const PointCloud cloud = random_cloud(10, dim, rng);
        const PointCloud mid = midpoints(cloud, reflect_points(cloud, plane));
        for (Eigen::Index i = 0; i < mid.size(); ++i) {
            CHECK(std::abs(plane.offset_of(mid.point(i))) < 1e-10);
        }
    }
}

TEST_CASE("plane fit to midpoints recovers the mirror plane") {
    Rng rng(59);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const Hyperplane plane = random_plane(dim, rng);
        const PointCloud cloud = random_cloud(3 * dim, dim, rng);
        const PointCloud mid = midpoints(cloud, reflect_points(cloud, plane));
        const Hyperplane fitted = fit_plane_to_midpoints(mid);
        const PlaneSeparation gap = plane_angle_distance(fitted, plane);
        // acos near 0 resolves angles only to sqrt(machine eps) ~ 1.5e-8.
        CHECK(gap.angle_rad < 1e-7);
        CHECK(gap.offset < 1e-8);
    }
}

TEST_CASE("plane fit rejects rank-deficient midpoints") {
    // All midpoints identical: no plane direction is determined.
    Matrix same(4, 3);
    same.setOnes();
    CHECK_THROWS_AS(fit_plane_to_midpoints(PointCloud(same)),
                    DegenerateInputError);

    // Collinear midpoints in 3D span one direction, not the two required.
    Matrix line(5, 3);
    for (int i = 0; i < 5; ++i) line.row(i) << i, 2.0 * i, -i;
    CHECK_THROWS_AS(fit_plane_to_midpoints(PointCloud(line)),
                    DegenerateInputError);

    Matrix tiny(2, 3);
    tiny.setZero();
    CHECK_THROWS_AS(fit_plane_to_midpoints(PointCloud(tiny)),
                    DegenerateInputError);
}

TEST_CASE("plane separation folds normal sign away") {
    const Hyperplane a(vec2(1.0, 0.0), vec2(1.0, 0.0));
    const Hyperplane b(vec2(-1.0, 0.0), vec2(1.0, 5.0));  // same plane
    const PlaneSeparation gap = plane_angle_distance(a, b);
    CHECK(gap.angle_rad == doctest::Approx(0.0));
    CHECK(gap.offset == doctest::Approx(0.0));

    const Hyperplane c(vec2(0.6, 0.8), vec2(0.0, 0.0));
    const PlaneSeparation tilted = plane_angle_distance(a, c);
    CHECK(tilted.angle_rad == doctest::Approx(std::acos(0.6)));
    CHECK(tilted.offset == doctest::Approx(0.6));
}

TEST_CASE("bbox diagonal") {
    Matrix m(3, 2);
    m << 0, 0, 3, 0, 3, 4;
    CHECK(bbox_diagonal(PointCloud(m)) == doctest::Approx(5.0));
    CHECK(bbox_diagonal(PointCloud(Matrix(0, 2))) == doctest::Approx(0.0));
    Matrix one(1, 2);
    one << 9, 9;
    CHECK(bbox_diagonal(PointCloud(one)) == doctest::Approx(0.0));
}

TEST_CASE("rigid transform compose, inverse, apply") {
    Rng rng(61);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::Index dim = 2 + rng.uniform_int(4);
        const RigidTransform g(random_rotation(dim, rng), rng.gaussian_vector(dim));
        const RigidTransform h(random_rotation(dim, rng), rng.gaussian_vector(dim));
        const Vector x = rng.gaussian_vector(dim);
        CHECK((g.compose(h).apply(x) - g.apply(h.apply(x))).norm() < 1e-12);
        CHECK((g.inverse().apply(g.apply(x)) - x).norm() < 1e-12);
    }
}
