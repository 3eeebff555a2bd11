#include "msr/geometry.hpp"
#include "msr/icp.hpp"
#include "msr/image.hpp"
#include "msr/nxc.hpp"
#include "msr/pairing.hpp"
#include "msr/pipeline.hpp"
#include "msr/types.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace py = pybind11;

namespace {

using ArrayF64 = py::array_t<double, py::array::c_style | py::array::forcecast>;

// (h, w) float array -> grayscale grid. Must run while the GIL is held.
msr::ImageGrid image_from_array(const ArrayF64& array) {
    if (array.ndim() != 2) {
        throw msr::DimensionMismatchError(
            "image: expected a 2-D (height, width) array");
    }
    msr::ImageGrid img(static_cast<int>(array.shape(1)),
                       static_cast<int>(array.shape(0)));
    std::memcpy(img.intensities.data(), array.data(),
                sizeof(double) * img.intensities.size());
    return img;
}

py::array_t<double> array_from_image(const msr::ImageGrid& img) {
    py::array_t<double> out({img.height, img.width});
    std::memcpy(out.mutable_data(), img.intensities.data(),
                sizeof(double) * img.intensities.size());
    return out;
}

std::vector<msr::Skeleton> make_skeletons(
    const std::vector<msr::Matrix>& joints) {
    std::vector<msr::Skeleton> skeletons(joints.size());
    for (size_t i = 0; i < joints.size(); ++i) {
        skeletons[i].points = joints[i];
        skeletons[i].id = std::to_string(i);
    }
    return skeletons;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Mirror-symmetry detection via reflect-and-register";
    m.attr("__version__") = "1.0.0";

    // Exception hierarchy: base first so derived translators run first.
    auto base = py::register_exception<msr::Error>(m, "MsrError",
                                                   PyExc_RuntimeError);
    py::register_exception<msr::DimensionMismatchError>(
        m, "DimensionMismatchError", base);
    py::register_exception<msr::DegenerateInputError>(m, "DegenerateInputError",
                                                      base);
    py::register_exception<msr::ParseError>(m, "ParseError", base);
    py::register_exception<msr::DetectionError>(m, "DetectionError", base);

    py::class_<msr::Hyperplane>(m, "Hyperplane",
                                "Affine hyperplane <x, normal> = d with a "
                                "unit, sign-canonical normal")
        .def(py::init<msr::Vector, msr::Vector>(), py::arg("normal"),
             py::arg("anchor"))
        .def_property_readonly("normal", &msr::Hyperplane::normal)
        .def_property_readonly("anchor", &msr::Hyperplane::anchor)
        .def_property_readonly("signed_distance",
                               &msr::Hyperplane::signed_distance)
        .def_property_readonly("dimension", &msr::Hyperplane::dimension)
        .def("offset_of", &msr::Hyperplane::offset_of, py::arg("x"),
             "Signed distance from x to the plane")
        .def("reflect", &msr::Hyperplane::reflect, py::arg("x"),
             "Mirror image of a single point")
        .def("project", &msr::Hyperplane::project, py::arg("x"))
        .def("__repr__", [](const msr::Hyperplane& p) {
            std::ostringstream out;
            out << "Hyperplane(normal=[" << p.normal().transpose()
                << "], d=" << p.signed_distance() << ")";
            return out.str();
        });

    py::class_<msr::RigidTransform>(m, "RigidTransform")
        .def(py::init<msr::Matrix, msr::Vector>(), py::arg("rotation"),
             py::arg("translation"))
        .def_readonly("rotation", &msr::RigidTransform::rotation)
        .def_readonly("translation", &msr::RigidTransform::translation)
        .def("apply",
             [](const msr::RigidTransform& t, const msr::Matrix& points) {
                 return t.apply(msr::PointCloud(points)).points();
             },
             py::arg("points"), "Applies the transform to rows of (n, d)");

    py::class_<msr::RegistrationResult>(m, "RegistrationResult")
        .def_readonly("transform", &msr::RegistrationResult::transform)
        .def_readonly("confidence", &msr::RegistrationResult::confidence)
        .def_readonly("rms_error", &msr::RegistrationResult::rms_error)
        .def_readonly("iterations_used",
                      &msr::RegistrationResult::iterations_used)
        .def_readonly("rms_history", &msr::RegistrationResult::rms_history);

    py::class_<msr::RunDiagnostic>(m, "RunDiagnostic")
        .def_readonly("initial_plane_index",
                      &msr::RunDiagnostic::initial_plane_index)
        .def_readonly("succeeded", &msr::RunDiagnostic::succeeded)
        .def_readonly("message", &msr::RunDiagnostic::message)
        .def_readonly("registration", &msr::RunDiagnostic::registration);

    py::class_<msr::SymmetryDetection>(m, "SymmetryDetection")
        .def_readonly("plane", &msr::SymmetryDetection::plane)
        .def_readonly("confidence", &msr::SymmetryDetection::confidence)
        .def_readonly("initial_plane_index",
                      &msr::SymmetryDetection::initial_plane_index)
        .def_readonly("ranked_alternatives",
                      &msr::SymmetryDetection::ranked_alternatives)
        .def_readonly("registration", &msr::SymmetryDetection::registration)
        .def_readonly("diagnostics", &msr::SymmetryDetection::diagnostics);

    py::class_<msr::SymmetrySegment>(m, "SymmetrySegment")
        .def_readonly("a", &msr::SymmetrySegment::a)
        .def_readonly("b", &msr::SymmetrySegment::b);

    py::class_<msr::SkeletonPair>(m, "SkeletonPair")
        .def_readonly("first", &msr::SkeletonPair::first)
        .def_readonly("second", &msr::SkeletonPair::second)
        .def_readonly("cost", &msr::SkeletonPair::cost)
        .def_readonly("mutual", &msr::SkeletonPair::mutual);

    py::class_<msr::PairingResult>(m, "PairingResult")
        .def_readonly("pairs", &msr::PairingResult::pairs)
        .def_readonly("unmatched", &msr::PairingResult::unmatched)
        .def_readonly("total_cost", &msr::PairingResult::total_cost);

    m.def(
        "reflect_points",
        [](const msr::Matrix& points, const msr::Hyperplane& plane) {
            return msr::reflect_points(msr::PointCloud(points), plane).points();
        },
        py::arg("points"), py::arg("plane"),
        "Reflects each row of (n, d) about the plane");

    m.def("symmetry_plane_from_registration",
          &msr::symmetry_plane_from_registration, py::arg("initial"),
          py::arg("registration"),
          "Plane of the reflection S composed with the registration fix-up");

    m.def(
        "icp_register",
        [](const msr::Matrix& moving, const msr::Matrix& target,
           int max_iterations, double trim_fraction,
           double convergence_threshold) {
            msr::IcpConfig config;
            config.max_iterations = max_iterations;
            config.trim_fraction = trim_fraction;
            config.convergence_threshold = convergence_threshold;
            return msr::icp_register(msr::PointCloud(moving),
                                     msr::PointCloud(target), config);
        },
        py::arg("moving"), py::arg("target"), py::kw_only(),
        py::arg("max_iterations") = 100, py::arg("trim_fraction") = 0.1,
        py::arg("convergence_threshold") = 1e-9,
        py::call_guard<py::gil_scoped_release>(),
        "Trimmed point-to-point ICP aligning `moving` onto `target`");

    m.def(
        "nxc_register",
        [](const ArrayF64& moving, const ArrayF64& target, int patch_size,
           int angles, double threshold, int max_side, int patches_per_angle,
           int top_k, std::uint64_t seed) {
            const msr::ImageGrid moving_img = image_from_array(moving);
            const msr::ImageGrid target_img = image_from_array(target);
            msr::NxcConfig config;
            config.patch_size = patch_size;
            config.num_angles = angles;
            config.correlation_threshold = threshold;
            config.max_side = max_side;
            config.patches_per_angle = patches_per_angle;
            config.top_k = top_k;
            config.seed = seed;
            py::gil_scoped_release release;
            return msr::nxc_register(moving_img, target_img, config);
        },
        py::arg("moving"), py::arg("target"), py::kw_only(),
        py::arg("patch_size") = 40, py::arg("angles") = 6,
        py::arg("threshold") = 0.25, py::arg("max_side") = 200,
        py::arg("patches_per_angle") = 300, py::arg("top_k") = 10,
        py::arg("seed") = 0,
        "Patch-consensus rigid registration of two equal-size images; "
        "returns candidates ranked by confidence");

    m.def(
        "detect_symmetry_points",
        [](const msr::Matrix& points,
           std::optional<std::vector<msr::Hyperplane>> initial_planes,
           int refine_rounds, int max_iterations, double trim_fraction) {
            msr::MsrConfig config;
            if (initial_planes) {
                config.initial_planes = std::move(*initial_planes);
            }
            config.refine_rounds = refine_rounds;
            config.icp.max_iterations = max_iterations;
            config.icp.trim_fraction = trim_fraction;
            return msr::detect_symmetry_points(msr::PointCloud(points), config);
        },
        py::arg("points"), py::kw_only(),
        py::arg("initial_planes") = std::nullopt,
        py::arg("refine_rounds") = 10, py::arg("max_iterations") = 100,
        py::arg("trim_fraction") = 0.1,
        py::call_guard<py::gil_scoped_release>(),
        "Mirror-symmetry plane of an (n, d) point cloud via "
        "reflect-register-extract");

    m.def(
        "detect_symmetry_2d",
        [](const ArrayF64& image,
           std::optional<msr::Hyperplane> initial_line, int patch_size,
           int angles, double threshold, int max_side, int top_k,
           std::uint64_t seed) {
            const msr::ImageGrid img = image_from_array(image);
            msr::MsrConfig config;
            config.backend = msr::Backend::Nxc;
            if (initial_line) config.initial_planes = {*initial_line};
            config.nxc.patch_size = patch_size;
            config.nxc.num_angles = angles;
            config.nxc.correlation_threshold = threshold;
            config.nxc.max_side = max_side;
            config.nxc.top_k = top_k;
            config.nxc.seed = seed;
            py::gil_scoped_release release;
            return msr::detect_symmetry_2d(img, config);
        },
        py::arg("image"), py::kw_only(),
        py::arg("initial_line") = std::nullopt, py::arg("patch_size") = 40,
        py::arg("angles") = 6, py::arg("threshold") = 0.25,
        py::arg("max_side") = 200, py::arg("top_k") = 10, py::arg("seed") = 0,
        "Ranked mirror-symmetry lines of a grayscale (h, w) array");

    m.def(
        "line_to_segment",
        [](const msr::Hyperplane& line, const ArrayF64& image) {
            const msr::ImageGrid img = image_from_array(image);
            py::gil_scoped_release release;
            return msr::line_to_segment(line, img);
        },
        py::arg("line"), py::arg("image"),
        "Trims a symmetry line to its gradient-supported extent");

    m.def(
        "dtw_cost",
        [](const msr::Matrix& a, const msr::Matrix& b, bool try_reversed,
           bool normalize) {
            msr::Skeleton sa, sb;
            sa.points = a;
            sb.points = b;
            msr::DtwOptions options;
            options.try_reversed = try_reversed;
            options.normalize_by_path_length = normalize;
            return msr::dtw_cost(sa, sb, options);
        },
        py::arg("a"), py::arg("b"), py::kw_only(),
        py::arg("try_reversed") = true, py::arg("normalize") = false,
        py::call_guard<py::gil_scoped_release>(),
        "Dynamic-time-warping distance between joint sequences");

    m.def(
        "pair_skeletons",
        [](const std::vector<msr::Matrix>& skeletons,
           const msr::Hyperplane& plane) {
            const std::vector<msr::Skeleton> built = make_skeletons(skeletons);
            py::gil_scoped_release release;
            return msr::pair_skeletons(built, plane);
        },
        py::arg("skeletons"), py::arg("plane"),
        "Pairs skeletons into mirror couples about the plane; pair indices "
        "refer to positions in the input list");

    // Round-trip helper so python-side fixtures can reuse the C++ raster ops.
    m.def(
        "gradient_magnitude",
        [](const ArrayF64& image) {
            return array_from_image(msr::gradient_magnitude(image_from_array(image)));
        },
        py::arg("image"));
}
