#include "msr/report.hpp"

#include <cmath>
#include <fstream>
#include <utility>

namespace msr {

namespace {

Json vector_to_json(const Vector& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Json vector2_to_json(const Eigen::Vector2d& v) {
    return Json::array({v.x(), v.y()});
}

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

double finite_number(const Json& j, const char* what) {
    if (!j.is_number()) {
        throw ParseError(std::string("result document: ") + what +
                         " is not a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ParseError(std::string("result document: ") + what +
                         " is not finite");
    }
    return v;
}

Vector vector_from_json(const Json& j, const char* what) {
    if (!j.is_array()) {
        throw ParseError(std::string("result document: ") + what +
                         " is not an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = finite_number(j[i], what);
    }
    return v;
}

Eigen::Vector2d vector2_from_json(const Json& j, const char* what) {
    const Vector v = vector_from_json(j, what);
    if (v.size() != 2) {
        throw ParseError(std::string("result document: ") + what +
                         " must have exactly 2 entries");
    }
    return {v(0), v(1)};
}

Matrix matrix_from_json(const Json& j, const char* what) {
    if (!j.is_array() || j.empty()) {
        throw ParseError(std::string("result document: ") + what +
                         " is not a non-empty array of rows");
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Vector first = vector_from_json(j[0], what);
    Matrix m(rows, first.size());
    m.row(0) = first.transpose();
    for (Eigen::Index i = 1; i < rows; ++i) {
        const Vector row = vector_from_json(j[static_cast<size_t>(i)], what);
        if (row.size() != m.cols()) {
            throw ParseError(std::string("result document: ") + what +
                             " rows have inconsistent lengths");
        }
        m.row(i) = row.transpose();
    }
    return m;
}

const Json& require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        throw ParseError(std::string("result document: missing field '") + key +
                         "'");
    }
    return j.at(key);
}

std::string string_field(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_string()) {
        throw ParseError(std::string("result document: field '") + key +
                         "' is not a string");
    }
    return v.get<std::string>();
}

int int_field(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_number_integer()) {
        throw ParseError(std::string("result document: field '") + key +
                         "' is not an integer");
    }
    return v.get<int>();
}

bool bool_field(const Json& j, const char* key) {
    const Json& v = require(j, key);
    if (!v.is_boolean()) {
        throw ParseError(std::string("result document: field '") + key +
                         "' is not a boolean");
    }
    return v.get<bool>();
}

}  // namespace

Json to_json(const Hyperplane& plane) {
    Json j = Json::object();
    j["normal"] = vector_to_json(plane.normal());
    j["anchor"] = vector_to_json(plane.anchor());
    // Redundant with normal/anchor but convenient for downstream readers.
    j["signed_distance"] = plane.signed_distance();
    return j;
}

Hyperplane hyperplane_from_json(const Json& j) {
    const Vector normal = vector_from_json(require(j, "normal"), "normal");
    const Vector anchor = vector_from_json(require(j, "anchor"), "anchor");
    try {
        return Hyperplane::restore(normal, anchor);
    } catch (const Error& e) {
        throw ParseError(std::string("result document: bad plane: ") + e.what());
    }
}

Json to_json(const RigidTransform& transform) {
    Json j = Json::object();
    j["rotation"] = matrix_to_json(transform.rotation);
    j["translation"] = vector_to_json(transform.translation);
    return j;
}

RigidTransform rigid_transform_from_json(const Json& j) {
    Matrix rotation = matrix_from_json(require(j, "rotation"), "rotation");
    Vector translation =
        vector_from_json(require(j, "translation"), "translation");
    try {
        return RigidTransform(std::move(rotation), std::move(translation));
    } catch (const Error& e) {
        throw ParseError(std::string("result document: bad transform: ") +
                         e.what());
    }
}

Json to_json(const RegistrationResult& registration) {
    Json j = Json::object();
    j["transform"] = to_json(registration.transform);
    j["confidence"] = registration.confidence;
    j["rms_error"] = registration.rms_error;
    j["iterations_used"] = registration.iterations_used;
    j["rms_history"] = registration.rms_history;
    return j;
}

RegistrationResult registration_from_json(const Json& j) {
    RegistrationResult out;
    out.transform = rigid_transform_from_json(require(j, "transform"));
    out.confidence = finite_number(require(j, "confidence"), "confidence");
    out.rms_error = finite_number(require(j, "rms_error"), "rms_error");
    out.iterations_used = int_field(j, "iterations_used");
    const Json& history = require(j, "rms_history");
    if (!history.is_array()) {
        throw ParseError("result document: rms_history is not an array");
    }
    for (const Json& v : history) {
        out.rms_history.push_back(finite_number(v, "rms_history"));
    }
    return out;
}

Json to_json(const RunDiagnostic& diagnostic) {
    Json j = Json::object();
    j["initial_plane_index"] = diagnostic.initial_plane_index;
    j["succeeded"] = diagnostic.succeeded;
    j["message"] = diagnostic.message;
    j["registration"] = to_json(diagnostic.registration);
    return j;
}

RunDiagnostic run_diagnostic_from_json(const Json& j) {
    RunDiagnostic out;
    out.initial_plane_index = int_field(j, "initial_plane_index");
    out.succeeded = bool_field(j, "succeeded");
    out.message = string_field(j, "message");
    out.registration = registration_from_json(require(j, "registration"));
    return out;
}

Json to_json(const SymmetryDetection& detection) {
    Json j = Json::object();
    j["plane"] = to_json(detection.plane);
    j["confidence"] = detection.confidence;
    j["initial_plane_index"] = detection.initial_plane_index;
    Json ranked = Json::array();
    for (const auto& [plane, confidence] : detection.ranked_alternatives) {
        Json entry = Json::object();
        entry["plane"] = to_json(plane);
        entry["confidence"] = confidence;
        ranked.push_back(std::move(entry));
    }
    j["ranked_alternatives"] = std::move(ranked);
    j["registration"] = to_json(detection.registration);
    Json diagnostics = Json::array();
    for (const RunDiagnostic& d : detection.diagnostics) {
        diagnostics.push_back(to_json(d));
    }
    j["diagnostics"] = std::move(diagnostics);
    return j;
}

SymmetryDetection detection_from_json(const Json& j) {
    SymmetryDetection out(hyperplane_from_json(require(j, "plane")));
    out.confidence = finite_number(require(j, "confidence"), "confidence");
    out.initial_plane_index = int_field(j, "initial_plane_index");
    const Json& ranked = require(j, "ranked_alternatives");
    if (!ranked.is_array()) {
        throw ParseError("result document: ranked_alternatives is not an array");
    }
    for (const Json& entry : ranked) {
        out.ranked_alternatives.emplace_back(
            hyperplane_from_json(require(entry, "plane")),
            finite_number(require(entry, "confidence"), "confidence"));
    }
    out.registration = registration_from_json(require(j, "registration"));
    const Json& diagnostics = require(j, "diagnostics");
    if (!diagnostics.is_array()) {
        throw ParseError("result document: diagnostics is not an array");
    }
    for (const Json& d : diagnostics) {
        out.diagnostics.push_back(run_diagnostic_from_json(d));
    }
    return out;
}

Json to_json(const SymmetrySegment& segment) {
    Json j = Json::object();
    j["a"] = vector2_to_json(segment.a);
    j["b"] = vector2_to_json(segment.b);
    return j;
}

SymmetrySegment segment_from_json(const Json& j) {
    SymmetrySegment out;
    out.a = vector2_from_json(require(j, "a"), "a");
    out.b = vector2_from_json(require(j, "b"), "b");
    return out;
}

Json to_json(const SkeletonPair& pair) {
    Json j = Json::object();
    j["first"] = pair.first;
    j["second"] = pair.second;
    j["cost"] = pair.cost;
    j["mutual"] = pair.mutual;
    return j;
}

SkeletonPair skeleton_pair_from_json(const Json& j) {
    SkeletonPair out;
    out.first = int_field(j, "first");
    out.second = int_field(j, "second");
    out.cost = finite_number(require(j, "cost"), "cost");
    out.mutual = bool_field(j, "mutual");
    return out;
}

Json to_json(const PairingResult& pairing) {
    Json j = Json::object();
    Json pairs = Json::array();
    for (const SkeletonPair& p : pairing.pairs) pairs.push_back(to_json(p));
    j["pairs"] = std::move(pairs);
    j["unmatched"] = pairing.unmatched;
    j["total_cost"] = pairing.total_cost;
    return j;
}

PairingResult pairing_from_json(const Json& j) {
    PairingResult out;
    const Json& pairs = require(j, "pairs");
    if (!pairs.is_array()) {
        throw ParseError("result document: pairs is not an array");
    }
    for (const Json& p : pairs) out.pairs.push_back(skeleton_pair_from_json(p));
    const Json& unmatched = require(j, "unmatched");
    if (!unmatched.is_array()) {
        throw ParseError("result document: unmatched is not an array");
    }
    for (const Json& v : unmatched) {
        if (!v.is_number_integer()) {
            throw ParseError("result document: unmatched entries must be integers");
        }
        out.unmatched.push_back(v.get<int>());
    }
    out.total_cost = finite_number(require(j, "total_cost"), "total_cost");
    return out;
}

Json to_json(const RunReport& report) {
    Json j = Json::object();
    j["schema"] = report.schema;
    j["command"] = report.command;
    j["input"] = report.input;
    j["seed"] = report.seed;
    j["config"] = report.config;
    j["results"] = report.results;
    return j;
}

RunReport run_report_from_json(const Json& j) {
    RunReport out;
    out.schema = string_field(j, "schema");
    if (out.schema != kRunReportSchema) {
        throw ParseError("result document: unsupported schema '" + out.schema +
                         "'");
    }
    out.command = string_field(j, "command");
    out.input = string_field(j, "input");
    const Json& seed = require(j, "seed");
    if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
        throw ParseError("result document: field 'seed' is not an integer");
    }
    out.seed = seed.get<std::uint64_t>();
    out.config = require(j, "config");
    out.results = require(j, "results");
    return out;
}

void write_json(const Json& doc, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
    if (!out) throw Error("failed writing " + path.string());
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("json: cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("json " + path.string() + ": " + e.what());
    }
}

}  // namespace msr
