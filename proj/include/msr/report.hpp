#pragma once

#include "msr/pairing.hpp"
#include "msr/pipeline.hpp"
#include "msr/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace msr {

/// Insertion-ordered JSON so documents serialize with stable field order
/// (result files must be byte-identical across runs).
using Json = nlohmann::ordered_json;

inline constexpr const char* kRunReportSchema = "msr-report/1";

/// Machine-readable record of one command invocation. Timing is deliberately
/// absent: reports with the same inputs must serialize to the same bytes.
struct RunReport {
    std::string schema = kRunReportSchema;
    std::string command;            // subcommand that produced the report
    std::string input;              // input path or synthetic descriptor
    std::uint64_t seed = 0;
    Json config = Json::object();   // echo of the effective settings
    Json results = Json::object();  // command-specific payload
};

Json to_json(const Hyperplane& plane);
Json to_json(const RigidTransform& transform);
Json to_json(const RegistrationResult& registration);
Json to_json(const RunDiagnostic& diagnostic);
Json to_json(const SymmetryDetection& detection);
Json to_json(const SymmetrySegment& segment);
Json to_json(const SkeletonPair& pair);
Json to_json(const PairingResult& pairing);
Json to_json(const RunReport& report);

/// Parsers for the documents above. All throw ParseError on missing fields,
/// wrong shapes, or non-finite numbers.
Hyperplane hyperplane_from_json(const Json& j);
RigidTransform rigid_transform_from_json(const Json& j);
RegistrationResult registration_from_json(const Json& j);
RunDiagnostic run_diagnostic_from_json(const Json& j);
SymmetryDetection detection_from_json(const Json& j);
SymmetrySegment segment_from_json(const Json& j);
SkeletonPair skeleton_pair_from_json(const Json& j);
PairingResult pairing_from_json(const Json& j);
RunReport run_report_from_json(const Json& j);

/// Two-space-indented dump with a trailing newline.
void write_json(const Json& doc, const std::filesystem::path& path);
Json read_json(const std::filesystem::path& path);

}  // namespace msr
