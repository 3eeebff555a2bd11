#include "msr/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace msr {

namespace {

std::string trim(const std::string& s) {
    size_t lo = 0, hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(trim(field));
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    size_t used = 0;
    try {
        out = std::stod(s, &used);
    } catch (const std::exception&) {
        return false;
    }
    return used == s.size() && std::isfinite(out);
}

// Direction error between two (orientation-free) directions, in degrees.
double direction_gap_deg(const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    const double c =
        std::clamp(std::abs(u.normalized().dot(v.normalized())), 0.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

}  // namespace

std::vector<GroundTruthSegment> load_ground_truth(
    const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) {
        throw ParseError("ground truth: cannot open " + csv_path.string());
    }

    std::vector<GroundTruthSegment> rows;
    std::vector<std::string> problems;
    std::string line;
    int line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;

        const std::vector<std::string> fields = split_csv(text);
        // One tolerated header row before any data.
        if (!seen_data && !fields.empty() && fields[0] == "image_id") continue;
        seen_data = true;

        if (fields.size() != 5) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": expected 5 fields, got " +
                               std::to_string(fields.size()));
            continue;
        }
        GroundTruthSegment seg;
        seg.image_id = fields[0];
        double coords[4];
        bool ok = !seg.image_id.empty();
        for (int i = 0; i < 4; ++i) {
            ok = ok && parse_double(fields[static_cast<size_t>(i) + 1], coords[i]);
        }
        if (!ok) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": malformed id or coordinate");
            continue;
        }
        seg.a = Eigen::Vector2d(coords[0], coords[1]);
        seg.b = Eigen::Vector2d(coords[2], coords[3]);
        if (seg.length() <= 0.0) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": endpoints coincide");
            continue;
        }
        rows.push_back(std::move(seg));
    }

    if (!problems.empty()) {
        std::string msg = "ground truth " + csv_path.string() + ": ";
        for (size_t i = 0; i < problems.size(); ++i) {
            if (i) msg += "; ";
            msg += problems[i];
        }
        throw ParseError(msg);
    }
    return rows;
}

GroundTruthSet group_ground_truth(const std::vector<GroundTruthSegment>& rows) {
    GroundTruthSet out;
    for (const GroundTruthSegment& row : rows) out[row.image_id].push_back(row);
    return out;
}

bool segment_correct(const Prediction& predicted, const GroundTruthSegment& truth,
                     const MetricConfig& config) {
    const Eigen::Vector2d pd = predicted.b - predicted.a;
    const Eigen::Vector2d td = truth.b - truth.a;
    if (pd.norm() <= 0.0 || td.norm() <= 0.0) return false;
    if (direction_gap_deg(pd, td) >= config.angle_threshold_deg) return false;
    const Eigen::Vector2d pc = 0.5 * (predicted.a + predicted.b);
    return (pc - truth.center()).norm() < config.center_fraction * truth.length();
}

bool line_correct(const Prediction& predicted, const GroundTruthSegment& truth,
                  const MetricConfig& config) {
    const Eigen::Vector2d pd = predicted.b - predicted.a;
    const Eigen::Vector2d td = truth.b - truth.a;
    if (pd.norm() <= 0.0 || td.norm() <= 0.0) return false;
    if (direction_gap_deg(pd, td) >= config.angle_threshold_deg) return false;
    // Distance from the annotation's center to the infinite predicted line.
    const Eigen::Vector2d n =
        Eigen::Vector2d(-pd.y(), pd.x()).normalized();
    const double dist = std::abs(n.dot(truth.center() - predicted.a));
    return dist < config.center_fraction * truth.length();
}

std::vector<PrPoint> precision_recall(const PredictionSet& predictions,
                                      const GroundTruthSet& truth, int max_rank,
                                      EvalMode mode, const MetricConfig& config) {
    if (max_rank < 1) {
        throw DegenerateInputError("precision_recall: max_rank must be >= 1");
    }
    std::string unknown;
    for (const auto& [id, _] : predictions) {
        if (truth.find(id) == truth.end()) {
            if (!unknown.empty()) unknown += ", ";
            unknown += id;
        }
    }
    if (!unknown.empty()) {
        throw ParseError("precision_recall: detections for unknown image ids: " +
                         unknown);
    }

    int total_truth = 0;
    for (const auto& [_, segs] : truth)
        total_truth += static_cast<int>(segs.size());

    const auto hit = [&](const Prediction& p, const GroundTruthSegment& g) {
        return mode == EvalMode::Segment ? segment_correct(p, g, config)
                                         : line_correct(p, g, config);
    };

    std::vector<PrPoint> curve;
    curve.reserve(static_cast<size_t>(max_rank));
    for (int k = 1; k <= max_rank; ++k) {
        int taken = 0, matched = 0;
        for (const auto& [id, preds] : predictions) {
            const auto& segs = truth.at(id);
            std::vector<char> claimed(segs.size(), 0);
            const int use = std::min<int>(k, static_cast<int>(preds.size()));
            taken += use;
            // Greedy by rank: each prediction claims the first annotation
            // (file order) it hits that is still free.
            for (int r = 0; r < use; ++r) {
                for (size_t g = 0; g < segs.size(); ++g) {
                    if (claimed[g] || !hit(preds[static_cast<size_t>(r)], segs[g]))
                        continue;
                    claimed[g] = 1;
                    ++matched;
                    break;
                }
            }
        }
        PrPoint pt;
        pt.k = k;
        pt.precision = taken > 0 ? static_cast<double>(matched) / taken : 0.0;
        pt.recall =
            total_truth > 0 ? static_cast<double>(matched) / total_truth : 0.0;
        curve.push_back(pt);
    }
    return curve;
}

}  // namespace msr
