#pragma once

#include "msr/geometry.hpp"
#include "msr/types.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace msr {

/// Annotated symmetry-axis segment for one image.
struct GroundTruthSegment {
    std::string image_id;
    Eigen::Vector2d a{0.0, 0.0};
    Eigen::Vector2d b{0.0, 0.0};

    Eigen::Vector2d center() const { return 0.5 * (a + b); }
    double length() const { return (b - a).norm(); }
};

/// Parses `image_id,x1,y1,x2,y2` rows. Blank lines and lines starting with
/// '#' are skipped; one optional header row is tolerated. Malformed rows are
/// all collected and reported together in a ParseError.
std::vector<GroundTruthSegment> load_ground_truth(
    const std::filesystem::path& csv_path);

/// A ranked prediction: a segment, or two distinct points spanning an
/// infinite line when only the direction and position matter.
struct Prediction {
    Eigen::Vector2d a{0.0, 0.0};
    Eigen::Vector2d b{0.0, 0.0};
};

struct MetricConfig {
    /// Maximum direction error, degrees (folded: orientation-free).
    double angle_threshold_deg = 10.0;
    /// Center / offset tolerance as a fraction of the annotation's length.
    double center_fraction = 0.2;
};

/// Segment-level hit test: direction within the angle threshold and segment
/// centers within center_fraction of the annotation length.
bool segment_correct(const Prediction& predicted, const GroundTruthSegment& truth,
                     const MetricConfig& config = {});

/// Line-level hit test: direction within the angle threshold and the
/// annotation's center within center_fraction of its length from the line.
bool line_correct(const Prediction& predicted, const GroundTruthSegment& truth,
                  const MetricConfig& config = {});

enum class EvalMode { Line, Segment };

/// Per-image ranked predictions / grouped annotations, keyed by image id.
using PredictionSet = std::map<std::string, std::vector<Prediction>>;
using GroundTruthSet = std::map<std::string, std::vector<GroundTruthSegment>>;

struct PrPoint {
    int k = 0;
    double precision = 0.0;
    double recall = 0.0;
};

/// Precision/recall as the rank cutoff K sweeps 1..max_rank. At each K the
/// top-K predictions of every image greedily claim the first unclaimed
/// annotation they hit (rank order, file order). Detections for ids missing
/// from the ground truth raise ParseError. Recall is monotone in K.
std::vector<PrPoint> precision_recall(const PredictionSet& predictions,
                                      const GroundTruthSet& truth, int max_rank,
                                      EvalMode mode,
                                      const MetricConfig& config = {});

/// Groups flat annotation rows by image id, preserving file order.
GroundTruthSet group_ground_truth(const std::vector<GroundTruthSegment>& rows);

}  // namespace msr
