#include "msr/evaluation.hpp"

#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

using namespace msr;

namespace {

struct TempFile {
    std::filesystem::path path;

    explicit TempFile(const std::string& contents) {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("msr_eval_test_" + std::to_string(counter++) + ".csv");
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

Prediction pred(double x1, double y1, double x2, double y2) {
    return {Eigen::Vector2d(x1, y1), Eigen::Vector2d(x2, y2)};
}

GroundTruthSegment gt(const std::string& id, double x1, double y1, double x2,
                      double y2) {
    GroundTruthSegment g;
    g.image_id = id;
    g.a = Eigen::Vector2d(x1, y1);
    g.b = Eigen::Vector2d(x2, y2);
    return g;
}

}  // namespace

TEST_CASE("ground-truth CSV: header, comments, and data rows") {
    const TempFile file(
        "# synthetic annotations\n"
        "image_id,x1,y1,x2,y2\n"
        "\n"
        "img_000,10,0,10,199\n"
        "img_001, 5.5 , 1.25 ,120,30\n"
        "# trailing comment\n"
        "img_001,0,0,0,10\n");
    const auto rows = load_ground_truth(file.path);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].image_id == "img_000");
    CHECK(rows[0].a.x() == doctest::Approx(10.0));
    CHECK(rows[0].b.y() == doctest::Approx(199.0));
    CHECK(rows[1].a.x() == doctest::Approx(5.5));
    CHECK(rows[1].a.y() == doctest::Approx(1.25));
    CHECK(rows[2].image_id == "img_001");
    CHECK(rows[0].length() == doctest::Approx(199.0));
    CHECK(rows[0].center().y() == doctest::Approx(99.5));

    const auto grouped = group_ground_truth(rows);
    REQUIRE(grouped.size() == 2);
    CHECK(grouped.at("img_001").size() == 2);
}

TEST_CASE("ground-truth CSV: malformed rows are reported together") {
    const TempFile file(
        "image_id,x1,y1,x2,y2\n"
        "ok,0,0,1,1\n"
        "short,1,2\n"
        "bad_num,0,zero,1,1\n"
        "degenerate,3,3,3,3\n");
    try {
        load_ground_truth(file.path);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        const std::string what = e.what();
        CHECK(what.find("line 3") != std::string::npos);
        CHECK(what.find("line 4") != std::string::npos);
        CHECK(what.find("line 5") != std::string::npos);
        CHECK(what.find("coincide") != std::string::npos);
    }
}

TEST_CASE("ground-truth CSV: empty and missing files") {
    const TempFile empty("# nothing here\n");
    CHECK(load_ground_truth(empty.path).empty());
    CHECK_THROWS_AS(load_ground_truth("/nonexistent/gt.csv"), ParseError);
}

TEST_CASE("segment correctness thresholds") {
    const GroundTruthSegment truth = gt("a", 0, 0, 10, 0);  // length 10

    CHECK(segment_correct(pred(0, 1, 10, 1), truth));
    // Orientation-free: swapping endpoints changes nothing.
    CHECK(segment_correct(pred(10, 1, 0, 1), truth));
    // 15 degrees off: outside the 10 degree default.
    CHECK(!segment_correct(pred(0, 0, 10, 2.68), truth));
    // Exactly at the angle threshold: strict comparison fails.
    const double ten_deg = std::tan(10.0 * M_PI / 180.0) * 10.0;
    CHECK(!segment_correct(pred(0, 0, 10, ten_deg), truth));
    // Center 2.1 away with tolerance 0.2 * 10 = 2: too far; 1.9 passes.
    CHECK(!segment_correct(pred(0, 2.1, 10, 2.1), truth));
    CHECK(segment_correct(pred(0, 1.9, 10, 1.9), truth));
    // Exactly at the center threshold: strict comparison fails.
    CHECK(!segment_correct(pred(0, 2, 10, 2), truth));

    MetricConfig loose;
    loose.angle_threshold_deg = 30.0;
    loose.center_fraction = 0.5;
    CHECK(segment_correct(pred(0, 0, 10, 2.68), truth, loose));
}

TEST_CASE("line correctness ignores where the endpoints sit") {
    const GroundTruthSegment truth = gt("a", 0, 0, 10, 0);
    // A long line passing 1.5 above the annotation center: hit.
    CHECK(line_correct(pred(-100, 1.5, 100, 1.5), truth));
    // The same prediction as a segment misses: its midpoint is far away.
    CHECK(!segment_correct(pred(-100, 1.5, 100, 1.5), truth));
    // Parallel but 3 away: beyond 0.2 * 10.
    CHECK(!line_correct(pred(-100, 3, 100, 3), truth));
    // Right direction, passes through the center, wildly long: hit.
    CHECK(line_correct(pred(-1000, 0, 1000, 0), truth));
}

TEST_CASE("precision/recall: second-ranked hit counts at K=2") {
    GroundTruthSet truth;
    truth["img"] = {gt("img", 0, 0, 10, 0)};
    PredictionSet detections;
    detections["img"] = {pred(0, 0, 0, 10),   // perpendicular: wrong
                         pred(0, 0.5, 10, 0.5)};  // right

    const auto curve = precision_recall(detections, truth, 3, EvalMode::Segment);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].k == 1);
    CHECK(curve[0].precision == doctest::Approx(0.0));
    CHECK(curve[0].recall == doctest::Approx(0.0));
    CHECK(curve[1].precision == doctest::Approx(0.5));
    CHECK(curve[1].recall == doctest::Approx(1.0));
    // K beyond the available detections reuses all of them.
    CHECK(curve[2].precision == doctest::Approx(0.5));
    CHECK(curve[2].recall == doctest::Approx(1.0));
}

TEST_CASE("precision/recall: two images, one hit at K=1") {
    GroundTruthSet truth;
    truth["a"] = {gt("a", 0, 0, 10, 0)};
    truth["b"] = {gt("b", 0, 0, 0, 10)};
    PredictionSet detections;
    detections["a"] = {pred(0, 0.2, 10, 0.2)};  // hit
    detections["b"] = {pred(0, 0, 10, 0)};      // perpendicular: miss

    const auto curve = precision_recall(detections, truth, 1, EvalMode::Segment);
    CHECK(curve[0].precision == doctest::Approx(0.5));
    CHECK(curve[0].recall == doctest::Approx(0.5));
}

TEST_CASE("precision/recall: each annotation is claimed once") {
    GroundTruthSet truth;
    truth["img"] = {gt("img", 0, 0, 10, 0), gt("img", 0, 1, 10, 1)};
    PredictionSet detections;
    // Both predictions hit both annotations; greedy claiming pairs them off.
    detections["img"] = {pred(0, 0.4, 10, 0.4), pred(0, 0.6, 10, 0.6)};
    const auto curve = precision_recall(detections, truth, 2, EvalMode::Segment);
    CHECK(curve[1].precision == doctest::Approx(1.0));
    CHECK(curve[1].recall == doctest::Approx(1.0));

    // If only the first annotation is reachable, the duplicate goes unused.
    PredictionSet dup;
    dup["img"] = {pred(0, 0.1, 10, 0.1), pred(0, -0.1, 10, -0.1)};
    GroundTruthSet single;
    single["img"] = {gt("img", 0, 0, 10, 0)};
    const auto c2 = precision_recall(dup, single, 2, EvalMode::Segment);
    CHECK(c2[1].precision == doctest::Approx(0.5));
    CHECK(c2[1].recall == doctest::Approx(1.0));
}

TEST_CASE("precision/recall: images without detections still count in recall") {
    GroundTruthSet truth;
    truth["seen"] = {gt("seen", 0, 0, 10, 0)};
    truth["missed"] = {gt("missed", 0, 0, 10, 0)};
    PredictionSet detections;
    detections["seen"] = {pred(0, 0, 10, 0)};
    const auto curve = precision_recall(detections, truth, 1, EvalMode::Segment);
    CHECK(curve[0].precision == doctest::Approx(1.0));
    CHECK(curve[0].recall == doctest::Approx(0.5));
}

TEST_CASE("precision/recall: recall grows monotonically with K") {
    GroundTruthSet truth;
    PredictionSet detections;
    for (int i = 0; i < 6; ++i) {
        const std::string id = "img" + std::to_string(i);
        truth[id] = {gt(id, 0, 0, 10, 0)};
        std::vector<Prediction> preds;
        for (int r = 0; r < 5; ++r) {
            // The correct answer appears at a different rank per image.
            preds.push_back(r == i % 5 ? pred(0, 0.3, 10, 0.3)
                                       : pred(0, 0, 0, 10));
        }
        detections[id] = preds;
    }
    const auto curve = precision_recall(detections, truth, 8, EvalMode::Segment);
    for (size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].recall >= curve[i - 1].recall);
    }
    CHECK(curve.back().recall == doctest::Approx(1.0));
}

TEST_CASE("precision/recall rejects detections for unknown images") {
    GroundTruthSet truth;
    truth["known"] = {gt("known", 0, 0, 10, 0)};
    PredictionSet detections;
    detections["mystery"] = {pred(0, 0, 10, 0)};
    CHECK_THROWS_AS(precision_recall(detections, truth, 1, EvalMode::Line),
                    ParseError);
}
