#include "msr/evaluation.hpp"
#include "msr/io.hpp"
#include "msr/report.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

using namespace msr;

namespace {

namespace fs = std::filesystem;

// Scratch directory removed with everything written into it.
struct TempDir {
    fs::path path;

    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("msr_cli_test_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    fs::path file(const std::string& name) const { return path / name; }
};

// Runs the installed binary; returns its exit code.
int run_cli(const std::string& args, const std::string& env_prefix = "") {
    const std::string cmd = env_prefix + "\"" + MSR_CLI_PATH + "\" " + args +
                            " > /dev/null 2> /dev/null";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string quoted(const fs::path& p) { return "\"" + p.string() + "\""; }

// nx,..,cx,.. flag value for a plane, full precision.
std::string plane_flag(const Hyperplane& plane) {
    std::ostringstream out;
    out.precision(17);
    for (Eigen::Index i = 0; i < plane.dimension(); ++i) {
        if (i) out << ',';
        out << plane.normal()(i);
    }
    for (Eigen::Index i = 0; i < plane.dimension(); ++i) {
        out << ',' << plane.anchor()(i);
    }
    return out.str();
}

double angle_deg_between(const Vector& a, const Vector& b) {
    const double c = std::clamp(std::abs(a.normalized().dot(b.normalized())),
                                0.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

}  // namespace

TEST_CASE("synth mirrored-image pins the requested axis column") {
    TempDir dir;
    const fs::path out = dir.file("synth");
    REQUIRE(run_cli("synth mirrored-image --width 200 --height 160 "
                    "--axis-column 77 --seed 42 --out-dir " +
                    quoted(out)) == 0);

    // Ground truth is the vertical segment x=77 spanning the image.
    const auto gt = load_ground_truth(out / "gt.csv");
    REQUIRE(gt.size() == 1);
    CHECK(gt[0].image_id == "img_000");
    CHECK(gt[0].a == Eigen::Vector2d(77.0, 0.0));
    CHECK(gt[0].b == Eigen::Vector2d(77.0, 159.0));

    // The emitted image really is mirror-symmetric about that column.
    const ImageGrid img = load_image(out / "img_000.png");
    REQUIRE(img.width == 200);
    REQUIRE(img.height == 160);
    double worst = 0.0;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x <= 77; ++x) {
            const int mx = 2 * 77 - x;
            if (mx >= img.width) continue;
            worst = std::max(worst, std::abs(img.at(x, y) - img.at(mx, y)));
        }
    }
    CHECK(worst < 1.0 / 255.0 + 1e-9);

    const RunReport report = run_report_from_json(read_json(out / "result.json"));
    CHECK(report.command == "synth");
    CHECK(report.seed == 42);
    REQUIRE(report.results.at("items").size() == 1);
}

TEST_CASE("detect2d recovers the planted axis and caps lines at k") {
    TempDir dir;
    const fs::path synth = dir.file("synth");
    REQUIRE(run_cli("synth mirrored-image --width 200 --height 160 "
                    "--axis-column 77 --seed 42 --out-dir " +
                    quoted(synth)) == 0);
    const fs::path out = dir.file("det");
    REQUIRE(run_cli("detect2d " + quoted(synth / "img_000.png") +
                    " --k 3 --seed 7 --out-dir " + quoted(out)) == 0);

    // Result document round-trips losslessly: parse, rebuild, re-serialize.
    const std::string raw = read_bytes(out / "result.json");
    const Json doc = read_json(out / "result.json");
    const RunReport report = run_report_from_json(doc);
    std::ostringstream rebuilt;
    rebuilt << to_json(report).dump(2) << '\n';
    CHECK(rebuilt.str() == raw);
    CHECK(report.command == "detect2d");

    const Json& lines = report.results.at("lines");
    REQUIRE(lines.size() >= 1);
    REQUIRE(lines.size() <= 3);  // --k contract
    const Hyperplane top = hyperplane_from_json(lines[0].at("line"));
    Vector vertical(2);
    vertical << 1.0, 0.0;
    CHECK(angle_deg_between(top.normal(), vertical) < 1.0);
    CHECK(top.signed_distance() == doctest::Approx(77.0).epsilon(0.03));

    // detections.csv agrees with the ground truth under the line metric.
    const auto rows = load_detections(out / "detections.csv");
    REQUIRE(!rows.empty());
    CHECK(rows.size() <= 3);
    CHECK(rows[0].rank == 1);
    const auto gt = load_ground_truth(synth / "gt.csv");
    CHECK(line_correct({rows[0].a, rows[0].b}, gt[0]));

    // Overlay is a readable PNG of the input's size.
    const ImageGrid overlay = load_image(out / "overlay.png");
    CHECK(overlay.width == 200);
    CHECK(overlay.height == 160);
}

TEST_CASE("detect2d fails cleanly on a blank image") {
    TempDir dir;
    const fs::path blank = dir.file("blank.pgm");
    {
        std::ofstream out(blank);
        out << "P2\n260 200\n255\n";
        for (int i = 0; i < 260 * 200; ++i) out << "128 ";
        out << "\n";
    }
    const fs::path outdir = dir.file("out");
    CHECK(run_cli("detect2d " + quoted(blank) + " --out-dir " + quoted(outdir)) !=
          0);
    CHECK(!fs::exists(outdir / "result.json"));
}

TEST_CASE("detect3d recovers a planted plane and emits projections") {
    TempDir dir;
    const fs::path synth = dir.file("synth");
    REQUIRE(run_cli("synth planted-plane-cloud --points 300 --noise 0.005 "
                    "--seed 9 --out-dir " +
                    quoted(synth)) == 0);
    const Json truth_doc = read_json(synth / "result.json");
    const Hyperplane truth = hyperplane_from_json(
        truth_doc.at("results").at("items")[0].at("plane"));

    const fs::path out = dir.file("det");
    REQUIRE(run_cli("detect3d " + quoted(synth / "cloud_000.txt") +
                    " --midpoints --out-dir " + quoted(out)) == 0);

    const RunReport report = run_report_from_json(read_json(out / "result.json"));
    const SymmetryDetection detection =
        detection_from_json(report.results.at("detection"));
    CHECK(angle_deg_between(detection.plane.normal(), truth.normal()) < 2.0);

    const PointCloud cloud = load_point_cloud(synth / "cloud_000.txt");
    const double scale = bbox_diagonal(cloud);
    CHECK(std::abs(detection.plane.signed_distance() -
                   truth.signed_distance()) < 0.02 * scale);

    for (int i = 0; i < 3; ++i) {
        const std::string svg =
            read_bytes(out / ("projection_" + std::to_string(i) + ".svg"));
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("<circle") != std::string::npos);
    }

    // Midpoints of registered mirror correspondences hug the plane.
    const PointCloud midpoints = load_point_cloud(out / "midpoints.txt");
    REQUIRE(midpoints.size() == cloud.size());
    double mean_offset = 0.0;
    for (Eigen::Index i = 0; i < midpoints.size(); ++i) {
        mean_offset += std::abs(detection.plane.offset_of(midpoints.point(i)));
    }
    mean_offset /= static_cast<double>(midpoints.size());
    CHECK(mean_offset < 0.02 * scale);
}

TEST_CASE("detect3d honors --initial-plane as the sole start") {
    TempDir dir;
    const fs::path synth = dir.file("synth");
    REQUIRE(run_cli("synth planted-plane-cloud --points 200 --noise 0 "
                    "--seed 3 --out-dir " +
                    quoted(synth)) == 0);
    const Hyperplane truth = hyperplane_from_json(
        read_json(synth / "result.json").at("results").at("items")[0].at(
            "plane"));

    const fs::path out = dir.file("det");
    REQUIRE(run_cli("detect3d " + quoted(synth / "cloud_000.txt") +
                    " --initial-plane " + plane_flag(truth) + " --out-dir " +
                    quoted(out)) == 0);
    const SymmetryDetection detection = detection_from_json(
        run_report_from_json(read_json(out / "result.json"))
            .results.at("detection"));
    CHECK(detection.diagnostics.size() == 1);  // one start, no canonical fan-out
    CHECK(detection.initial_plane_index == 0);
    CHECK(angle_deg_between(detection.plane.normal(), truth.normal()) < 0.1);

    // A degenerate cloud exits nonzero.
    const fs::path tiny = dir.file("tiny.txt");
    {
        std::ofstream f(tiny);
        f << "0 0 0\n1 0 0\n0 1 0\n";
    }
    CHECK(run_cli("detect3d " + quoted(tiny) + " --out-dir " +
                  quoted(dir.file("x"))) != 0);
}

TEST_CASE("eval reproduces a perfect top-1 fixture and handles empties") {
    TempDir dir;

    // Three exactly mirrored images at distinct columns.
    std::vector<fs::path> dets;
    for (int i = 0; i < 3; ++i) {
        const int column = 70 + 30 * i;
        const fs::path synth = dir.file("synth" + std::to_string(i));
        REQUIRE(run_cli("synth mirrored-image --width 220 --height 170 "
                        "--axis-column " +
                        std::to_string(column) + " --seed " +
                        std::to_string(100 + i) + " --out-dir " +
                        quoted(synth)) == 0);
        const fs::path det = dir.file("det" + std::to_string(i));
        REQUIRE(run_cli("detect2d " + quoted(synth / "img_000.png") +
                        " --k 3 --out-dir " + quoted(det)) == 0);
        dets.push_back(det / "detections.csv");
    }

    // Merge per-image outputs into one corpus (ids must differ).
    std::vector<DetectionRow> all_rows;
    std::vector<GroundTruthSegment> all_gt;
    for (int i = 0; i < 3; ++i) {
        for (DetectionRow row : load_detections(dets[static_cast<size_t>(i)])) {
            row.image_id = "img_" + std::to_string(i);
            all_rows.push_back(row);
        }
        auto gt = load_ground_truth(dir.file("synth" + std::to_string(i)) /
                                    "gt.csv");
        REQUIRE(gt.size() == 1);
        gt[0].image_id = "img_" + std::to_string(i);
        all_gt.push_back(gt[0]);
    }
    save_detections(all_rows, dir.file("all.csv"));
    save_ground_truth(all_gt, dir.file("gt.csv"));

    const fs::path out = dir.file("eval");
    REQUIRE(run_cli("eval --detections " + quoted(dir.file("all.csv")) +
                    " --ground-truth " + quoted(dir.file("gt.csv")) +
                    " --max-rank 5 --out-dir " + quoted(out)) == 0);

    const RunReport report = run_report_from_json(read_json(out / "result.json"));
    CHECK(report.results.at("top1_accuracy").get<double>() == 1.0);
    const Json& curve = report.results.at("curve");
    REQUIRE(curve.size() == 5);
    CHECK(curve[0].at("k") == 1);
    CHECK(curve[0].at("precision").get<double>() == 1.0);
    CHECK(curve[0].at("recall").get<double>() == 1.0);
    // Recall never decreases with K.
    for (size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].at("recall").get<double>() >=
              curve[i - 1].at("recall").get<double>());
    }

    // curve.csv carries the same numbers.
    const std::string csv = read_bytes(out / "curve.csv");
    CHECK(csv.rfind("k,precision,recall\n1,1,1\n", 0) == 0);
    CHECK(csv.find("# top1_accuracy 1\n") != std::string::npos);

    // Empty detections: precision and recall collapse to zero, still exit 0.
    save_detections({}, dir.file("none.csv"));
    const fs::path empty_out = dir.file("eval_empty");
    REQUIRE(run_cli("eval --detections " + quoted(dir.file("none.csv")) +
                    " --ground-truth " + quoted(dir.file("gt.csv")) +
                    " --out-dir " + quoted(empty_out)) == 0);
    const RunReport empty_report =
        run_report_from_json(read_json(empty_out / "result.json"));
    CHECK(empty_report.results.at("top1_accuracy").get<double>() == 0.0);
    CHECK(empty_report.results.at("curve")[0].at("precision").get<double>() ==
          0.0);
    CHECK(empty_report.results.at("curve")[0].at("recall").get<double>() == 0.0);
}

TEST_CASE("pair recovers mirrored skeleton couples") {
    TempDir dir;
    const fs::path synth = dir.file("synth");
    REQUIRE(run_cli("synth mirrored-skeletons --pairs 3 --jitter 0 --seed 4 "
                    "--out-dir " +
                    quoted(synth)) == 0);
    const Json truth = read_json(synth / "result.json");
    const Json& item = truth.at("results").at("items")[0];
    const Hyperplane plane = hyperplane_from_json(item.at("plane"));

    // With the exact plane given, the exact mirror pairs cost ~nothing.
    const fs::path given = dir.file("given");
    REQUIRE(run_cli("pair " + quoted(synth / "skeletons_000.txt") +
                    " --plane " + plane_flag(plane) + " --out-dir " +
                    quoted(given)) == 0);
    const RunReport report =
        run_report_from_json(read_json(given / "result.json"));
    CHECK(report.config.at("plane_source") == "given");
    const PairingResult pairing =
        pairing_from_json(report.results.at("pairing"));
    REQUIRE(pairing.pairs.size() == 3);
    CHECK(pairing.total_cost < 1e-9);
    for (const SkeletonPair& p : pairing.pairs) {
        bool found = false;
        for (const Json& tp : item.at("true_pairs")) {
            const int a = tp[0].get<int>(), b = tp[1].get<int>();
            found = found || (p.first == a && p.second == b) ||
                    (p.first == b && p.second == a);
        }
        CHECK(found);
        CHECK(p.mutual);
    }

    // Without --plane the command detects one from the pooled joints.
    const fs::path detected = dir.file("detected");
    REQUIRE(run_cli("pair " + quoted(synth / "skeletons_000.txt") +
                    " --out-dir " + quoted(detected)) == 0);
    const RunReport auto_report =
        run_report_from_json(read_json(detected / "result.json"));
    CHECK(auto_report.config.at("plane_source") == "detected");
    CHECK(pairing_from_json(auto_report.results.at("pairing")).pairs.size() ==
          3);

    // Fewer than two skeletons is an error.
    const fs::path one = dir.file("one.txt");
    {
        std::ofstream f(one);
        f << "> a\n0 0 0\n1 1 1\n";
    }
    CHECK(run_cli("pair " + quoted(one) + " --out-dir " +
                  quoted(dir.file("x"))) != 0);
}

TEST_CASE("fixed seeds give byte-identical files across runs and threads") {
    TempDir dir;
    const fs::path synth_a = dir.file("sa");
    const fs::path synth_b = dir.file("sb");
    const std::string synth_args =
        "synth mirrored-image --width 180 --height 140 --seed 11 --count 2 ";
    REQUIRE(run_cli(synth_args + "--out-dir " + quoted(synth_a)) == 0);
    REQUIRE(run_cli(synth_args + "--out-dir " + quoted(synth_b),
                    "OMP_NUM_THREADS=3 ") == 0);
    CHECK(read_bytes(synth_a / "img_000.png") ==
          read_bytes(synth_b / "img_000.png"));
    CHECK(read_bytes(synth_a / "img_001.png") ==
          read_bytes(synth_b / "img_001.png"));
    CHECK(read_bytes(synth_a / "gt.csv") == read_bytes(synth_b / "gt.csv"));
    CHECK(read_bytes(synth_a / "result.json") ==
          read_bytes(synth_b / "result.json"));

    const std::string det_args = "detect2d " +
                                 quoted(synth_a / "img_000.png") +
                                 " --k 2 --seed 5 --out-dir ";
    const fs::path det_a = dir.file("da");
    const fs::path det_b = dir.file("db");
    REQUIRE(run_cli(det_args + quoted(det_a), "OMP_NUM_THREADS=1 ") == 0);
    REQUIRE(run_cli(det_args + quoted(det_b), "OMP_NUM_THREADS=4 ") == 0);
    CHECK(read_bytes(det_a / "result.json") == read_bytes(det_b / "result.json"));
    CHECK(read_bytes(det_a / "overlay.png") == read_bytes(det_b / "overlay.png"));
    CHECK(read_bytes(det_a / "detections.csv") ==
          read_bytes(det_b / "detections.csv"));
}
