#include "msr/evaluation.hpp"
#include "msr/geometry.hpp"
#include "msr/io.hpp"
#include "msr/pairing.hpp"
#include "msr/pipeline.hpp"
#include "msr/report.hpp"
#include "msr/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace msr;

namespace {

struct Timer {
    std::chrono::steady_clock::time_point start =
        std::chrono::steady_clock::now();

    double ms() const {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - start)
            .count();
    }
};

void note_file(const fs::path& path) {
    std::cout << "wrote " << path.string() << "\n";
}

// "nx,...,cx,..." -> plane with normal = first half, anchor = second half.
Hyperplane parse_plane_flag(const std::string& text, Eigen::Index expected_dim) {
    std::vector<double> values;
    std::string field;
    std::istringstream in(text);
    while (std::getline(in, field, ',')) {
        try {
            size_t used = 0;
            values.push_back(std::stod(field, &used));
            if (used != field.size()) throw std::invalid_argument(field);
        } catch (const std::exception&) {
            throw ParseError("plane flag: bad number '" + field + "'");
        }
    }
    if (values.size() < 4 || values.size() % 2 != 0) {
        throw ParseError(
            "plane flag: expected an even list (normal coordinates, then "
            "anchor coordinates), got " +
            std::to_string(values.size()) + " values");
    }
    const Eigen::Index dim = static_cast<Eigen::Index>(values.size() / 2);
    if (expected_dim > 0 && dim != expected_dim) {
        throw ParseError("plane flag: plane lives in dimension " +
                         std::to_string(dim) + " but the input has dimension " +
                         std::to_string(expected_dim));
    }
    Vector normal(dim), anchor(dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        normal(i) = values[static_cast<size_t>(i)];
        anchor(i) = values[static_cast<size_t>(dim + i)];
    }
    return Hyperplane(normal, anchor);
}

std::string indexed_name(const char* prefix, int index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%03d", prefix, index);
    return buf;
}

std::string format_ms(double ms) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.1f ms", ms);
    return buf;
}

// ---------------------------------------------------------------------------
// detect2d

struct Detect2dOpts {
    std::string input;
    std::string out_dir = ".";
    std::string backend = "nxc";
    std::string initial_plane;
    int k = 5;
    std::uint64_t seed = 0;
    int patch_size = 40;
    int angles = 6;
    double threshold = 0.25;
    int max_side = 200;
};

int cmd_detect2d(const Detect2dOpts& opt) {
    Timer timer;
    const ImageGrid image = load_image(opt.input);

    MsrConfig config;
    config.backend = opt.backend == "icp" ? Backend::Icp : Backend::Nxc;
    config.nxc.patch_size = opt.patch_size;
    config.nxc.num_angles = opt.angles;
    config.nxc.correlation_threshold = opt.threshold;
    config.nxc.max_side = opt.max_side;
    config.nxc.seed = opt.seed;
    config.nxc.top_k = std::max(config.nxc.top_k, opt.k);
    if (!opt.initial_plane.empty()) {
        config.initial_planes = {parse_plane_flag(opt.initial_plane, 2)};
    }

    const std::vector<SymmetryDetection> detections =
        detect_symmetry_2d(image, config);
    const int k = std::min<int>(opt.k, static_cast<int>(detections.size()));

    const std::string image_id = fs::path(opt.input).stem().string();
    RgbImage overlay = RgbImage::from_grayscale(image);
    static const Rgb kLineColors[] = {{230, 40, 40},  {60, 120, 230},
                                      {60, 200, 90},  {230, 60, 200},
                                      {40, 200, 220}, {240, 160, 40}};
    // Lower ranks first so the best line stays on top.
    for (int i = k - 1; i >= 0; --i) {
        const auto clipped =
            clip_line_to_image(detections[i].plane, image.width, image.height);
        if (clipped) {
            draw_segment(overlay, clipped->first, clipped->second,
                         kLineColors[i % 6], 1);
        }
    }

    Json lines = Json::array();
    std::vector<DetectionRow> rows;
    for (int i = 0; i < k; ++i) {
        const SymmetryDetection& det = detections[static_cast<size_t>(i)];
        const SymmetrySegment segment = line_to_segment(det.plane, image);
        if (i == 0) {
            draw_segment(overlay, segment.a, segment.b, Rgb{250, 220, 50}, 3);
        }
        Json entry = Json::object();
        entry["rank"] = i + 1;
        entry["line"] = to_json(det.plane);
        entry["confidence"] = det.confidence;
        entry["segment"] = to_json(segment);
        lines.push_back(std::move(entry));
        DetectionRow row;
        row.image_id = image_id;
        row.rank = i + 1;
        row.a = segment.a;
        row.b = segment.b;
        row.confidence = det.confidence;
        rows.push_back(std::move(row));
    }

    RunReport report;
    report.command = "detect2d";
    report.input = opt.input;
    report.seed = opt.seed;
    report.config["backend"] = opt.backend;
    report.config["k"] = opt.k;
    report.config["patch_size"] = opt.patch_size;
    report.config["angles"] = opt.angles;
    report.config["threshold"] = opt.threshold;
    report.config["max_side"] = opt.max_side;
    if (!opt.initial_plane.empty()) {
        report.config["initial_plane"] = to_json(config.initial_planes[0]);
    }
    report.results["image"] = {{"width", image.width}, {"height", image.height}};
    report.results["lines"] = std::move(lines);

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    write_json(to_json(report), out / "result.json");
    note_file(out / "result.json");
    save_png(overlay, out / "overlay.png");
    note_file(out / "overlay.png");
    save_detections(rows, out / "detections.csv");
    note_file(out / "detections.csv");

    std::printf("detect2d: %d symmetry line(s), top confidence %.4f (%s)\n", k,
                detections[0].confidence, format_ms(timer.ms()).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// detect3d

struct Detect3dOpts {
    std::string input;
    std::string out_dir = ".";
    std::string backend = "icp";
    std::string initial_plane;
    std::uint64_t seed = 0;
    bool midpoints = false;
};

int cmd_detect3d(const Detect3dOpts& opt) {
    Timer timer;
    const PointCloud cloud = load_point_cloud(opt.input);

    MsrConfig config;
    config.backend = opt.backend == "nxc" ? Backend::Nxc : Backend::Icp;
    config.nxc.seed = opt.seed;
    if (!opt.initial_plane.empty()) {
        config.initial_planes = {
            parse_plane_flag(opt.initial_plane, cloud.dimension())};
    }

    const SymmetryDetection detection = detect_symmetry_points(cloud, config);

    RunReport report;
    report.command = "detect3d";
    report.input = opt.input;
    report.seed = opt.seed;
    report.config["backend"] = opt.backend;
    if (!opt.initial_plane.empty()) {
        report.config["initial_plane"] = to_json(config.initial_planes[0]);
    }
    report.results["cloud"] = {{"points", cloud.size()},
                               {"dimension", cloud.dimension()}};
    report.results["detection"] = to_json(detection);

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    write_json(to_json(report), out / "result.json");
    note_file(out / "result.json");

    // Views along mutually perpendicular axes; the first looks straight down
    // the plane normal, the others show the plane edge-on as a line.
    const Matrix basis = complete_basis(detection.plane.normal());
    const int views = std::min<int>(3, static_cast<int>(cloud.dimension()));
    for (int i = 0; i < views; ++i) {
        const fs::path svg = out / ("projection_" + std::to_string(i) + ".svg");
        save_svg_projection(cloud, basis.col(i), svg, &detection.plane);
        note_file(svg);
    }

    if (opt.midpoints) {
        // Midpoints between each point and its registered mirror image; for a
        // true symmetry these collapse onto the detected plane.
        const PointCloud mirrored = reflect_points(cloud, detection.plane);
        const PointCloud registered =
            detection.registration.transform.apply(mirrored);
        PointCloud mid(cloud.size(), cloud.dimension());
        mid.points() = 0.5 * (cloud.points() + registered.points());
        save_point_cloud(mid, out / "midpoints.txt");
        note_file(out / "midpoints.txt");
    }

    std::ostringstream normal_text;
    normal_text << detection.plane.normal().transpose();
    std::printf(
        "detect3d: plane normal [%s], signed distance %.6g, confidence %.4f "
        "(%s)\n",
        normal_text.str().c_str(), detection.plane.signed_distance(),
        detection.confidence, format_ms(timer.ms()).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// pair

struct PairOpts {
    std::string input;
    std::string out_dir = ".";
    std::string plane;
    std::string initial_plane;
    std::uint64_t seed = 0;
};

int cmd_pair(const PairOpts& opt) {
    Timer timer;
    const std::vector<Skeleton> skeletons = load_skeletons(opt.input);
    if (skeletons.size() < 2) {
        throw DegenerateInputError("pair: need at least 2 skeletons, got " +
                                   std::to_string(skeletons.size()));
    }

    RunReport report;
    report.command = "pair";
    report.input = opt.input;
    report.seed = opt.seed;

    std::optional<Hyperplane> plane;
    if (!opt.plane.empty()) {
        plane = parse_plane_flag(opt.plane, skeletons[0].dimension());
        report.config["plane_source"] = "given";
    } else {
        // Pool every joint and detect the mirror plane of the population.
        Eigen::Index total = 0;
        for (const Skeleton& s : skeletons) total += s.size();
        PointCloud pooled(total, skeletons[0].dimension());
        Eigen::Index row = 0;
        for (const Skeleton& s : skeletons) {
            pooled.points().middleRows(row, s.size()) = s.points;
            row += s.size();
        }
        MsrConfig config;
        if (!opt.initial_plane.empty()) {
            config.initial_planes = {
                parse_plane_flag(opt.initial_plane, pooled.dimension())};
        }
        const SymmetryDetection detection =
            detect_symmetry_points(pooled, config);
        plane = detection.plane;
        report.config["plane_source"] = "detected";
        report.results["detection"] = to_json(detection);
    }

    const PairingResult pairing = pair_skeletons(skeletons, *plane);

    Json ids = Json::array();
    for (const Skeleton& s : skeletons) ids.push_back(s.id);
    report.results["plane"] = to_json(*plane);
    report.results["ids"] = std::move(ids);
    report.results["pairing"] = to_json(pairing);

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    write_json(to_json(report), out / "result.json");
    note_file(out / "result.json");

    for (const SkeletonPair& p : pairing.pairs) {
        std::printf("  %s <-> %s  cost %.6g%s\n",
                    skeletons[static_cast<size_t>(p.first)].id.c_str(),
                    skeletons[static_cast<size_t>(p.second)].id.c_str(), p.cost,
                    p.mutual ? "" : "  (non-mutual)");
    }
    for (int index : pairing.unmatched) {
        std::printf("  %s unmatched\n",
                    skeletons[static_cast<size_t>(index)].id.c_str());
    }
    std::printf("pair: %zu pair(s), total cost %.6g (%s)\n",
                pairing.pairs.size(), pairing.total_cost,
                format_ms(timer.ms()).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
    std::string detections;
    std::string ground_truth;
    std::string out_dir = ".";
    std::string mode = "line";
    int max_rank = 10;
    double angle_thresh = 10.0;
    double center_frac = 0.2;
};

int cmd_eval(const EvalOpts& opt) {
    Timer timer;
    const PredictionSet predictions =
        group_detections(load_detections(opt.detections));
    const GroundTruthSet truth =
        group_ground_truth(load_ground_truth(opt.ground_truth));

    const EvalMode mode =
        opt.mode == "segment" ? EvalMode::Segment : EvalMode::Line;
    MetricConfig metric;
    metric.angle_threshold_deg = opt.angle_thresh;
    metric.center_fraction = opt.center_frac;

    const std::vector<PrPoint> curve =
        precision_recall(predictions, truth, opt.max_rank, mode, metric);

    // Top-1 accuracy: fraction of annotated images whose best-ranked
    // prediction hits one of their annotations.
    size_t hits = 0;
    for (const auto& [id, annotations] : truth) {
        const auto it = predictions.find(id);
        if (it == predictions.end() || it->second.empty()) continue;
        const Prediction& top = it->second.front();
        for (const GroundTruthSegment& gt : annotations) {
            const bool correct = mode == EvalMode::Line
                                     ? line_correct(top, gt, metric)
                                     : segment_correct(top, gt, metric);
            if (correct) {
                ++hits;
                break;
            }
        }
    }
    const double top1 =
        truth.empty() ? 0.0 : static_cast<double>(hits) / truth.size();

    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);
    {
        std::ofstream csv(out / "curve.csv");
        if (!csv) throw Error("cannot write " + (out / "curve.csv").string());
        csv << "k,precision,recall\n";
        char buf[96];
        for (const PrPoint& p : curve) {
            std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", p.k, p.precision,
                          p.recall);
            csv << buf;
        }
        std::snprintf(buf, sizeof buf, "# top1_accuracy %.17g\n", top1);
        csv << buf;
    }
    note_file(out / "curve.csv");

    RunReport report;
    report.command = "eval";
    report.input = opt.detections + " vs " + opt.ground_truth;
    report.config["mode"] = opt.mode;
    report.config["max_rank"] = opt.max_rank;
    report.config["angle_thresh"] = opt.angle_thresh;
    report.config["center_frac"] = opt.center_frac;
    Json points = Json::array();
    for (const PrPoint& p : curve) {
        points.push_back(
            {{"k", p.k}, {"precision", p.precision}, {"recall", p.recall}});
    }
    report.results["curve"] = std::move(points);
    report.results["top1_accuracy"] = top1;
    write_json(to_json(report), out / "result.json");
    note_file(out / "result.json");

    for (const PrPoint& p : curve) {
        std::printf("  k=%-2d precision %.4f recall %.4f\n", p.k, p.precision,
                    p.recall);
    }
    std::printf("eval: top-1 accuracy %.4f over %zu image(s) (%s)\n", top1,
                truth.size(), format_ms(timer.ms()).c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOpts {
    std::string kind;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    int count = 1;
    // mirrored-image
    int width = 260;
    int height = 200;
    std::optional<double> axis_angle;
    std::optional<double> axis_column;
    // planted-plane-cloud
    int points = 500;
    double noise = 0.01;
    // mirrored-skeletons
    int pairs = 3;
    double jitter = 0.01;
};

int cmd_synth(const SynthOpts& opt) {
    Timer timer;
    if (opt.count < 1) throw ParseError("synth: --count must be at least 1");
    Rng rng(opt.seed);
    fs::create_directories(opt.out_dir);
    const fs::path out(opt.out_dir);

    RunReport report;
    report.command = "synth";
    report.input = opt.kind;
    report.seed = opt.seed;
    report.config["count"] = opt.count;
    Json items = Json::array();
    std::vector<fs::path> written;

    if (opt.kind == "mirrored-image") {
        report.config["width"] = opt.width;
        report.config["height"] = opt.height;
        if (opt.axis_angle) report.config["axis_angle"] = *opt.axis_angle;
        if (opt.axis_column) report.config["axis_column"] = *opt.axis_column;
        std::vector<GroundTruthSegment> gt;
        for (int i = 0; i < opt.count; ++i) {
            synth::MirroredImage made = [&] {
                if (opt.axis_angle || opt.axis_column) {
                    const double offset_px =
                        opt.axis_column
                            ? *opt.axis_column - 0.5 * (opt.width - 1)
                            : 0.0;
                    return synth::mirrored_image(opt.width, opt.height,
                                                 opt.axis_angle.value_or(0.0),
                                                 offset_px, rng);
                }
                synth::MirroredImageParams params;
                params.width = opt.width;
                params.height = opt.height;
                return synth::random_mirrored_image(params, rng);
            }();
            const std::string id = indexed_name("img", i);
            const fs::path file = out / (id + ".png");
            save_png(made.image, file);
            written.push_back(file);
            GroundTruthSegment row;
            row.image_id = id;
            row.a = made.segment.a;
            row.b = made.segment.b;
            gt.push_back(std::move(row));
            Json item = Json::object();
            item["id"] = id;
            item["file"] = file.filename().string();
            item["axis"] = to_json(made.axis);
            item["segment"] = to_json(made.segment);
            items.push_back(std::move(item));
        }
        save_ground_truth(gt, out / "gt.csv");
        written.push_back(out / "gt.csv");
    } else if (opt.kind == "planted-plane-cloud") {
        report.config["points"] = opt.points;
        report.config["noise"] = opt.noise;
        for (int i = 0; i < opt.count; ++i) {
            const synth::PlantedCloud made =
                synth::planted_plane_cloud(opt.points, opt.noise, rng);
            const std::string id = indexed_name("cloud", i);
            const fs::path file = out / (id + ".txt");
            save_point_cloud(made.cloud, file);
            written.push_back(file);
            Json item = Json::object();
            item["id"] = id;
            item["file"] = file.filename().string();
            item["plane"] = to_json(made.plane);
            items.push_back(std::move(item));
        }
    } else if (opt.kind == "mirrored-skeletons") {
        report.config["pairs"] = opt.pairs;
        report.config["jitter"] = opt.jitter;
        for (int i = 0; i < opt.count; ++i) {
            const synth::MirroredSkeletons made =
                synth::mirrored_skeletons(opt.pairs, opt.jitter, rng);
            const std::string id = indexed_name("skeletons", i);
            const fs::path file = out / (id + ".txt");
            save_skeletons(made.skeletons, file);
            written.push_back(file);
            Json item = Json::object();
            item["id"] = id;
            item["file"] = file.filename().string();
            item["plane"] = to_json(made.plane);
            Json true_pairs = Json::array();
            for (const auto& [a, b] : made.true_pairs) {
                true_pairs.push_back(Json::array({a, b}));
            }
            item["true_pairs"] = std::move(true_pairs);
            items.push_back(std::move(item));
        }
    } else {
        throw ParseError("synth: unknown kind '" + opt.kind +
                         "' (expected mirrored-image, planted-plane-cloud, or "
                         "mirrored-skeletons)");
    }

    report.results["items"] = std::move(items);
    write_json(to_json(report), out / "result.json");
    written.push_back(out / "result.json");

    for (const fs::path& file : written) note_file(file);
    std::printf("synth %s: %d dataset(s) under %s (%s)\n", opt.kind.c_str(),
                opt.count, opt.out_dir.c_str(), format_ms(timer.ms()).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mirror-symmetry detection via reflect-and-register"};
    app.require_subcommand(1);

    Detect2dOpts d2;
    CLI::App* detect2d =
        app.add_subcommand("detect2d", "detect mirror-symmetry lines in an image");
    detect2d->add_option("image", d2.input, "PNG or PGM image")->required();
    detect2d->add_option("--out-dir", d2.out_dir, "output directory");
    detect2d->add_option("--backend", d2.backend, "registration backend")
        ->check(CLI::IsMember({"icp", "nxc"}));
    detect2d->add_option("--k", d2.k, "max lines reported");
    detect2d->add_option("--seed", d2.seed, "patch sampling seed");
    detect2d->add_option("--initial-plane", d2.initial_plane,
                         "initial line as nx,ny,cx,cy");
    detect2d->add_option("--patch-size", d2.patch_size, "correlation patch side");
    detect2d->add_option("--angles", d2.angles, "rotation grid size");
    detect2d->add_option("--threshold", d2.threshold, "correlation threshold");
    detect2d->add_option("--max-side", d2.max_side,
                         "downscale limit for the longer side");

    Detect3dOpts d3;
    CLI::App* detect3d = app.add_subcommand(
        "detect3d", "detect a mirror-symmetry plane in a point cloud");
    detect3d->add_option("cloud", d3.input, "point cloud text file")->required();
    detect3d->add_option("--out-dir", d3.out_dir, "output directory");
    detect3d->add_option("--backend", d3.backend, "registration backend")
        ->check(CLI::IsMember({"icp", "nxc"}));
    detect3d->add_option("--seed", d3.seed, "recorded in the report");
    detect3d->add_option("--initial-plane", d3.initial_plane,
                         "sole starting plane as nx,..,cx,..");
    detect3d->add_flag("--midpoints", d3.midpoints,
                       "dump midpoints between points and their registered "
                       "mirror images");

    PairOpts pr;
    CLI::App* pair =
        app.add_subcommand("pair", "pair mirror-symmetric skeletons");
    pair->add_option("skeletons", pr.input, "skeleton text file")->required();
    pair->add_option("--out-dir", pr.out_dir, "output directory");
    pair->add_option("--plane", pr.plane,
                     "mirror plane as nx,..,cx,.. (skips detection)");
    pair->add_option("--initial-plane", pr.initial_plane,
                     "sole starting plane for detection");
    pair->add_option("--seed", pr.seed, "recorded in the report");

    EvalOpts ev;
    CLI::App* eval =
        app.add_subcommand("eval", "precision/recall against ground truth");
    eval->add_option("--detections", ev.detections, "detections CSV")
        ->required();
    eval->add_option("--ground-truth", ev.ground_truth, "ground-truth CSV")
        ->required();
    eval->add_option("--out-dir", ev.out_dir, "output directory");
    eval->add_option("--mode", ev.mode, "correctness criterion")
        ->check(CLI::IsMember({"line", "segment"}));
    eval->add_option("--max-rank", ev.max_rank, "largest K in the curve");
    eval->add_option("--angle-thresh", ev.angle_thresh,
                     "max direction error, degrees");
    eval->add_option("--center-frac", ev.center_frac,
                     "center tolerance as a fraction of annotation length");

    SynthOpts sy;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "generate synthetic data with ground truth");
    synth_cmd
        ->add_option("kind", sy.kind,
                     "mirrored-image | planted-plane-cloud | mirrored-skeletons")
        ->required();
    synth_cmd->add_option("--out-dir", sy.out_dir, "output directory");
    synth_cmd->add_option("--seed", sy.seed, "generator seed");
    synth_cmd->add_option("--count", sy.count, "datasets to generate");
    synth_cmd->add_option("--width", sy.width, "image width");
    synth_cmd->add_option("--height", sy.height, "image height");
    synth_cmd->add_option("--axis-angle", sy.axis_angle,
                          "fix the axis tilt from vertical, degrees");
    synth_cmd->add_option("--axis-column", sy.axis_column,
                          "fix a vertical axis at this column");
    synth_cmd->add_option("--points", sy.points, "base points per cloud");
    synth_cmd->add_option("--noise", sy.noise,
                          "cloud noise sigma, fraction of bbox diagonal");
    synth_cmd->add_option("--pairs", sy.pairs, "mirrored skeleton pairs");
    synth_cmd->add_option("--jitter", sy.jitter,
                          "skeleton jitter sigma, fraction of bbox diagonal");

    CLI11_PARSE(app, argc, argv);

    try {
        if (detect2d->parsed()) return cmd_detect2d(d2);
        if (detect3d->parsed()) return cmd_detect3d(d3);
        if (pair->parsed()) return cmd_pair(pr);
        if (eval->parsed()) return cmd_eval(ev);
        if (synth_cmd->parsed()) return cmd_synth(sy);
    } catch (const DetectionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        for (const std::string& line : e.diagnostics) {
            std::cerr << "  - " << line << "\n";
        }
        return 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
