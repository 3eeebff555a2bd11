#include "msr/io.hpp"
#include "msr/report.hpp"

#include "msr/random.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace msr;

namespace {

// Scratch directory removed with everything written into it.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static int counter = 0;
        path = std::filesystem::temp_directory_path() /
               ("msr_io_test_" + std::to_string(counter++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }

    std::filesystem::path file(const std::string& name) const {
        return path / name;
    }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ImageGrid test_pattern(int width, int height) {
    ImageGrid img(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            img.at(x, y) = 0.5 + 0.5 * std::sin(0.3 * x) * std::cos(0.2 * y);
        }
    }
    return img;
}

}  // namespace

TEST_CASE("grayscale PNG round-trips up to 8-bit quantization") {
    TempDir dir;
    const ImageGrid original = test_pattern(31, 17);
    const auto path = dir.file("gray.png");
    save_png(original, path);

    const ImageGrid loaded = load_image(path);
    REQUIRE(loaded.width == 31);
    REQUIRE(loaded.height == 17);
    for (int y = 0; y < 17; ++y) {
        for (int x = 0; x < 31; ++x) {
            const double quantized =
                std::lround(std::clamp(original.at(x, y), 0.0, 1.0) * 255.0) /
                255.0;
            CHECK(loaded.at(x, y) == doctest::Approx(quantized).epsilon(1e-9));
        }
    }
}

TEST_CASE("PNG writing is deterministic") {
    TempDir dir;
    const ImageGrid img = test_pattern(40, 25);
    save_png(img, dir.file("a.png"));
    save_png(img, dir.file("b.png"));
    const std::string a = read_bytes(dir.file("a.png"));
    CHECK(!a.empty());
    CHECK(a == read_bytes(dir.file("b.png")));
}

TEST_CASE("RGB overlay drawing and reload") {
    TempDir dir;
    ImageGrid base(21, 21, 1.0);  // white canvas
    RgbImage overlay = RgbImage::from_grayscale(base);
    draw_segment(overlay, {2.0, 10.0}, {18.0, 10.0}, Rgb{255, 0, 0}, 1);

    // The stroke is pure red, the rest untouched white.
    const size_t on = 3 * (10 * 21 + 10);
    CHECK(overlay.pixels[on] == 255);
    CHECK(overlay.pixels[on + 1] == 0);
    CHECK(overlay.pixels[on + 2] == 0);
    const size_t off = 3 * (static_cast<size_t>(5) * 21 + 10);
    CHECK(overlay.pixels[off + 1] == 255);

    const auto path = dir.file("overlay.png");
    save_png(overlay, path);
    const ImageGrid loaded = load_image(path);
    // Rec. 709 luminance of pure red.
    CHECK(loaded.at(10, 10) == doctest::Approx(0.2126).epsilon(1e-6));
    CHECK(loaded.at(10, 5) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("draw_segment covers steep lines without gaps and clips safely") {
    ImageGrid base(15, 15, 0.0);
    RgbImage img = RgbImage::from_grayscale(base);
    draw_segment(img, {7.0, -5.0}, {7.2, 20.0}, Rgb{0, 255, 0}, 1);
    for (int y = 0; y < 15; ++y) {
        // Every row the segment crosses has a green pixel at x=7.
        CHECK(img.pixels[3 * (static_cast<size_t>(y) * 15 + 7) + 1] == 255);
    }
}

TEST_CASE("plain and raw PGM load with comments and 16-bit samples") {
    TempDir dir;

    const auto plain = dir.file("plain.pgm");
    write_text(plain,
               "P2\n# a comment\n3 2\n# another\n4\n0 1 2\n3 4 0\n");
    const ImageGrid p2 = load_image(plain);
    REQUIRE(p2.width == 3);
    REQUIRE(p2.height == 2);
    CHECK(p2.at(0, 0) == doctest::Approx(0.0));
    CHECK(p2.at(1, 0) == doctest::Approx(0.25));
    CHECK(p2.at(1, 1) == doctest::Approx(1.0));

    const auto raw = dir.file("raw.pgm");
    write_text(raw, std::string("P5\n2 2\n255\n") +
                        std::string("\x00\x40\x80\xff", 4));
    const ImageGrid p5 = load_image(raw);
    REQUIRE(p5.width == 2);
    CHECK(p5.at(1, 0) == doctest::Approx(64.0 / 255.0));
    CHECK(p5.at(1, 1) == doctest::Approx(1.0));

    const auto wide = dir.file("wide.pgm");
    // Two-byte big-endian samples: 0x0100 = 256 of maxval 1000.
    write_text(wide, std::string("P5\n1 2\n1000\n") +
                         std::string("\x01\x00\x03\xe8", 4));
    const ImageGrid p16 = load_image(wide);
    CHECK(p16.at(0, 0) == doctest::Approx(0.256));
    CHECK(p16.at(0, 1) == doctest::Approx(1.0));
}

TEST_CASE("malformed images are rejected with ParseError") {
    TempDir dir;

    const auto missing = dir.file("nope.png");
    CHECK_THROWS_AS(load_image(missing), ParseError);

    const auto garbage = dir.file("garbage.bin");
    write_text(garbage, "this is not an image at all");
    CHECK_THROWS_AS(load_image(garbage), ParseError);

    const auto truncated = dir.file("short.pgm");
    write_text(truncated, std::string("P5\n4 4\n255\n") + "only-six");
    CHECK_THROWS_AS(load_image(truncated), ParseError);

    const auto overflow = dir.file("over.pgm");
    write_text(overflow, "P2\n1 1\n10\n11\n");
    CHECK_THROWS_AS(load_image(overflow), ParseError);

    const auto header = dir.file("badheader.pgm");
    write_text(header, "P2\n3 x\n255\n0 0 0\n");
    CHECK_THROWS_AS(load_image(header), ParseError);

    // A PNG signature followed by junk must not crash libpng.
    const auto fake_png = dir.file("fake.png");
    write_text(fake_png,
               std::string("\x89PNG\r\n\x1a\n", 8) + "nonsense payload");
    CHECK_THROWS_AS(load_image(fake_png), ParseError);
}

TEST_CASE("point cloud text round-trips exactly") {
    TempDir dir;
    Rng rng(11);
    PointCloud cloud(9, 4);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        for (Eigen::Index j = 0; j < 4; ++j) {
            cloud.points()(i, j) = rng.normal() * std::pow(10.0, double(j) - 2);
        }
    }
    cloud.points()(0, 0) = -1.0 / 3.0;  // needs all 17 digits

    const auto path = dir.file("cloud.txt");
    save_point_cloud(cloud, path);
    const PointCloud loaded = load_point_cloud(path);
    REQUIRE(loaded.size() == cloud.size());
    REQUIRE(loaded.dimension() == 4);
    CHECK(loaded.points() == cloud.points());  // bit-exact
}

TEST_CASE("point cloud parsing: comments, blanks, and malformed rows") {
    TempDir dir;
    const auto good = dir.file("good.txt");
    write_text(good, "# header comment\n\n1 2 3\n4 5 6  # trailing note\n");
    const PointCloud cloud = load_point_cloud(good);
    REQUIRE(cloud.size() == 2);
    CHECK(cloud.points()(1, 2) == 6.0);

    const auto empty = dir.file("empty.txt");
    write_text(empty, "# nothing here\n");
    CHECK(load_point_cloud(empty).empty());

    const auto ragged = dir.file("ragged.txt");
    write_text(ragged, "1 2 3\n4 5\n");
    CHECK_THROWS_WITH_AS(load_point_cloud(ragged),
                         doctest::Contains("line 2"), ParseError);

    const auto alpha = dir.file("alpha.txt");
    write_text(alpha, "1 2 three\n");
    CHECK_THROWS_AS(load_point_cloud(alpha), ParseError);

    CHECK_THROWS_AS(load_point_cloud(dir.file("absent.txt")), ParseError);
}

TEST_CASE("skeleton files round-trip with ids") {
    TempDir dir;
    std::vector<Skeleton> skeletons(2);
    skeletons[0].id = "left";
    skeletons[0].points = Matrix{{0.0, 0.0, 0.0}, {1.0, 0.5, -0.25}};
    skeletons[1].id = "right";
    skeletons[1].points = Matrix{{2.0, 1.0, 1.0 / 7.0}, {3.0, 1.5, 0.5}};

    const auto path = dir.file("skeletons.txt");
    save_skeletons(skeletons, path);
    const std::vector<Skeleton> loaded = load_skeletons(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].id == "left");
    CHECK(loaded[1].id == "right");
    CHECK(loaded[0].points == skeletons[0].points);
    CHECK(loaded[1].points == skeletons[1].points);
}

TEST_CASE("skeleton parsing conventions") {
    TempDir dir;

    // Headerless skeletons get index ids; blank runs separate.
    const auto bare = dir.file("bare.txt");
    write_text(bare, "0 0\n1 1\n\n\n2 2\n3 3\n");
    const std::vector<Skeleton> two = load_skeletons(bare);
    REQUIRE(two.size() == 2);
    CHECK(two[0].id == "0");
    CHECK(two[1].id == "1");

    // Blank lines between the header and its joints are padding.
    const auto padded = dir.file("padded.txt");
    write_text(padded, "> a\n\n0 0\n1 1\n");
    REQUIRE(load_skeletons(padded).size() == 1);

    const auto orphan = dir.file("orphan.txt");
    write_text(orphan, "> a\n> b\n0 0\n");
    CHECK_THROWS_WITH_AS(load_skeletons(orphan), doctest::Contains("'a'"),
                         ParseError);

    const auto mixed_dim = dir.file("mixed.txt");
    write_text(mixed_dim, "0 0 0\n\n1 1\n");
    CHECK_THROWS_AS(load_skeletons(mixed_dim), ParseError);

    const auto hollow = dir.file("hollow.txt");
    write_text(hollow, "# only a comment\n\n");
    CHECK(load_skeletons(hollow).empty());

    CHECK_THROWS_AS(load_skeletons(dir.file("none.txt")), ParseError);
}

TEST_CASE("complete_basis is orthonormal and deterministic") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int dim = 2 + static_cast<int>(rng.uniform_int(4));
        const Vector axis = rng.unit_vector(dim) * rng.uniform(0.5, 3.0);
        const Matrix basis = complete_basis(axis);
        REQUIRE(basis.rows() == dim);
        CHECK((basis.transpose() * basis - Matrix::Identity(dim, dim))
                  .cwiseAbs()
                  .maxCoeff() < 1e-12);
        CHECK((basis.col(0) - axis.normalized()).norm() < 1e-12);
        CHECK(basis == complete_basis(axis));
    }
    CHECK_THROWS_AS(complete_basis(Vector::Zero(3)), DegenerateInputError);
    CHECK_THROWS_AS(complete_basis(Vector::Ones(1)), DimensionMismatchError);
}

TEST_CASE("SVG projection renders every point and the plane trace") {
    TempDir dir;
    Rng rng(7);
    PointCloud cloud(40, 3);
    for (Eigen::Index i = 0; i < 40; ++i) {
        cloud.set_point(i, rng.gaussian_vector(3) * 2.0);
    }
    const Hyperplane plane(Vector{{1.0, 0.0, 0.0}}, Vector::Zero(3));
    Vector axis(3);
    axis << 0.0, 0.0, 1.0;  // view along z: the x-normal plane stays visible

    const auto path = dir.file("proj.svg");
    save_svg_projection(cloud, axis, path, &plane);
    const std::string svg = read_bytes(path);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("<line") != std::string::npos);
    size_t circles = 0;
    for (size_t pos = svg.find("<circle"); pos != std::string::npos;
         pos = svg.find("<circle", pos + 1)) {
        ++circles;
    }
    CHECK(circles == 40);

    // Viewing along the plane normal hides the plane: no line element.
    const auto along = dir.file("along.svg");
    save_svg_projection(cloud, plane.normal(), along, &plane);
    CHECK(read_bytes(along).find("<line") == std::string::npos);

    // Deterministic bytes.
    const auto again = dir.file("again.svg");
    save_svg_projection(cloud, axis, again, &plane);
    CHECK(read_bytes(again) == svg);

    CHECK_THROWS_AS(save_svg_projection(PointCloud(), axis, path),
                    DegenerateInputError);
    CHECK_THROWS_AS(save_svg_projection(cloud, Vector::Ones(2), path),
                    DimensionMismatchError);
}

TEST_CASE("detections CSV round-trips and groups by rank") {
    TempDir dir;
    std::vector<DetectionRow> rows;
    DetectionRow r;
    r.image_id = "img_b";
    r.rank = 2;
    r.a = {1.0, 2.0};
    r.b = {3.0, 4.5};
    r.confidence = 1.0 / 3.0;
    rows.push_back(r);
    r.rank = 1;
    r.a = {0.5, 0.25};
    r.confidence = 0.875;
    rows.push_back(r);
    r.image_id = "img_a";
    r.b = {7.0, -1.0};
    rows.push_back(r);

    const auto path = dir.file("detections.csv");
    save_detections(rows, path);
    const std::vector<DetectionRow> loaded = load_detections(path);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[0].image_id == "img_b");
    CHECK(loaded[0].rank == 2);
    CHECK(loaded[0].confidence == rows[0].confidence);  // exact
    CHECK(loaded[2].b == rows[2].b);

    const PredictionSet grouped = group_detections(loaded);
    REQUIRE(grouped.size() == 2);
    REQUIRE(grouped.at("img_b").size() == 2);
    // Rank 1 sorts ahead of rank 2 regardless of file order.
    CHECK(grouped.at("img_b")[0].a.x() == 0.5);
    CHECK(grouped.at("img_b")[1].a.x() == 1.0);

    const auto bad = dir.file("bad.csv");
    write_text(bad, "image_id,rank,x1,y1,x2,y2,confidence\nimg,0,1,2,3,4,0.5\n");
    CHECK_THROWS_AS(load_detections(bad), ParseError);  // rank must be >= 1
}

TEST_CASE("ground truth CSV writes what load_ground_truth reads") {
    TempDir dir;
    std::vector<GroundTruthSegment> rows(2);
    rows[0].image_id = "one";
    rows[0].a = {10.0, 20.0};
    rows[0].b = {30.0, 40.0};
    rows[1].image_id = "two";
    rows[1].a = {-1.5, 0.125};
    rows[1].b = {2.0, 1.0 / 9.0};

    const auto path = dir.file("gt.csv");
    save_ground_truth(rows, path);
    const std::vector<GroundTruthSegment> loaded = load_ground_truth(path);
    REQUIRE(loaded.size() == 2);
    CHECK(loaded[0].image_id == "one");
    CHECK(loaded[1].a == rows[1].a);
    CHECK(loaded[1].b == rows[1].b);
}

// ---------------------------------------------------------------------------
// JSON reports

TEST_CASE("hyperplane JSON round-trip is bit-exact") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const int dim = 2 + static_cast<int>(rng.uniform_int(4));
        const Hyperplane plane(rng.gaussian_vector(dim),
                               rng.gaussian_vector(dim) * 3.0);
        const Json j = to_json(plane);
        const Hyperplane back = hyperplane_from_json(j);
        CHECK(back.normal() == plane.normal());
        CHECK(back.anchor() == plane.anchor());
        CHECK(back.signed_distance() == plane.signed_distance());
        CHECK(to_json(back).dump() == j.dump());
    }

    Json bad = to_json(Hyperplane(Vector::Ones(3), Vector::Zero(3)));
    bad["normal"] = Json::array({0.0, 0.0, 0.0});
    CHECK_THROWS_AS(hyperplane_from_json(bad), ParseError);
    bad.erase("normal");
    CHECK_THROWS_WITH_AS(hyperplane_from_json(bad),
                         doctest::Contains("normal"), ParseError);
}

TEST_CASE("detection and pairing documents round-trip byte for byte") {
    Rng rng(29);
    SymmetryDetection detection(
        Hyperplane(rng.gaussian_vector(3), rng.gaussian_vector(3)));
    detection.confidence = 0.75;
    detection.initial_plane_index = 2;
    detection.ranked_alternatives = {
        {detection.plane, 0.75},
        {Hyperplane(rng.gaussian_vector(3), rng.gaussian_vector(3)), 0.5}};
    detection.registration.transform = RigidTransform::identity(3);
    detection.registration.confidence = 0.9;
    detection.registration.rms_error = 1e-3;
    detection.registration.iterations_used = 12;
    detection.registration.rms_history = {0.1, 0.01, 1e-3};
    RunDiagnostic diag;
    diag.initial_plane_index = 0;
    diag.succeeded = false;
    diag.message = "registration collapsed";
    diag.registration.transform = RigidTransform::identity(3);
    detection.diagnostics = {diag};

    const Json j = to_json(detection);
    const SymmetryDetection back = detection_from_json(j);
    CHECK(to_json(back).dump() == j.dump());
    CHECK(back.diagnostics.size() == 1);
    CHECK(back.diagnostics[0].message == "registration collapsed");
    CHECK(back.ranked_alternatives.size() == 2);

    PairingResult pairing;
    pairing.pairs = {{0, 3, 0.25, true}, {1, 2, 0.5, false}};
    pairing.unmatched = {4};
    pairing.total_cost = 0.75;
    const Json pj = to_json(pairing);
    CHECK(to_json(pairing_from_json(pj)).dump() == pj.dump());

    SymmetrySegment segment;
    segment.a = {1.5, 2.5};
    segment.b = {3.5, 4.5};
    const Json sj = to_json(segment);
    CHECK(to_json(segment_from_json(sj)).dump() == sj.dump());
}

TEST_CASE("run reports round-trip and reject foreign schemas") {
    TempDir dir;
    RunReport report;
    report.command = "detect2d";
    report.input = "image.png";
    report.seed = 123456789012345ull;
    report.config["backend"] = "nxc";
    report.config["k"] = 3;
    report.results["lines"] = Json::array();

    const Json j = to_json(report);
    const auto path = dir.file("report.json");
    write_json(j, path);
    const Json loaded = read_json(path);
    CHECK(loaded.dump(2) == j.dump(2));

    const RunReport back = run_report_from_json(loaded);
    CHECK(back.command == "detect2d");
    CHECK(back.seed == report.seed);
    CHECK(back.config["backend"] == "nxc");

    Json foreign = j;
    foreign["schema"] = "someone-elses/9";
    CHECK_THROWS_WITH_AS(run_report_from_json(foreign),
                         doctest::Contains("schema"), ParseError);

    const auto broken = dir.file("broken.json");
    write_text(broken, "{ not json");
    CHECK_THROWS_AS(read_json(broken), ParseError);
    CHECK_THROWS_AS(read_json(dir.file("missing.json")), ParseError);
}

TEST_CASE("registration parser validates shapes") {
    RegistrationResult reg;
    reg.transform = RigidTransform::identity(2);
    reg.confidence = 0.5;
    Json j = to_json(reg);
    j["transform"]["rotation"] = Json::array({Json::array({1.0, 0.0})});
    CHECK_THROWS_AS(registration_from_json(j), ParseError);

    Json j2 = to_json(reg);
    j2["rms_error"] = "fast";
    CHECK_THROWS_AS(registration_from_json(j2), ParseError);

    Json j3 = to_json(reg);
    j3["iterations_used"] = 2.5;
    CHECK_THROWS_AS(registration_from_json(j3), ParseError);
}
