#include "msr/io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>

namespace msr {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

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

bool parse_int(const std::string& s, int& out) {
    double v = 0.0;
    if (!parse_double(s, v)) return false;
    if (v != std::floor(v) || std::abs(v) > 1e9) return false;
    out = static_cast<int>(v);
    return true;
}

// Shortest text that scans back to the same double.
std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_px(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(
        std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// ---------------------------------------------------------------------------
// PNG

ImageGrid load_png_file(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw ParseError("image: cannot open " + path.string());

    png_structp png =
        png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error("libpng: read initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error("libpng: read initialization failed");
    }

    // Declared before setjmp so they outlive a longjmp from inside libpng.
    std::vector<png_byte> data;
    std::vector<png_bytep> rows;

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ParseError(path.string() + ": corrupt or truncated PNG");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 width = 0, height = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr,
                 nullptr, nullptr);

    // Normalize every layout to 8-bit RGB before converting to luminance.
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type == PNG_COLOR_TYPE_GRAY ||
        color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
        png_set_gray_to_rgb(png);
    png_set_strip_alpha(png);
    (void)png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes != static_cast<size_t>(width) * 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error("libpng: unexpected row layout in " + path.string());
    }
    data.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = data.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_destroy_read_struct(&png, &info, nullptr);

    ImageGrid img(static_cast<int>(width), static_cast<int>(height));
    for (int y = 0; y < img.height; ++y) {
        const png_byte* row = data.data() + static_cast<size_t>(y) * rowbytes;
        for (int x = 0; x < img.width; ++x) {
            const png_byte* px = row + 3 * x;
            // Rec. 709 luma weights.
            img.at(x, y) =
                (0.2126 * px[0] + 0.7152 * px[1] + 0.0722 * px[2]) / 255.0;
        }
    }
    return img;
}

void write_png_raster(const std::filesystem::path& path, int width, int height,
                      int color_type, int bytes_per_pixel,
                      const unsigned char* pixels) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw Error("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                              nullptr, nullptr);
    if (!png) throw Error("libpng: write initialization failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error("libpng: write initialization failed");
    }

    std::vector<png_bytep> rows(static_cast<size_t>(height));
    const size_t stride = static_cast<size_t>(width) * bytes_per_pixel;
    for (int y = 0; y < height; ++y) {
        rows[static_cast<size_t>(y)] =
            const_cast<png_bytep>(pixels) + static_cast<size_t>(y) * stride;
    }

    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error("libpng: failed writing " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width),
                 static_cast<png_uint_32>(height), 8, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// PGM (plain P2 and raw P5)

struct PnmCursor {
    const std::string& data;
    size_t pos = 0;
};

void skip_pnm_junk(PnmCursor& c) {
    while (c.pos < c.data.size()) {
        const unsigned char ch = static_cast<unsigned char>(c.data[c.pos]);
        if (std::isspace(ch)) {
            ++c.pos;
        } else if (ch == '#') {
            while (c.pos < c.data.size() && c.data[c.pos] != '\n') ++c.pos;
        } else {
            break;
        }
    }
}

long next_pnm_int(PnmCursor& c, const std::string& path, const char* what) {
    skip_pnm_junk(c);
    size_t end = c.pos;
    while (end < c.data.size() &&
           std::isdigit(static_cast<unsigned char>(c.data[end])))
        ++end;
    if (end == c.pos) {
        throw ParseError(path + ": malformed PGM header (bad " +
                         std::string(what) + ")");
    }
    long value = 0;
    for (size_t i = c.pos; i < end; ++i) {
        value = value * 10 + (c.data[i] - '0');
        if (value > 1'000'000'000) {
            throw ParseError(path + ": implausible PGM " + std::string(what));
        }
    }
    c.pos = end;
    return value;
}

ImageGrid load_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("image: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string data = buffer.str();
    const std::string name = path.string();

    if (data.size() < 2 || data[0] != 'P' || (data[1] != '2' && data[1] != '5')) {
        throw ParseError(name + ": not a PGM file");
    }
    const bool raw = data[1] == '5';
    PnmCursor c{data, 2};

    const long width = next_pnm_int(c, name, "width");
    const long height = next_pnm_int(c, name, "height");
    const long maxval = next_pnm_int(c, name, "maxval");
    if (width <= 0 || height <= 0) {
        throw ParseError(name + ": PGM dimensions must be positive");
    }
    if (maxval <= 0 || maxval > 65535) {
        throw ParseError(name + ": PGM maxval out of range");
    }

    ImageGrid img(static_cast<int>(width), static_cast<int>(height));
    const size_t count = img.intensities.size();

    if (raw) {
        // Exactly one whitespace byte separates the header from the raster.
        if (c.pos >= data.size() ||
            !std::isspace(static_cast<unsigned char>(data[c.pos]))) {
            throw ParseError(name + ": missing raster separator in PGM");
        }
        ++c.pos;
        const int sample_bytes = maxval > 255 ? 2 : 1;
        if (data.size() - c.pos < count * sample_bytes) {
            throw ParseError(name + ": truncated PGM raster");
        }
        for (size_t i = 0; i < count; ++i) {
            long v;
            if (sample_bytes == 1) {
                v = static_cast<unsigned char>(data[c.pos + i]);
            } else {
                // Two-byte samples are big-endian.
                v = static_cast<unsigned char>(data[c.pos + 2 * i]) * 256L +
                    static_cast<unsigned char>(data[c.pos + 2 * i + 1]);
            }
            if (v > maxval) {
                throw ParseError(name + ": PGM sample exceeds maxval");
            }
            img.intensities[i] = static_cast<double>(v) / maxval;
        }
    } else {
        for (size_t i = 0; i < count; ++i) {
            const long v = next_pnm_int(c, name, "sample");
            if (v > maxval) {
                throw ParseError(name + ": PGM sample exceeds maxval");
            }
            img.intensities[i] = static_cast<double>(v) / maxval;
        }
    }
    return img;
}

}  // namespace

ImageGrid load_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw ParseError("image: cannot open " + path.string());
    unsigned char sig[8] = {};
    probe.read(reinterpret_cast<char*>(sig), sizeof sig);
    const std::streamsize got = probe.gcount();
    probe.close();

    static const unsigned char kPngSig[8] = {0x89, 'P',  'N',  'G',
                                             0x0d, 0x0a, 0x1a, 0x0a};
    if (got >= 8 && std::memcmp(sig, kPngSig, 8) == 0) {
        return load_png_file(path);
    }
    if (got >= 2 && sig[0] == 'P' && (sig[1] == '2' || sig[1] == '5')) {
        return load_pgm_file(path);
    }
    throw ParseError(path.string() +
                     ": unrecognized image format (expected PNG or PGM)");
}

void save_png(const ImageGrid& img, const std::filesystem::path& path) {
    if (img.empty()) throw DegenerateInputError("save_png: empty image");
    std::vector<unsigned char> bytes(img.intensities.size());
    for (size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.intensities[i]);
    write_png_raster(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 1,
                     bytes.data());
}

RgbImage::RgbImage(int w, int h) : width(w), height(h) {
    if (w < 0 || h < 0) {
        throw DimensionMismatchError("image: negative dimensions");
    }
    pixels.assign(static_cast<size_t>(w) * static_cast<size_t>(h) * 3, 255);
}

RgbImage RgbImage::from_grayscale(const ImageGrid& img) {
    RgbImage out(img.width, img.height);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const unsigned char v = to_byte(img.at(x, y));
            out.set(x, y, Rgb{v, v, v});
        }
    }
    return out;
}

void RgbImage::set(int x, int y, Rgb color) {
    if (!contains(x, y)) return;
    const size_t i = 3 * (static_cast<size_t>(y) * width + x);
    pixels[i] = color.r;
    pixels[i + 1] = color.g;
    pixels[i + 2] = color.b;
}

void draw_segment(RgbImage& img, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b, Rgb color, int thickness) {
    if (img.width <= 0 || img.height <= 0) return;
    const double radius = 0.5 * std::max(1, thickness);
    const int reach = static_cast<int>(std::floor(radius));
    // Half-pixel steps leave no gaps at any slope.
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a).norm() * 2.0)));
    for (int s = 0; s <= steps; ++s) {
        const Eigen::Vector2d p = a + (b - a) * (static_cast<double>(s) / steps);
        const int cx = static_cast<int>(std::lround(p.x()));
        const int cy = static_cast<int>(std::lround(p.y()));
        for (int dy = -reach; dy <= reach; ++dy) {
            for (int dx = -reach; dx <= reach; ++dx) {
                if (dx * dx + dy * dy <= radius * radius + 1e-9) {
                    img.set(cx + dx, cy + dy, color);
                }
            }
        }
    }
}

void save_png(const RgbImage& img, const std::filesystem::path& path) {
    if (img.width <= 0 || img.height <= 0) {
        throw DegenerateInputError("save_png: empty image");
    }
    write_png_raster(path, img.width, img.height, PNG_COLOR_TYPE_RGB, 3,
                     img.pixels.data());
}

// ---------------------------------------------------------------------------
// Point clouds and skeletons

namespace {

// Parses one whitespace-separated coordinate row; enforces a consistent
// dimension across the file (fixed by the first data row).
std::vector<double> parse_coordinate_row(const std::string& text,
                                         const std::string& name, int line_no,
                                         Eigen::Index& dim) {
    std::istringstream ss(text);
    std::vector<double> values;
    std::string token;
    while (ss >> token) {
        double v = 0.0;
        if (!parse_double(token, v)) {
            throw ParseError(name + " line " + std::to_string(line_no) +
                             ": bad number '" + token + "'");
        }
        values.push_back(v);
    }
    if (dim < 0) {
        dim = static_cast<Eigen::Index>(values.size());
    } else if (static_cast<Eigen::Index>(values.size()) != dim) {
        throw ParseError(name + " line " + std::to_string(line_no) +
                         ": expected " + std::to_string(dim) +
                         " coordinates, got " + std::to_string(values.size()));
    }
    return values;
}

std::string strip_comment(const std::string& line) {
    const size_t hash = line.find('#');
    return trim(hash == std::string::npos ? line : line.substr(0, hash));
}

Matrix rows_to_matrix(const std::vector<std::vector<double>>& rows,
                      Eigen::Index dim) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), dim);
    for (size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            m(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<size_t>(j)];
        }
    }
    return m;
}

}  // namespace

PointCloud load_point_cloud(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("point cloud: cannot open " + path.string());
    const std::string name = "point cloud " + path.string();

    std::vector<std::vector<double>> rows;
    Eigen::Index dim = -1;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = strip_comment(line);
        if (text.empty()) continue;
        rows.push_back(parse_coordinate_row(text, name, line_no, dim));
    }
    if (rows.empty()) return PointCloud();
    if (dim == 0) throw ParseError(name + ": rows carry no coordinates");
    return PointCloud(rows_to_matrix(rows, dim));
}

void save_point_cloud(const PointCloud& cloud,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        for (Eigen::Index j = 0; j < cloud.dimension(); ++j) {
            if (j) out << ' ';
            out << format_double(cloud.points()(i, j));
        }
        out << '\n';
    }
    if (!out) throw Error("failed writing " + path.string());
}

std::vector<Skeleton> load_skeletons(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("skeletons: cannot open " + path.string());
    const std::string name = "skeletons " + path.string();

    std::vector<Skeleton> out;
    std::vector<std::vector<double>> current;
    std::string current_id;
    bool has_id = false;
    Eigen::Index dim = -1;

    const auto flush = [&]() {
        if (current.empty()) {
            if (has_id) {
                throw ParseError(name + ": skeleton '" + current_id +
                                 "' has no joints");
            }
            return;
        }
        Skeleton s;
        s.id = has_id ? current_id : std::to_string(out.size());
        s.points = rows_to_matrix(current, dim);
        out.push_back(std::move(s));
        current.clear();
        current_id.clear();
        has_id = false;
    };

    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = strip_comment(line);
        if (text.empty()) {
            // A blank line only separates once the skeleton has joints, so
            // headers may be padded freely.
            if (!current.empty()) flush();
            continue;
        }
        if (text[0] == '>') {
            flush();
            current_id = trim(text.substr(1));
            has_id = true;
            if (current_id.empty()) {
                throw ParseError(name + " line " + std::to_string(line_no) +
                                 ": empty skeleton id");
            }
            continue;
        }
        current.push_back(parse_coordinate_row(text, name, line_no, dim));
        if (dim == 0) {
            throw ParseError(name + " line " + std::to_string(line_no) +
                             ": rows carry no coordinates");
        }
    }
    flush();
    return out;
}

void save_skeletons(const std::vector<Skeleton>& skeletons,
                    const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    for (size_t k = 0; k < skeletons.size(); ++k) {
        if (k) out << '\n';
        const Skeleton& s = skeletons[k];
        out << "> " << (s.id.empty() ? std::to_string(k) : s.id) << '\n';
        for (Eigen::Index i = 0; i < s.points.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.points.cols(); ++j) {
                if (j) out << ' ';
                out << format_double(s.points(i, j));
            }
            out << '\n';
        }
    }
    if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// SVG projections

Matrix complete_basis(const Vector& axis) {
    const Eigen::Index n = axis.size();
    if (n < 2) {
        throw DimensionMismatchError("complete_basis: need dimension >= 2");
    }
    if (!axis.allFinite() || axis.norm() <= 0.0) {
        throw DegenerateInputError("complete_basis: zero or non-finite axis");
    }

    Matrix basis(n, n);
    basis.col(0) = axis / axis.norm();

    // Seed Gram-Schmidt with the coordinate axes least aligned with `axis`
    // (ties broken by index) so the completion is deterministic.
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) {
                         return std::abs(basis(a, 0)) < std::abs(basis(b, 0));
                     });

    Eigen::Index filled = 1;
    for (Eigen::Index k = 0; k < n && filled < n; ++k) {
        Vector v = Vector::Zero(n);
        v(order[static_cast<size_t>(k)]) = 1.0;
        for (Eigen::Index j = 0; j < filled; ++j) {
            v -= basis.col(j).dot(v) * basis.col(j);
        }
        const double len = v.norm();
        if (len > 1e-8) basis.col(filled++) = v / len;
    }
    if (filled != n) {
        throw DegenerateInputError("complete_basis: span collapsed");
    }
    return basis;
}

void save_svg_projection(const PointCloud& cloud, const Vector& axis,
                         const std::filesystem::path& path,
                         const Hyperplane* plane) {
    if (cloud.empty()) {
        throw DegenerateInputError("svg projection: empty point cloud");
    }
    if (axis.size() != cloud.dimension()) {
        throw DimensionMismatchError("svg projection: axis dimension " +
                                     std::to_string(axis.size()) +
                                     " vs cloud dimension " +
                                     std::to_string(cloud.dimension()));
    }
    if (plane && plane->dimension() != cloud.dimension()) {
        throw DimensionMismatchError("svg projection: plane dimension mismatch");
    }

    const Matrix basis = complete_basis(axis);
    // In 2D there is nothing left after removing the view axis; fall back to
    // an in-plane rotation that puts the axis vertical.
    const Vector u = basis.col(1);
    const Vector v = cloud.dimension() == 2 ? basis.col(0) : basis.col(2);

    const Eigen::VectorXd px = cloud.points() * u;
    const Eigen::VectorXd py = cloud.points() * v;
    const double x_min = px.minCoeff(), x_max = px.maxCoeff();
    const double y_min = py.minCoeff(), y_max = py.maxCoeff();
    const double x_span = std::max(x_max - x_min, 1e-12);
    const double y_span = std::max(y_max - y_min, 1e-12);

    constexpr double kCanvas = 600.0;
    constexpr double kMargin = 24.0;
    const double scale =
        std::min((kCanvas - 2 * kMargin) / x_span, (kCanvas - 2 * kMargin) / y_span);
    // Center the (aspect-preserving) fit on the canvas; SVG y grows downward.
    const double x_off = 0.5 * (kCanvas - scale * x_span);
    const double y_off = 0.5 * (kCanvas - scale * y_span);
    const auto map_x = [&](double x) { return x_off + (x - x_min) * scale; };
    const auto map_y = [&](double y) { return kCanvas - y_off - (y - y_min) * scale; };

    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" "
           "height=\"600\" viewBox=\"0 0 600 600\">\n";
    out << "  <rect width=\"600\" height=\"600\" fill=\"white\"/>\n";

    // The plane shows as a line only when its normal survives the
    // projection, i.e. lies in the span of the two plot directions.
    if (plane) {
        const Eigen::Vector2d n2(plane->normal().dot(u), plane->normal().dot(v));
        if (n2.norm() > 0.999) {
            const Eigen::Vector2d nu = n2 / n2.norm();
            const Eigen::Vector2d along(-nu.y(), nu.x());
            const double d = plane->signed_distance();
            const Eigen::Vector2d anchor = (d / n2.norm()) * nu;
            const double reach = 2.0 * std::hypot(x_span, y_span) + std::abs(d) + 1.0;
            const Eigen::Vector2d p0 = anchor - reach * along;
            const Eigen::Vector2d p1 = anchor + reach * along;
            out << "  <line x1=\"" << format_px(map_x(p0.x())) << "\" y1=\""
                << format_px(map_y(p0.y())) << "\" x2=\""
                << format_px(map_x(p1.x())) << "\" y2=\""
                << format_px(map_y(p1.y()))
                << "\" stroke=\"#d62728\" stroke-width=\"2\"/>\n";
        }
    }

    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        out << "  <circle cx=\"" << format_px(map_x(px(i))) << "\" cy=\""
            << format_px(map_y(py(i)))
            << "\" r=\"2\" fill=\"#2c7fb8\" fill-opacity=\"0.7\"/>\n";
    }
    out << "</svg>\n";
    if (!out) throw Error("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Detection CSV

std::vector<DetectionRow> load_detections(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("detections: cannot open " + path.string());

    std::vector<DetectionRow> rows;
    std::vector<std::string> problems;
    std::string line;
    int line_no = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim(line);
        if (text.empty() || text[0] == '#') continue;

        const std::vector<std::string> fields = split_csv(text);
        if (!seen_data && !fields.empty() && fields[0] == "image_id") continue;
        seen_data = true;

        if (fields.size() != 7) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": expected 7 fields, got " +
                               std::to_string(fields.size()));
            continue;
        }
        DetectionRow row;
        row.image_id = fields[0];
        double coords[4];
        bool ok = !row.image_id.empty() && parse_int(fields[1], row.rank) &&
                  row.rank >= 1;
        for (int i = 0; i < 4; ++i) {
            ok = ok && parse_double(fields[static_cast<size_t>(i) + 2], coords[i]);
        }
        ok = ok && parse_double(fields[6], row.confidence);
        if (!ok) {
            problems.push_back("line " + std::to_string(line_no) +
                               ": malformed field");
            continue;
        }
        row.a = Eigen::Vector2d(coords[0], coords[1]);
        row.b = Eigen::Vector2d(coords[2], coords[3]);
        rows.push_back(std::move(row));
    }

    if (!problems.empty()) {
        std::string msg = "detections " + path.string() + ": ";
        for (size_t i = 0; i < problems.size(); ++i) {
            if (i) msg += "; ";
            msg += problems[i];
        }
        throw ParseError(msg);
    }
    return rows;
}

void save_detections(const std::vector<DetectionRow>& rows,
                     const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "image_id,rank,x1,y1,x2,y2,confidence\n";
    for (const DetectionRow& row : rows) {
        out << row.image_id << ',' << row.rank << ','
            << format_double(row.a.x()) << ',' << format_double(row.a.y()) << ','
            << format_double(row.b.x()) << ',' << format_double(row.b.y()) << ','
            << format_double(row.confidence) << '\n';
    }
    if (!out) throw Error("failed writing " + path.string());
}

PredictionSet group_detections(const std::vector<DetectionRow>& rows) {
    std::map<std::string, std::vector<std::pair<int, Prediction>>> grouped;
    for (const DetectionRow& row : rows) {
        grouped[row.image_id].push_back({row.rank, Prediction{row.a, row.b}});
    }
    PredictionSet out;
    for (auto& [id, ranked] : grouped) {
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) {
                             return a.first < b.first;
                         });
        std::vector<Prediction>& list = out[id];
        list.reserve(ranked.size());
        for (auto& [rank, pred] : ranked) list.push_back(pred);
    }
    return out;
}

void save_ground_truth(const std::vector<GroundTruthSegment>& rows,
                       const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << "image_id,x1,y1,x2,y2\n";
    for (const GroundTruthSegment& row : rows) {
        out << row.image_id << ',' << format_double(row.a.x()) << ','
            << format_double(row.a.y()) << ',' << format_double(row.b.x()) << ','
            << format_double(row.b.y()) << '\n';
    }
    if (!out) throw Error("failed writing " + path.string());
}

}  // namespace msr
