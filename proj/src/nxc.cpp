#include "msr/nxc.hpp"

#include "msr/random.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <optional>
#include <tuple>
#include <vector>

namespace msr {

namespace {

constexpr double kBinPx = 4.0;            // translation bin width
constexpr double kFlatEps = 1e-12;        // variance-per-pixel below this = flat

// The FFTW planner is not thread-safe; executing plans on new arrays is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

// Summed-area table with a one-cell border: lookups cost four reads.
class Integral {
public:
    Integral() = default;

    explicit Integral(const ImageGrid& img, bool squared = false)
        : width_(img.width), table_((img.width + 1) * (img.height + 1), 0.0) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                double v = img.at(x, y);
                if (squared) v *= v;
                at(x + 1, y + 1) =
                    v + at(x, y + 1) + at(x + 1, y) - at(x, y);
            }
        }
    }

    /// Sum over the window with top-left (x, y) and size (w, h).
    double window(int x, int y, int w, int h) const {
        return at(x + w, y + h) - at(x, y + h) - at(x + w, y) + at(x, y);
    }

private:
    double& at(int x, int y) {
        return table_[static_cast<size_t>(y) * (width_ + 1) + x];
    }
    double at(int x, int y) const {
        return table_[static_cast<size_t>(y) * (width_ + 1) + x];
    }

    int width_ = 0;
    std::vector<double> table_;
};

struct FftwReal {
    explicit FftwReal(size_t n) : ptr(fftw_alloc_real(n)) {
        std::fill(ptr, ptr + n, 0.0);
    }
    ~FftwReal() { fftw_free(ptr); }
    FftwReal(const FftwReal&) = delete;
    FftwReal& operator=(const FftwReal&) = delete;
    double* ptr;
};

struct FftwComplex {
    explicit FftwComplex(size_t n) : ptr(fftw_alloc_complex(n)) {}
    ~FftwComplex() { fftw_free(ptr); }
    FftwComplex(const FftwComplex&) = delete;
    FftwComplex& operator=(const FftwComplex&) = delete;
    fftw_complex* ptr;
};

ImageGrid extract_patch(const ImageGrid& img, int px, int py, int size) {
    ImageGrid patch(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) patch.at(x, y) = img.at(px + x, py + y);
    return patch;
}

void validate_config(const NxcConfig& config) {
    if (config.num_angles < 1)
        throw DegenerateInputError("nxc: num_angles must be >= 1");
    if (config.patch_size < 2)
        throw DegenerateInputError("nxc: patch_size must be >= 2");
    if (config.patches_per_angle < 1)
        throw DegenerateInputError("nxc: patches_per_angle must be >= 1");
    if (config.max_side < 2)
        throw DegenerateInputError("nxc: max_side must be >= 2");
    if (config.top_k < 1)
        throw DegenerateInputError("nxc: top_k must be >= 1");
    if (!(config.correlation_threshold >= -1.0 &&
          config.correlation_threshold <= 1.0))
        throw DegenerateInputError(
            "nxc: correlation_threshold must be in [-1, 1]");
}

}  // namespace

ImageGrid preprocess(const ImageGrid& image, const NxcConfig& config) {
    validate_config(config);
    ImageGrid out = downscale(image, config.max_side);
    if (config.use_gradient) {
        out = gradient_magnitude(out);
        // Featureless inputs are not exactly constant after resampling
        // (bilinear weights round), and normalize_max would blow that dust up
        // to full scale. Anything this far below real 8-bit contrast is
        // noise: zero it so blank images produce no votes.
        const double peak =
            *std::max_element(out.intensities.begin(), out.intensities.end());
        if (peak < 1e-9) {
            std::fill(out.intensities.begin(), out.intensities.end(), 0.0);
        } else {
            out = normalize_max(out);
        }
    }
    return out;
}

struct NxcCorrelator::Impl {
    int tw = 0, th = 0;
    Integral sum1, sum2;
    std::vector<std::complex<double>> target_fft;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;

    ~Impl() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (inv) fftw_destroy_plan(inv);
    }
};

NxcCorrelator::NxcCorrelator(const ImageGrid& target)
    : impl_(std::make_unique<Impl>()) {
    if (target.empty()) {
        throw DegenerateInputError("nxc: empty target image");
    }
    impl_->tw = target.width;
    impl_->th = target.height;
    impl_->sum1 = Integral(target);
    impl_->sum2 = Integral(target, /*squared=*/true);

    const size_t real_n = static_cast<size_t>(impl_->th) * impl_->tw;
    const size_t cx_n = static_cast<size_t>(impl_->th) * (impl_->tw / 2 + 1);
    FftwReal re(real_n);
    FftwComplex cx(cx_n);
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        impl_->fwd = fftw_plan_dft_r2c_2d(impl_->th, impl_->tw, re.ptr, cx.ptr,
                                          FFTW_ESTIMATE);
        impl_->inv = fftw_plan_dft_c2r_2d(impl_->th, impl_->tw, cx.ptr, re.ptr,
                                          FFTW_ESTIMATE);
    }
    if (!impl_->fwd || !impl_->inv) {
        throw Error("nxc: fftw plan creation failed");
    }
    std::copy(target.intensities.begin(), target.intensities.end(), re.ptr);
    fftw_execute_dft_r2c(impl_->fwd, re.ptr, cx.ptr);
    const auto* spec = reinterpret_cast<std::complex<double>*>(cx.ptr);
    impl_->target_fft.assign(spec, spec + cx_n);
}

NxcCorrelator::~NxcCorrelator() = default;
NxcCorrelator::NxcCorrelator(NxcCorrelator&&) noexcept = default;
NxcCorrelator& NxcCorrelator::operator=(NxcCorrelator&&) noexcept = default;

ImageGrid NxcCorrelator::correlate(const ImageGrid& patch) const {
    const int pw = patch.width, ph = patch.height;
    const int tw = impl_->tw, th = impl_->th;
    if (patch.empty()) {
        throw DegenerateInputError("nxc: empty patch");
    }
    if (pw > tw || ph > th) {
        throw DimensionMismatchError("nxc: patch larger than target");
    }

    const double n_px = static_cast<double>(pw) * ph;
    double mean = 0.0;
    for (double v : patch.intensities) mean += v;
    mean /= n_px;
    double patch_sq = 0.0;
    for (double v : patch.intensities) patch_sq += (v - mean) * (v - mean);
    if (patch_sq <= kFlatEps * n_px) {
        throw DegenerateInputError("nxc: flat patch carries no signal");
    }

    // Cross-correlation numerator by FFT: pad the zero-mean patch into a
    // target-sized frame; circular wrap never reaches valid placements
    // because the padding is zero.
    const size_t real_n = static_cast<size_t>(th) * tw;
    const size_t cx_n = static_cast<size_t>(th) * (tw / 2 + 1);
    FftwReal re(real_n);
    FftwComplex cx(cx_n);
    for (int y = 0; y < ph; ++y)
        for (int x = 0; x < pw; ++x)
            re.ptr[static_cast<size_t>(y) * tw + x] = patch.at(x, y) - mean;
    fftw_execute_dft_r2c(impl_->fwd, re.ptr, cx.ptr);

    auto* work = reinterpret_cast<std::complex<double>*>(cx.ptr);
    for (size_t k = 0; k < cx_n; ++k) {
        work[k] = impl_->target_fft[k] * std::conj(work[k]);
    }
    fftw_execute_dft_c2r(impl_->inv, cx.ptr, re.ptr);

    const int sw = tw - pw + 1, sh = th - ph + 1;
    const double fft_scale = 1.0 / (static_cast<double>(th) * tw);
    ImageGrid out(sw, sh);
    for (int v = 0; v < sh; ++v) {
        for (int u = 0; u < sw; ++u) {
            // The patch is zero-mean, so subtracting the window mean from
            // the window leaves the numerator unchanged.
            const double num = re.ptr[static_cast<size_t>(v) * tw + u] * fft_scale;
            const double wsum = impl_->sum1.window(u, v, pw, ph);
            const double wsq = impl_->sum2.window(u, v, pw, ph);
            const double var = wsq - wsum * wsum / n_px;
            double c = 0.0;
            if (var > kFlatEps * n_px) {
                c = std::clamp(num / std::sqrt(var * patch_sq), -1.0, 1.0);
            }
            out.at(u, v) = c;
        }
    }
    return out;
}

ImageGrid nxc_correlate(const ImageGrid& patch, const ImageGrid& target) {
    return NxcCorrelator(target).correlate(patch);
}

std::vector<TransformVote> patch_votes(const ImageGrid& moving,
                                       const ImageGrid& target,
                                       const NxcConfig& config) {
    validate_config(config);
    if (moving.empty() || target.empty()) {
        throw DegenerateInputError("patch_votes: empty image");
    }
    const int ps = config.patch_size;
    if (ps > moving.width || ps > moving.height || ps > target.width ||
        ps > target.height) {
        throw DegenerateInputError("patch_votes: patch does not fit the images");
    }

    const NxcCorrelator correlator(target);
    Rng rng(config.seed);
    const Eigen::Vector2d center = image_center(moving);
    const double n_px = static_cast<double>(ps) * ps;
    std::vector<TransformVote> votes;

    for (int a = 0; a < config.num_angles; ++a) {
        const double angle = 360.0 * a / config.num_angles;
        const RotatedImage rot = rotate_about_center(moving, angle);
        const Integral coverage(rot.coverage);
        const Integral sum1(rot.image);
        const Integral sum2(rot.image, /*squared=*/true);

        // Draw patch corners serially (thread-count independent); keep only
        // fully covered, non-flat patches. Slots that fail 64 draws lapse.
        std::vector<std::pair<int, int>> corners;
        corners.reserve(static_cast<size_t>(config.patches_per_angle));
        for (int k = 0; k < config.patches_per_angle; ++k) {
            for (int attempt = 0; attempt < 64; ++attempt) {
                const int px = rng.uniform_int(moving.width - ps + 1);
                const int py = rng.uniform_int(moving.height - ps + 1);
                if (coverage.window(px, py, ps, ps) < n_px - 1e-6) continue;
                const double s1 = sum1.window(px, py, ps, ps);
                const double s2 = sum2.window(px, py, ps, ps);
                if (s2 - s1 * s1 / n_px <= kFlatEps * n_px) continue;
                corners.emplace_back(px, py);
                break;
            }
        }

        // Correlate in parallel; results are slotted by candidate index so
        // the vote order never depends on scheduling.
        struct Hit {
            double score;
            int u, v;
        };
        std::vector<std::optional<Hit>> hits(corners.size());
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(corners.size());
             ++i) {
            const auto [px, py] = corners[static_cast<size_t>(i)];
            const ImageGrid patch = extract_patch(rot.image, px, py, ps);
            const ImageGrid surf = correlator.correlate(patch);
            double best = -2.0;
            int bu = 0, bv = 0;
            for (int v = 0; v < surf.height; ++v) {
                for (int u = 0; u < surf.width; ++u) {
                    if (surf.at(u, v) > best) {
                        best = surf.at(u, v);
                        bu = u;
                        bv = v;
                    }
                }
            }
            if (best >= config.correlation_threshold) {
                hits[static_cast<size_t>(i)] = Hit{best, bu, bv};
            }
        }

        const Eigen::Matrix2d unrotate = rotation2(-angle);
        const double half = (ps - 1) / 2.0;
        for (size_t i = 0; i < corners.size(); ++i) {
            if (!hits[i]) continue;
            const auto [px, py] = corners[i];
            TransformVote vote;
            vote.angle_index = a;
            vote.angle_deg = angle;
            vote.score = hits[i]->score;
            vote.translation =
                Eigen::Vector2d(hits[i]->u - px, hits[i]->v - py);
            const Eigen::Vector2d rot_center(px + half, py + half);
            vote.moving_center = unrotate * (rot_center - center) + center;
            vote.target_center =
                Eigen::Vector2d(hits[i]->u + half, hits[i]->v + half);
            votes.push_back(vote);
        }
    }
    return votes;
}

namespace {

using BinKey = std::tuple<int, int, int>;  // (angle index, tx bin, ty bin)

struct Bin {
    double mass = 0.0;
    std::vector<int> vote_idx;
};

RigidTransform planar_transform(const Eigen::Matrix2d& r,
                                const Eigen::Vector2d& t) {
    Matrix rot(2, 2);
    rot = r;
    Vector tr(2);
    tr = t;
    return {std::move(rot), std::move(tr)};
}

}  // namespace

std::vector<ConsensusPeak> consensus_peaks(const std::vector<TransformVote>& votes,
                                           const NxcConfig& config,
                                           const Eigen::Vector2d& moving_center) {
    validate_config(config);
    if (votes.empty()) return {};

    const int n_angles = config.num_angles;
    std::map<BinKey, Bin> bins;
    double total_mass = 0.0;
    for (size_t i = 0; i < votes.size(); ++i) {
        const TransformVote& v = votes[i];
        if (v.angle_index < 0 || v.angle_index >= n_angles) {
            throw DimensionMismatchError(
                "consensus_peaks: vote angle index outside the angle grid");
        }
        const BinKey key{v.angle_index,
                         static_cast<int>(std::floor(v.translation.x() / kBinPx)),
                         static_cast<int>(std::floor(v.translation.y() / kBinPx))};
        Bin& bin = bins[key];
        bin.mass += v.score;
        bin.vote_idx.push_back(static_cast<int>(i));
        total_mass += v.score;
    }

    // Local maxima over the 26-connected (angle wraps, translation does not)
    // neighborhood; equal-mass neighbors do not disqualify each other.
    std::vector<BinKey> peak_keys;
    for (const auto& [key, bin] : bins) {
        const auto [a, bx, by] = key;
        bool is_peak = true;
        for (int da = -1; da <= 1 && is_peak; ++da) {
            const int aa = ((a + da) % n_angles + n_angles) % n_angles;
            for (int dx = -1; dx <= 1 && is_peak; ++dx) {
                for (int dy = -1; dy <= 1; ++dy) {
                    const BinKey nk{aa, bx + dx, by + dy};
                    if (nk == key) continue;
                    const auto it = bins.find(nk);
                    if (it != bins.end() && it->second.mass > bin.mass) {
                        is_peak = false;
                        break;
                    }
                }
            }
        }
        if (is_peak) peak_keys.push_back(key);
    }

    std::sort(peak_keys.begin(), peak_keys.end(),
              [&](const BinKey& x, const BinKey& y) {
                  const double mx = bins.at(x).mass, my = bins.at(y).mass;
                  if (mx != my) return mx > my;
                  return x < y;
              });
    if (static_cast<int>(peak_keys.size()) > config.top_k) {
        peak_keys.resize(static_cast<size_t>(config.top_k));
    }

    std::vector<ConsensusPeak> peaks;
    peaks.reserve(peak_keys.size());
    for (const BinKey& key : peak_keys) {
        const auto [a, bx, by] = key;

        // Supporting votes: the same-angle 3x3 bin neighborhood.
        std::vector<int> support_idx;
        for (int dx = -1; dx <= 1; ++dx) {
            for (int dy = -1; dy <= 1; ++dy) {
                const auto it = bins.find(BinKey{a, bx + dx, by + dy});
                if (it == bins.end()) continue;
                support_idx.insert(support_idx.end(), it->second.vote_idx.begin(),
                                   it->second.vote_idx.end());
            }
        }

        double wsum = 0.0;
        Eigen::Vector2d centroid(0.0, 0.0);
        for (const int i : support_idx) {
            wsum += votes[static_cast<size_t>(i)].score;
            centroid += votes[static_cast<size_t>(i)].score *
                        votes[static_cast<size_t>(i)].translation;
        }
        centroid /= wsum;
        double sq = 0.0;
        for (const int i : support_idx) {
            sq += votes[static_cast<size_t>(i)].score *
                  (votes[static_cast<size_t>(i)].translation - centroid)
                      .squaredNorm();
        }

        ConsensusPeak peak;
        peak.angle_index = a;
        peak.angle_deg = 360.0 * a / n_angles;
        peak.translation = centroid;
        peak.support = static_cast<int>(support_idx.size());
        peak.confidence = bins.at(key).mass / total_mass;
        peak.rms_residual = std::sqrt(sq / wsum);

        const Eigen::Matrix2d r = rotation2(peak.angle_deg);
        peak.transform = planar_transform(
            r, moving_center - r * moving_center + centroid);

        if (config.refine_rotation && peak.support >= 3) {
            // Continuous-angle least squares over the supporting patch
            // correspondences (moving center -> target center), weighted by
            // score. Kept only when it tightens the point residual.
            Eigen::Vector2d mx(0, 0), my(0, 0);
            for (const int i : support_idx) {
                mx += votes[static_cast<size_t>(i)].score *
                      votes[static_cast<size_t>(i)].moving_center;
                my += votes[static_cast<size_t>(i)].score *
                      votes[static_cast<size_t>(i)].target_center;
            }
            mx /= wsum;
            my /= wsum;
            double spread = 0.0;
            double dot = 0.0, cross = 0.0;
            for (const int i : support_idx) {
                const Eigen::Vector2d xc =
                    votes[static_cast<size_t>(i)].moving_center - mx;
                const Eigen::Vector2d yc =
                    votes[static_cast<size_t>(i)].target_center - my;
                const double w = votes[static_cast<size_t>(i)].score;
                dot += w * xc.dot(yc);
                cross += w * (xc.x() * yc.y() - xc.y() * yc.x());
                spread = std::max(spread, xc.norm());
            }
            if (spread >= 2.0 && (dot != 0.0 || cross != 0.0)) {
                const double theta = std::atan2(cross, dot);
                Eigen::Matrix2d rr;
                rr << std::cos(theta), -std::sin(theta), std::sin(theta),
                    std::cos(theta);
                const Eigen::Vector2d tt = my - rr * mx;

                auto residual = [&](const Eigen::Matrix2d& rot,
                                    const Eigen::Vector2d& tr) {
                    double acc = 0.0;
                    for (const int i : support_idx) {
                        const auto& vv = votes[static_cast<size_t>(i)];
                        acc += vv.score *
                               (rot * vv.moving_center + tr - vv.target_center)
                                   .squaredNorm();
                    }
                    return std::sqrt(acc / wsum);
                };
                const double with_grid =
                    residual(r, moving_center - r * moving_center + centroid);
                const double with_refined = residual(rr, tt);
                if (with_refined < with_grid) {
                    peak.transform = planar_transform(rr, tt);
                    peak.angle_deg = theta * 180.0 / M_PI;
                    peak.translation = rr * moving_center + tt - moving_center;
                    peak.rms_residual = with_refined;
                }
            }
        }
        peaks.push_back(std::move(peak));
    }
    return peaks;
}

std::vector<RegistrationResult> nxc_register(const ImageGrid& moving,
                                             const ImageGrid& target,
                                             const NxcConfig& config) {
    validate_config(config);
    if (moving.width != target.width || moving.height != target.height) {
        throw DimensionMismatchError(
            "nxc_register: images must have equal dimensions");
    }
    const ImageGrid small_moving = preprocess(moving, config);
    const ImageGrid small_target = preprocess(target, config);
    const double s =
        downscale_factor(moving.width, moving.height, config.max_side);

    const std::vector<TransformVote> votes =
        patch_votes(small_moving, small_target, config);
    const std::vector<ConsensusPeak> peaks =
        consensus_peaks(votes, config, image_center(small_moving));

    // Conjugate each transform back to original pixel coordinates through
    // the downscale map phi(x) = s x + b: R is unchanged,
    // t = (R b + t_small - b) / s.
    const double b = (s - 1.0) / 2.0;
    const Eigen::Vector2d b1(b, b);
    std::vector<RegistrationResult> out;
    out.reserve(peaks.size());
    for (const ConsensusPeak& peak : peaks) {
        const Eigen::Matrix2d r = peak.transform.rotation;
        const Eigen::Vector2d t_small(peak.transform.translation[0],
                                      peak.transform.translation[1]);
        const Eigen::Vector2d t = (r * b1 + t_small - b1) / s;

        RegistrationResult reg;
        reg.transform = planar_transform(r, t);
        reg.confidence = peak.confidence;
        reg.rms_error = peak.rms_residual / s;
        reg.iterations_used = peak.support;
        out.push_back(std::move(reg));
    }
    return out;
}

}  // namespace msr
