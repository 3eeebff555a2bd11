#pragma once

#include "msr/icp.hpp"
#include "msr/image.hpp"
#include "msr/types.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace msr {

struct NxcConfig {
    /// Rotation grid: angles 0, 360/N, ..., 360(N-1)/N degrees.
    int num_angles = 6;
    /// Square patch side in (downscaled) pixels.
    int patch_size = 40;
    /// Longer image side after preprocessing.
    int max_side = 200;
    /// Minimum normalized correlation for a patch to cast a vote.
    double correlation_threshold = 0.25;
    /// Patch positions drawn per rotation angle.
    int patches_per_angle = 300;
    /// Number of ranked consensus transforms returned.
    int top_k = 10;
    /// Correlate gradient-magnitude images instead of raw intensities.
    bool use_gradient = true;
    std::uint64_t seed = 0;
    /// Optional continuous-angle refinement of each consensus peak from its
    /// supporting patch correspondences (least-squares rotation). Off by
    /// default: the plain grid result is the reference behavior.
    bool refine_rotation = false;
};

/// One patch's preferred placement: "rotate by angle, then translate".
struct TransformVote {
    int angle_index = 0;
    double angle_deg = 0.0;
    /// Vote translation in preprocessed pixels: (patch position in target) -
    /// (patch position in the rotated moving image).
    Eigen::Vector2d translation{0.0, 0.0};
    /// Peak normalized correlation, in [threshold, 1].
    double score = 0.0;
    /// Patch center traced back to the unrotated moving image.
    Eigen::Vector2d moving_center{0.0, 0.0};
    /// Matched patch center in the target image.
    Eigen::Vector2d target_center{0.0, 0.0};
};

/// Downscale so the longer side is config.max_side, then (by default) swap
/// intensities for gradient magnitude rescaled onto [0, 1].
ImageGrid preprocess(const ImageGrid& image, const NxcConfig& config);

/// Fast normalized cross-correlation of patches against one fixed target:
/// FFT numerator plus integral-image window statistics. Surfaces cover every
/// fully-inside placement and equal the direct formula to high precision.
class NxcCorrelator {
public:
    explicit NxcCorrelator(const ImageGrid& target);
    ~NxcCorrelator();
    NxcCorrelator(NxcCorrelator&&) noexcept;
    NxcCorrelator& operator=(NxcCorrelator&&) noexcept;

    /// Correlation surface of size (tw-pw+1) x (th-ph+1); entry (u, v) is
    /// the normalized correlation of the patch placed with its top-left
    /// corner at (u, v). Flat windows correlate to 0; the patch itself must
    /// not be flat. Values are clamped to [-1, 1].
    ImageGrid correlate(const ImageGrid& patch) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// One-off convenience wrapper around NxcCorrelator.
ImageGrid nxc_correlate(const ImageGrid& patch, const ImageGrid& target);

/// Casts votes from random patches of the (preprocessed) moving image,
/// correlated against the (preprocessed) target at each grid angle. Patch
/// positions are drawn serially from the seed, so the vote list does not
/// depend on thread count.
std::vector<TransformVote> patch_votes(const ImageGrid& moving,
                                       const ImageGrid& target,
                                       const NxcConfig& config);

/// A local maximum of the vote histogram.
struct ConsensusPeak {
    RigidTransform transform;  // x -> R x + t in preprocessed pixel coords
    /// Fraction of total vote mass inside this peak's bin.
    double confidence = 0.0;
    /// Score-weighted RMS distance of supporting vote translations from the
    /// consensus translation, in preprocessed pixels.
    double rms_residual = 0.0;
    /// Number of supporting votes (bin plus same-angle 3x3 neighborhood).
    int support = 0;
    int angle_index = 0;
    double angle_deg = 0.0;
    Eigen::Vector2d translation{0.0, 0.0};  // refined, preprocessed pixels
};

/// Histograms votes over (angle, 4 px translation bins), keeps score-mass
/// local maxima (angle wraps; 26-connected neighborhood), refines each
/// peak's translation by the score-weighted centroid of its same-angle 3x3
/// bin neighborhood, and returns the top_k peaks by mass. Ties rank by
/// (angle index, tx bin, ty bin). `moving_center` is the rotation center of
/// the moving image in preprocessed coordinates.
std::vector<ConsensusPeak> consensus_peaks(const std::vector<TransformVote>& votes,
                                           const NxcConfig& config,
                                           const Eigen::Vector2d& moving_center);

/// Full consensus registration of `moving` onto `target` (equal dimensions
/// required): preprocess both, vote, find peaks, and report transforms in
/// original pixel coordinates, ranked by confidence. An empty result means
/// no patch agreement above the correlation threshold. In each result,
/// rms_error is the peak's weighted RMS vote residual (original pixels) and
/// iterations_used is its supporting vote count.
std::vector<RegistrationResult> nxc_register(const ImageGrid& moving,
                                             const ImageGrid& target,
                                             const NxcConfig& config = {});

}  // namespace msr
