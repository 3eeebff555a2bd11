#pragma once

#include "msr/geometry.hpp"
#include "msr/image.hpp"
#include "msr/pairing.hpp"
#include "msr/pipeline.hpp"
#include "msr/random.hpp"
#include "msr/types.hpp"

#include <utility>
#include <vector>

namespace msr::synth {

/// Multi-octave value noise rescaled onto [0, 1]: octaves run from a third
/// of the image down to two-pixel cells with amplitude halving per octave
/// (the 1/f-style falloff of natural textures), then the summed field is
/// cubed. The odd power keeps the sign but concentrates gradients into
/// sparse steep transitions between plateaus — the heavy-tailed edge
/// statistics of photographs, without which template matching drifts into
/// accidental agreement between unrelated smooth regions.
ImageGrid value_noise_texture(int width, int height, Rng& rng);

struct MirroredImage {
    ImageGrid image;
    /// The exact mirror axis in pixel coordinates.
    Hyperplane axis;
    /// The axis clipped to the image rectangle (the ground-truth segment).
    SymmetrySegment segment;
};

/// A texture averaged with its own mirror image: I = (T + T∘S) / 2 is
/// exactly symmetric about the axis tilted `angle_deg` from vertical and
/// shifted `offset_px` right of the image center. With angle 0 and an
/// integer axis column the pixel grid maps onto itself and the symmetry is
/// exact; otherwise it holds up to bilinear resampling.
MirroredImage mirrored_image(int width, int height, double angle_deg,
                             double offset_px, Rng& rng);

struct MirroredImageParams {
    int width = 260;
    int height = 200;
    /// Axis tilt from vertical: truncated normal, redrawn until it lands in
    /// +-max_angle_deg. The concentration near upright mirrors photo corpora,
    /// where symmetric subjects are shot mostly level, while the tail still
    /// exercises tilted axes.
    double tilt_sigma_deg = 2.5;
    double max_angle_deg = 8.0;
    /// Axis offset from center is drawn uniformly in +-this fraction of the
    /// width.
    double max_offset_frac = 0.15;
};

/// Random-axis mirrored image; the draws (angle, then offset, then texture)
/// come from `rng`, so a seed pins the whole instance.
MirroredImage random_mirrored_image(const MirroredImageParams& params,
                                    Rng& rng);

struct PlantedCloud {
    /// Base points plus their reflection, then noise: exactly (or nearly)
    /// symmetric about `plane`.
    PointCloud cloud;
    Hyperplane plane;
};

/// Samples `base_points` from a random bumpy-ellipsoid surface (a closed
/// shape with distinct principal axes, the kind of data registration can
/// grip), reflects them about a random plane through the shape, unions both
/// copies, and adds Gaussian noise of sigma = noise_frac * bbox diagonal.
PlantedCloud planted_plane_cloud(int base_points, double noise_frac, Rng& rng);

struct MirroredSkeletons {
    std::vector<Skeleton> skeletons;  // bases first, then their mirrors
    Hyperplane plane;
    /// Ground truth: skeleton true_pairs[k].first mirrors .second.
    std::vector<std::pair<int, int>> true_pairs;

    explicit MirroredSkeletons(Hyperplane p) : plane(std::move(p)) {}
};

/// Smooth random 3D polylines on one side of a random plane, mirrored to
/// the other side, with per-joint Gaussian jitter of sigma = jitter_frac *
/// pooled bbox diagonal applied to every skeleton.
MirroredSkeletons mirrored_skeletons(int pairs, double jitter_frac, Rng& rng);

}  // namespace msr::synth
