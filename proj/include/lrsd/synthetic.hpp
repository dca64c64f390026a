// Seeded synthetic sequences with pixel-exact ground-truth masks: spike
// fields over a static background, moving blocks and vertical bars, and a
// drifting-camera scene for motion-compensated runs.
#pragma once

#include <cstdint>

#include "lrsd/evaluate.hpp"
#include "lrsd/linalg.hpp"

namespace lrsd {

struct SyntheticSequence {
    FrameStack frames;
    MaskStack truth;
};

// Rank-1 background plus random +-magnitude spikes on spike_fraction of all
// pixels, plus Gaussian noise. background_modes > 1 adds low-amplitude
// extra background modes (a mildly dynamic scene).
SyntheticSequence synth_spikes(int width, int height, int n, double spike_fraction,
                               double spike_magnitude, double noise_sigma, std::uint64_t seed,
                               int background_modes = 1);

// Static background with one square block moving along a diagonal at
// speed_px_per_frame. Slow speeds make the block linger and ghost. A
// nonzero camera_jitter adds a smooth global camera path of that amplitude
// (ground truth is then in the aligned middle-frame coordinates).
SyntheticSequence synth_moving_block(int width, int height, int n, int block_size,
                                     double speed_px_per_frame, double contrast,
                                     double noise_sigma, std::uint64_t seed,
                                     double camera_jitter = 0.0);

// Full-height vertical bar occupying whole image-columns, sweeping
// horizontally; the structured case for the block-sparse model.
SyntheticSequence synth_vertical_bar(int width, int height, int n, int bar_width, double speed,
                                     double contrast, double noise_sigma, std::uint64_t seed);

// Globally shifting camera over a larger world image with one moving
// object. Ground truth lives in the aligned (middle-frame) coordinates.
SyntheticSequence synth_shifting_camera(int width, int height, int n, double max_shift,
                                        int object_size, double contrast, double noise_sigma,
                                        std::uint64_t seed);

}  // namespace lrsd
