// Foreground mask extraction, classification metrics and ROC sweeps.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lrsd/decompose.hpp"
#include "lrsd/linalg.hpp"

namespace lrsd {

// Binary foreground masks, one bit per pixel per frame. Layout matches the
// flattened matrix: index = frame*(width*height) + y*width + x.
struct MaskStack {
    int width = 0;
    int height = 0;
    int frames = 0;
    std::vector<std::uint8_t> bits;

    static MaskStack zeros(int width, int height, int frames);
    std::size_t pixel_index(int frame, int y, int x) const {
        return static_cast<std::size_t>(frame) * width * height +
               static_cast<std::size_t>(y) * width + x;
    }
    bool at(int frame, int y, int x) const { return bits[pixel_index(frame, y, x)] != 0; }
    void set(int frame, int y, int x, bool v) { bits[pixel_index(frame, y, x)] = v ? 1 : 0; }
    bool same_shape(const MaskStack& other) const {
        return width == other.width && height == other.height && frames == other.frames;
    }
};

// Pooled pixel counts over all frames (micro-averaging) and the derived
// scores. Zero-denominator conventions: precision (resp. recall) is 1 when
// tp+fp = 0 (resp. tp+fn = 0) and the other error count is also zero, else
// 0; F1 is 0 when precision+recall = 0; FPR is 0 when fp+tn = 0.
struct Metrics {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, f1 = 0.0, fpr = 0.0;
};

// Support mask: foreground wherever |S| > 0 (the unrefined raw output).
MaskStack mask_from_sparse(const Matrix& sparse, int width, int height);

// Three-sigma mask: mean and standard deviation of the differences a - l
// are taken over tentative-background pixels (S = 0); a pixel is foreground
// when |S| exceeds mean + 3*sigma. Throws when S has no zero entry.
MaskStack mask_from_sparse(const Matrix& sparse, const Matrix& a, const Matrix& l, int width,
                           int height);

Metrics compute_metrics(const MaskStack& pred, const MaskStack& truth);

struct RocPoint {
    double lambda = 0.0;
    Metrics metrics;
    bool ok = true;
    std::string error;
};

// One full decomposition per lambda (support masks), ordered by lambda.
// Per-point failures are recorded in the point and the sweep continues.
std::vector<RocPoint> roc_sweep(const FrameStack& stack, const MaskStack& truth,
                                DecompositionConfig cfg, const std::vector<double>& lambda_grid);

}  // namespace lrsd
