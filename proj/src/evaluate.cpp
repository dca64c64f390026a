#include "lrsd/evaluate.hpp"

#include <cmath>

namespace lrsd {

MaskStack MaskStack::zeros(int width, int height, int frames) {
    MaskStack m;
    m.width = width;
    m.height = height;
    m.frames = frames;
    m.bits.assign(static_cast<std::size_t>(width) * height * frames, 0);
    return m;
}

namespace {

MaskStack threshold_magnitude(const Matrix& sparse, int width, int height, double threshold) {
    MaskStack mask = MaskStack::zeros(width, height, static_cast<int>(sparse.cols()));
    const double* src = sparse.data();
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        mask.bits[i] = std::abs(src[i]) > threshold ? 1 : 0;
    return mask;
}

void check_dims(const Matrix& sparse, int width, int height) {
    if (sparse.rows() != static_cast<Eigen::Index>(width) * height)
        throw std::invalid_argument("mask_from_sparse: dims do not match rows");
}

}  // namespace

MaskStack mask_from_sparse(const Matrix& sparse, int width, int height) {
    check_dims(sparse, width, height);
    return threshold_magnitude(sparse, width, height, 0.0);
}

MaskStack mask_from_sparse(const Matrix& sparse, const Matrix& a, const Matrix& l, int width,
                           int height) {
    check_dims(sparse, width, height);
    if (a.rows() != sparse.rows() || a.cols() != sparse.cols() || l.rows() != sparse.rows() ||
        l.cols() != sparse.cols())
        throw std::invalid_argument("mask_from_sparse: shape mismatch");

    // background noise level estimated from the differences a - l where the
    // sparse part is zero
    double sum = 0.0, sumsq = 0.0;
    std::uint64_t count = 0;
    for (Eigen::Index i = 0; i < sparse.size(); ++i) {
        if (sparse.data()[i] == 0.0) {
            const double d = a.data()[i] - l.data()[i];
            sum += d;
            sumsq += d * d;
            ++count;
        }
    }
    if (count == 0)
        throw std::runtime_error("mask_from_sparse: no background sample for the three-sigma rule");
    const double mean = sum / count;
    const double var = std::max(0.0, sumsq / count - mean * mean);
    const double threshold = mean + 3.0 * std::sqrt(var);
    return threshold_magnitude(sparse, width, height, threshold);
}

Metrics compute_metrics(const MaskStack& pred, const MaskStack& truth) {
    if (!pred.same_shape(truth))
        throw std::invalid_argument("compute_metrics: mask dimensions differ");

    Metrics m;
    for (std::size_t i = 0; i < pred.bits.size(); ++i) {
        const bool p = pred.bits[i] != 0;
        const bool t = truth.bits[i] != 0;
        if (p && t) ++m.tp;
        else if (p && !t) ++m.fp;
        else if (!p && t) ++m.fn;
        else ++m.tn;
    }

    m.precision = (m.tp + m.fp > 0) ? static_cast<double>(m.tp) / (m.tp + m.fp)
                                    : (m.fn == 0 ? 1.0 : 0.0);
    m.recall = (m.tp + m.fn > 0) ? static_cast<double>(m.tp) / (m.tp + m.fn)
                                 : (m.fp == 0 ? 1.0 : 0.0);
    m.f1 = (m.precision + m.recall > 0.0)
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    m.fpr = (m.fp + m.tn > 0) ? static_cast<double>(m.fp) / (m.fp + m.tn) : 0.0;
    return m;
}

std::vector<RocPoint> roc_sweep(const FrameStack& stack, const MaskStack& truth,
                                DecompositionConfig cfg, const std::vector<double>& lambda_grid) {
    if (lambda_grid.empty()) throw std::invalid_argument("roc_sweep: empty lambda grid");
    for (std::size_t i = 1; i < lambda_grid.size(); ++i)
        if (lambda_grid[i] < lambda_grid[i - 1])
            throw std::invalid_argument("roc_sweep: lambda grid must be sorted ascending");
    if (cfg.sparsity.kind == SparsityRule::Kind::Cardinality)
        throw std::invalid_argument("roc_sweep: cardinality rule has no lambda to sweep");

    std::vector<RocPoint> points;
    points.reserve(lambda_grid.size());
    for (const double lambda : lambda_grid) {
        RocPoint point;
        point.lambda = lambda;
        try {
            cfg.sparsity.lambda = lambda;
            const DecompositionResult result = decompose(stack, cfg);
            const MaskStack mask = mask_from_sparse(result.sparse, stack.width, stack.height);
            point.metrics = compute_metrics(mask, truth);
        } catch (const std::exception& e) {
            point.ok = false;
            point.error = e.what();
        }
        points.push_back(std::move(point));
    }
    return points;
}

}  // namespace lrsd
