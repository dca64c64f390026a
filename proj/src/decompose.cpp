#include "lrsd/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace lrsd {

namespace {

void check_stack(const FrameStack& stack) {
    if (stack.width < 1 || stack.height < 1 || stack.frames() < 1)
        throw std::invalid_argument("decompose: empty frame stack");
    if (stack.data.rows() != static_cast<Eigen::Index>(stack.width) * stack.height)
        throw std::invalid_argument("decompose: stack rows do not match width*height");
    if (!stack.data.allFinite())
        throw std::invalid_argument("decompose: frame stack contains non-finite values");
}

void check_config(const DecompositionConfig& cfg, const FrameStack& stack) {
    if (cfg.tol <= 0.0) throw std::invalid_argument("decompose: tol must be positive");
    if (cfg.max_iter < 1) throw std::invalid_argument("decompose: max_iter must be >= 1");
    if (cfg.rank < 1 || cfg.rank > std::min<Eigen::Index>(stack.data.rows(), stack.data.cols()))
        throw std::invalid_argument("decompose: rank out of range");
}

// strided view of one image-column (fixed x) inside a flattened frame
using StridedCol = Eigen::Map<Vector, 0, Eigen::InnerStride<>>;
using ConstStridedCol = Eigen::Map<const Vector, 0, Eigen::InnerStride<>>;

double l21_frame_norm(const Matrix& s, int width, int height) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < s.cols(); ++j)
        for (int x = 0; x < width; ++x)
            acc += ConstStridedCol(s.col(j).data() + x, height, Eigen::InnerStride<>(width)).norm();
    return acc;
}

// Re-estimates every frame's tau toward the current L + S and rebuilds the
// warped stack. Returns the number of per-frame divergence warnings.
int motion_step(const FrameStack& stack, const DecompositionConfig& cfg, const Matrix& target,
                MotionParams& tau, Matrix& warped) {
    int warnings = 0;
    for (int j = 0; j < stack.frames(); ++j) {
        const Matrix frame = column_to_image(stack.data.col(j), stack.width, stack.height);
        const Matrix goal = column_to_image(target.col(j), stack.width, stack.height);
        const MotionEstimate est = estimate_motion(frame, goal, tau.per_frame[j], cfg.motion,
                                                   cfg.pyramid_levels);
        tau.per_frame[j] = est.params;
        if (est.warning) ++warnings;
        warped.col(j) =
            image_to_column(warp_frame(frame, est.params, cfg.motion));
    }
    return warnings;
}

MotionParams initial_tau(const FrameStack& stack, const DecompositionConfig& cfg, int& warnings) {
    if (cfg.motion == MotionModel::Identity || stack.frames() < 2) {
        MotionParams tau;
        tau.model = cfg.motion;
        tau.per_frame.assign(stack.frames(), identity_params(cfg.motion));
        return tau;
    }
    PrealignResult pre = prealign_to_middle(stack, cfg.motion, cfg.pyramid_levels);
    warnings += pre.warnings;
    return pre.params;
}

Matrix warp_stack(const FrameStack& stack, const MotionParams& tau) {
    if (tau.is_identity()) return stack.data;
    Matrix warped(stack.data.rows(), stack.data.cols());
    for (int j = 0; j < stack.frames(); ++j) {
        const Matrix frame = column_to_image(stack.data.col(j), stack.width, stack.height);
        warped.col(j) = image_to_column(warp_frame(frame, tau.per_frame[j], tau.model));
    }
    return warped;
}

bool motion_active(const DecompositionConfig& cfg, int iteration) {
    if (cfg.motion == MotionModel::Identity) return false;
    if (cfg.freeze_motion_after > 0 && iteration > cfg.freeze_motion_after) return false;
    return true;
}

}  // namespace

Matrix DecompositionResult::low_rank_matrix() const {
    if (!rank1_compressed()) return low_rank;
    return rank1_background * Vector::Ones(sparse.cols()).transpose();
}

double pcp_lambda(Eigen::Index m, Eigen::Index n) {
    return 1.0 / std::sqrt(static_cast<double>(std::max(m, n)));
}

double objective_value(const Matrix& warped, const Matrix& low_rank, const Matrix& sparse,
                       const SparsityRule& rule, int width, int height) {
    if (warped.rows() != low_rank.rows() || warped.cols() != low_rank.cols() ||
        warped.rows() != sparse.rows() || warped.cols() != sparse.cols())
        throw std::invalid_argument("objective_value: shape mismatch");

    const double resid2 = (warped - low_rank - sparse).squaredNorm();
    switch (rule.kind) {
        case SparsityRule::Kind::SoftEntry:
            return resid2 + rule.lambda * sparse.lpNorm<1>();
        case SparsityRule::Kind::ColumnBlock:
            if (static_cast<Eigen::Index>(width) * height != warped.rows())
                throw std::invalid_argument("objective_value: block penalty needs frame dims");
            return resid2 + rule.lambda * l21_frame_norm(sparse, width, height);
        case SparsityRule::Kind::Cardinality:
            return resid2;
    }
    return resid2;
}

Matrix shrink_frame_columns(const Matrix& h, double lambda, int width, int height) {
    if (lambda < 0.0) throw std::invalid_argument("shrink_frame_columns: negative lambda");
    if (static_cast<Eigen::Index>(width) * height != h.rows())
        throw std::invalid_argument("shrink_frame_columns: dims do not match rows");

    Matrix s = Matrix::Zero(h.rows(), h.cols());
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
        for (int x = 0; x < width; ++x) {
            ConstStridedCol in(h.col(j).data() + x, height, Eigen::InnerStride<>(width));
            const double nrm = in.norm();
            if (nrm > lambda) {
                StridedCol out(s.col(j).data() + x, height, Eigen::InnerStride<>(width));
                out = in * (1.0 - lambda / nrm);
            }
        }
    }
    return s;
}

Matrix ghost_column_filter(const Matrix& residual, int p, int width, int height) {
    if (static_cast<Eigen::Index>(width) * height != residual.rows())
        throw std::invalid_argument("ghost_column_filter: dims do not match rows");

    Matrix s0 = Matrix::Zero(residual.rows(), residual.cols());
    const double level = 1.0 / width - 1e-12;
    for (Eigen::Index j = 0; j < residual.cols(); ++j) {
        if (residual.col(j).norm() <= 1e-12) continue;  // leverage undefined on ~zero frames
        const Matrix frame = column_to_image(residual.col(j), width, height);
        const Vector pi = leverage_scores_clamped(frame, p);
        if (pi.size() == 0) continue;
        for (int x = 0; x < width; ++x) {
            if (pi[x] >= level) {
                StridedCol out(s0.col(j).data() + x, height, Eigen::InnerStride<>(width));
                out = ConstStridedCol(residual.col(j).data() + x, height,
                                      Eigen::InnerStride<>(width));
            }
        }
    }
    return s0;
}

namespace {

Vector temporal_median(const Matrix& a) {
    const Eigen::Index m = a.rows(), n = a.cols();
    Vector med(m);
    std::vector<double> buf(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) buf[j] = a(i, j);
        std::nth_element(buf.begin(), buf.begin() + n / 2, buf.end());
        med[i] = buf[n / 2];
    }
    return med;
}

double robust_threshold(const Matrix& residual) {
    std::vector<double> mags(residual.data(), residual.data() + residual.size());
    for (double& v : mags) v = std::abs(v);
    std::nth_element(mags.begin(), mags.begin() + mags.size() / 2, mags.end());
    // three sigma with sigma from the median absolute residual
    return 3.0 * std::max(1.4826 * mags[mags.size() / 2], 1e-9);
}

// Rank-k background fit with foreground influence trimmed out. A plain
// rank-k fit absorbs lingering objects (the ghost); refitting with outlier
// entries replaced by the per-pixel temporal median converges to the static
// part when each pixel shows background in most frames.
Matrix ghost_background_fit(const Matrix& a, int k, std::uint64_t seed) {
    Matrix l = rank_k_project(a, k, seed);
    if ((a - l).norm() <= 1e-7 * a.norm()) return l;  // exact low rank, nothing to trim

    const Vector med = temporal_median(a);
    for (int sweep = 0; sweep < 3; ++sweep) {
        const Matrix r = a - l;
        const double thr = robust_threshold(r);
        Matrix x(a.rows(), a.cols());
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                x(i, j) = std::abs(r(i, j)) <= thr ? a(i, j) : med[i];
        l = rank_k_project(x, k, seed);
    }
    return l;
}

}  // namespace

std::pair<Matrix, Matrix> ghost_removal_init(const Matrix& a, int k, int p, int width, int height,
                                             std::uint64_t seed) {
    Matrix l0 = ghost_background_fit(a, k, seed);
    Matrix s0 = ghost_column_filter(a - l0, p, width, height);
    return {std::move(l0), std::move(s0)};
}

DecompositionResult decompose_tau(const FrameStack& stack, const DecompositionConfig& cfg) {
    if (cfg.sparsity.kind != SparsityRule::Kind::SoftEntry)
        throw std::invalid_argument("decompose_tau: sparsity rule must be SoftEntry");
    check_stack(stack);
    check_config(cfg, stack);

    const double anorm2 = stack.data.squaredNorm();
    DecompositionResult res;
    res.tau = initial_tau(stack, cfg, res.motion_warnings);
    Matrix warped = warp_stack(stack, res.tau);

    Matrix low_rank, sparse;
    if (cfg.ghost_removal) {
        std::tie(low_rank, sparse) =
            ghost_removal_init(warped, cfg.rank, cfg.leverage_p, stack.width, stack.height, cfg.seed);
    } else {
        low_rank = warped;
        sparse = Matrix::Zero(warped.rows(), warped.cols());
    }

    Matrix detail(warped.rows(), warped.cols());
    for (int t = 1; t <= cfg.max_iter; ++t) {
        if (motion_active(cfg, t))
            res.motion_warnings += motion_step(stack, cfg, low_rank + sparse, res.tau, warped);

        detail = warped - sparse;
        low_rank = rank_k_project(detail, cfg.rank, cfg.seed);
        detail = warped - low_rank;
        sparse = soft_threshold(detail, cfg.sparsity.lambda);

        const double resid2 = (detail - sparse).squaredNorm();
        res.objective_trace.push_back(resid2 + cfg.sparsity.lambda * sparse.lpNorm<1>());
        res.iterations = t;
        if (resid2 / anorm2 <= cfg.tol) {
            res.converged = true;
            break;
        }
    }

    res.low_rank = std::move(low_rank);
    res.sparse = std::move(sparse);
    return res;
}

DecompositionResult decompose_block(const FrameStack& stack, const DecompositionConfig& cfg) {
    if (cfg.sparsity.kind != SparsityRule::Kind::ColumnBlock)
        throw std::invalid_argument("decompose_block: sparsity rule must be ColumnBlock");
    check_stack(stack);
    check_config(cfg, stack);

    const double anorm2 = stack.data.squaredNorm();
    DecompositionResult res;
    res.tau = initial_tau(stack, cfg, res.motion_warnings);
    Matrix warped = warp_stack(stack, res.tau);

    Matrix low_rank, sparse;
    if (cfg.ghost_removal) {
        std::tie(low_rank, sparse) =
            ghost_removal_init(warped, cfg.rank, cfg.leverage_p, stack.width, stack.height, cfg.seed);
    } else {
        low_rank = warped;
        sparse = Matrix::Zero(warped.rows(), warped.cols());
    }

    Matrix detail(warped.rows(), warped.cols());
    for (int t = 1; t <= cfg.max_iter; ++t) {
        if (motion_active(cfg, t))
            res.motion_warnings += motion_step(stack, cfg, low_rank + sparse, res.tau, warped);

        detail = warped - sparse;
        low_rank = rank_k_project(detail, cfg.rank, cfg.seed);
        detail = warped - low_rank;
        sparse = shrink_frame_columns(detail, cfg.sparsity.lambda, stack.width, stack.height);

        const double resid2 = (detail - sparse).squaredNorm();
        res.objective_trace.push_back(
            resid2 + cfg.sparsity.lambda * l21_frame_norm(sparse, stack.width, stack.height));
        res.iterations = t;
        if (resid2 / anorm2 <= cfg.tol) {
            res.converged = true;
            break;
        }
    }

    res.low_rank = std::move(low_rank);
    res.sparse = std::move(sparse);
    return res;
}

DecompositionResult decompose_svdfree(const FrameStack& stack, const DecompositionConfig& cfg) {
    if (cfg.sparsity.kind != SparsityRule::Kind::Cardinality)
        throw std::invalid_argument("decompose_svdfree: sparsity rule must be Cardinality");
    if (cfg.rank != 1) throw std::invalid_argument("decompose_svdfree: rank 1 is mandatory");
    check_stack(stack);
    check_config(cfg, stack);
    const std::size_t kappa = cfg.sparsity.cardinality;
    if (kappa > static_cast<std::size_t>(stack.data.size()))
        throw std::invalid_argument("decompose_svdfree: cardinality exceeds entry count");

    const double anorm2 = stack.data.squaredNorm();
    const int n = stack.frames();
    DecompositionResult res;
    res.tau = initial_tau(stack, cfg, res.motion_warnings);
    Matrix warped = warp_stack(stack, res.tau);

    Vector warped_row_mean = row_mean_vector(warped);  // refreshed when warped changes
    Vector background = warped_row_mean;
    Matrix sparse;
    if (cfg.ghost_removal) {
        // trimmed fit projected onto the l*1^T model keeps the init SVD-free
        // on the hot path (the fit runs once, before the loop)
        background = row_mean_vector(ghost_background_fit(warped, 1, cfg.seed));
        const Matrix detail = warped.colwise() - background;
        sparse = ghost_column_filter(detail, cfg.leverage_p, stack.width, stack.height);
    } else {
        sparse = Matrix::Zero(warped.rows(), warped.cols());
    }
    Vector sparse_row_sum = Vector::Zero(warped.rows());
    for (int j = 0; j < n; ++j) sparse_row_sum += sparse.col(j);

    Matrix detail(warped.rows(), warped.cols());
    for (int t = 1; t <= cfg.max_iter; ++t) {
        if (motion_active(cfg, t)) {
            const Matrix target = (background * Vector::Ones(n).transpose()) + sparse;
            res.motion_warnings += motion_step(stack, cfg, target, res.tau, warped);
            warped_row_mean = row_mean_vector(warped);
        }

        background = warped_row_mean - sparse_row_sum / static_cast<double>(n);
        detail = warped.colwise() - background;
        const double detail2 = detail.squaredNorm();
        // the bin scale only affects histogram resolution, not exactness
        const MagnitudeCut cut = top_magnitude_cut(
            detail.data(), static_cast<std::size_t>(detail.size()), kappa,
            8.0 * std::sqrt(detail2 / static_cast<double>(detail.size())));
        const double kept = scatter_magnitude_cut(detail, cut, kappa, sparse, &sparse_row_sum);

        // S equals the residual on its support, so the objective reduces to
        // the energy left outside the kept entries
        const double resid2 = std::max(0.0, detail2 - kept);
        res.objective_trace.push_back(resid2);
        res.iterations = t;
        if (resid2 / anorm2 <= cfg.tol) {
            res.converged = true;
            break;
        }
    }

    res.rank1_background = std::move(background);
    res.sparse = std::move(sparse);
    return res;
}

DecompositionResult decompose(const FrameStack& stack, const DecompositionConfig& cfg) {
    switch (cfg.sparsity.kind) {
        case SparsityRule::Kind::SoftEntry: return decompose_tau(stack, cfg);
        case SparsityRule::Kind::ColumnBlock: return decompose_block(stack, cfg);
        case SparsityRule::Kind::Cardinality: return decompose_svdfree(stack, cfg);
    }
    throw std::invalid_argument("decompose: unknown sparsity rule");
}

Matrix apply_motion(const FrameStack& stack, const MotionParams& tau) {
    return warp_stack(stack, tau);
}

Matrix residual_matrix(const FrameStack& stack, const DecompositionResult& result) {
    return warp_stack(stack, result.tau) - result.low_rank_matrix() - result.sparse;
}

}  // namespace lrsd
