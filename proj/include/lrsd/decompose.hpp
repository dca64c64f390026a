// The three alternating-minimization drivers (entrywise soft-threshold,
// block-sparse l2,1, SVD-free rank-1) with the shared convergence loop and
// the leverage-score ghost-removal initialization.
#pragma once

#include <utility>
#include <vector>

#include "lrsd/linalg.hpp"
#include "lrsd/motion.hpp"

namespace lrsd {

struct DecompositionConfig {
    int rank = 1;
    SparsityRule sparsity = SparsityRule::soft_entry(0.1);
    double tol = 1e-7;
    int max_iter = 10;
    MotionModel motion = MotionModel::Identity;
    int pyramid_levels = 3;
    bool ghost_removal = false;
    int leverage_p = 5;
    int freeze_motion_after = 0;  // 0 keeps re-estimating tau every iteration
    std::uint64_t seed = 0;
};

struct DecompositionResult {
    Matrix low_rank;          // m x n; empty when the rank-1 vector form is used
    Vector rank1_background;  // l with L = l*1^T (SVD-free driver only)
    Matrix sparse;
    MotionParams tau;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    int motion_warnings = 0;

    bool rank1_compressed() const { return rank1_background.size() > 0; }
    Matrix low_rank_matrix() const;
};

// Balancing parameter of principal component pursuit, 1/sqrt(max(m, n)).
double pcp_lambda(Eigen::Index m, Eigen::Index n);

// Squared residual plus the sparsity penalty of the rule: lambda*||S||_1,
// lambda * sum_j ||mat(S_j)||_{2,1}, or zero for the cardinality rule.
// width/height are required for the column-block penalty.
double objective_value(const Matrix& warped, const Matrix& low_rank, const Matrix& sparse,
                       const SparsityRule& rule, int width = 0, int height = 0);

// Lemma-style closed-form S-step of the block-sparse model: every frame of h
// is reshaped to an image and its columns shrunk by max(0, 1 - lambda/norm).
Matrix shrink_frame_columns(const Matrix& h, double lambda, int width, int height);

// Keeps, per frame, only the image-columns of `residual` whose leverage
// score reaches the uniform level 1/(number of image-columns); all other
// columns are zeroed. Frames with negligible energy stay zero.
Matrix ghost_column_filter(const Matrix& residual, int p, int width, int height);

// Ghost-removal initialization: L0 is the rank-k approximation of a, S0
// keeps only the salient image-columns of each frame of a - L0.
std::pair<Matrix, Matrix> ghost_removal_init(const Matrix& a, int k, int p, int width, int height,
                                             std::uint64_t seed = kDefaultSvdSeed);

// Algorithm drivers. Sparsity rule kinds are enforced: SoftEntry for tau,
// ColumnBlock for block, Cardinality (with rank 1) for svdfree.
DecompositionResult decompose_tau(const FrameStack& stack, const DecompositionConfig& cfg);
DecompositionResult decompose_block(const FrameStack& stack, const DecompositionConfig& cfg);
DecompositionResult decompose_svdfree(const FrameStack& stack, const DecompositionConfig& cfg);

// Dispatch on the sparsity rule kind.
DecompositionResult decompose(const FrameStack& stack, const DecompositionConfig& cfg);

// Warps every frame by its per-frame parameters: the matrix A o tau.
Matrix apply_motion(const FrameStack& stack, const MotionParams& tau);

// The residual G = A o tau - L - S, recomputed on demand (never stored).
Matrix residual_matrix(const FrameStack& stack, const DecompositionResult& result);

}  // namespace lrsd
