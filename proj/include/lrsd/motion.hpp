// Parametric frame warping and per-frame global-motion estimation by
// coarse-to-fine Gauss-Newton refinement.
//
// Images are height x width matrices indexed (y, x). A parameter vector tau
// describes the forward content motion: warp_frame(I, tau) samples I at the
// inverse-mapped coordinates, so a translation tau = (tx, ty) moves content
// by +tx pixels in x. The zero vector is always the identity transform.
#pragma once

#include <vector>

#include "lrsd/linalg.hpp"

namespace lrsd {

enum class MotionModel { Identity, Translation, Similarity, Affine };

// Number of parameters: 0, 2, 4 (similarity), 6 (affine).
int param_count(MotionModel model);

// Parameter layout:
//   Translation: (tx, ty)
//   Similarity:  (a, b, tx, ty)      linear part [[1+a, -b], [b, 1+a]]
//   Affine:      (a11-1, a12, a21, a22-1, tx, ty)
Eigen::Matrix<double, 2, 3> params_to_matrix(const Vector& tau, MotionModel model);
Vector matrix_to_params(const Eigen::Matrix<double, 2, 3>& m, MotionModel model);
Vector identity_params(MotionModel model);
Vector invert_params(const Vector& tau, MotionModel model);

struct MotionParams {
    MotionModel model = MotionModel::Identity;
    std::vector<Vector> per_frame;

    bool is_identity() const;
};

// Inverse warp with bilinear interpolation; out-of-bounds samples clamp to
// the nearest edge pixel. Identity parameters return the input bit-exactly.
// Throws when the linear part is not invertible (det <= 1e-6).
Matrix warp_frame(const Matrix& frame, const Vector& tau, MotionModel model);

struct Pyramid {
    std::vector<Matrix> levels;  // level 0 = original, each next half resolution
};

// 5x5 Gaussian blur (sigma = 1) before every 2x decimation; levels smaller
// than 16 px in either dimension are not produced.
Pyramid build_pyramid(const Matrix& image, int levels);

struct MotionEstimate {
    Vector params;
    bool warning = false;      // fell back to tau_init
    double initial_residual = 0.0;
    double final_residual = 0.0;
};

// Estimates tau with warp_frame(source, tau) ~ target. Damped Gauss-Newton
// per pyramid level, coarse to fine; accepted steps never increase the
// residual, and the result never has a larger full-resolution residual than
// tau_init (otherwise tau_init is returned with the warning flag set).
MotionEstimate estimate_motion(const Matrix& source, const Matrix& target, const Vector& tau_init,
                               MotionModel model, int levels);

struct PrealignResult {
    MotionParams params;
    int warnings = 0;
};

// Aligns every frame to the middle frame (index n/2, 0-based); the middle
// frame gets identity parameters.
PrealignResult prealign_to_middle(const FrameStack& stack, MotionModel model, int levels = 3);

}  // namespace lrsd
