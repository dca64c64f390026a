#include "lrsd/motion.hpp"

#include <array>
#include <cmath>

namespace lrsd {

namespace {

using Transform = Eigen::Matrix<double, 2, 3>;

double clampd(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

double bilinear(const Matrix& img, double x, double y) {
    const int w = static_cast<int>(img.cols());
    const int h = static_cast<int>(img.rows());
    x = clampd(x, 0.0, w - 1.0);
    y = clampd(y, 0.0, h - 1.0);
    const int x0 = static_cast<int>(x);
    const int y0 = static_cast<int>(y);
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fx = x - x0;
    const double fy = y - y0;
    const double top = img(y0, x0) + fx * (img(y0, x1) - img(y0, x0));
    const double bot = img(y1, x0) + fx * (img(y1, x1) - img(y1, x0));
    return top + fy * (bot - top);
}

Eigen::Matrix2d linear_part(const Transform& m) { return m.leftCols<2>(); }

Transform invert_transform(const Transform& m) {
    const Eigen::Matrix2d a = linear_part(m);
    const double det = a.determinant();
    if (det <= 1e-6) throw std::invalid_argument("motion: linear part not invertible");
    const Eigen::Matrix2d ainv = a.inverse();
    Transform out;
    out.leftCols<2>() = ainv;
    out.col(2) = -ainv * m.col(2);
    return out;
}

// Central-difference gradients, one-sided at the borders.
void image_gradients(const Matrix& img, Matrix& gx, Matrix& gy) {
    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    gx.resize(h, w);
    gy.resize(h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const int xm = std::max(x - 1, 0), xp = std::min(x + 1, w - 1);
            const int ym = std::max(y - 1, 0), yp = std::min(y + 1, h - 1);
            gx(y, x) = (img(y, xp) - img(y, xm)) / (xp - xm);
            gy(y, x) = (img(yp, x) - img(ym, x)) / (yp - ym);
        }
    }
}

Matrix blur5(const Matrix& img) {
    // separable 5-tap Gaussian, sigma = 1
    static const std::array<double, 5> k = [] {
        std::array<double, 5> w{};
        double sum = 0.0;
        for (int i = -2; i <= 2; ++i) {
            w[i + 2] = std::exp(-0.5 * i * i);
            sum += w[i + 2];
        }
        for (double& v : w) v /= sum;
        return w;
    }();

    const int h = static_cast<int>(img.rows());
    const int w = static_cast<int>(img.cols());
    Matrix tmp(h, w), out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i)
                acc += k[i + 2] * img(y, std::clamp(x + i, 0, w - 1));
            tmp(y, x) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int i = -2; i <= 2; ++i)
                acc += k[i + 2] * tmp(std::clamp(y + i, 0, h - 1), x);
            out(y, x) = acc;
        }
    return out;
}

Matrix decimate2(const Matrix& img) {
    const int h = static_cast<int>(img.rows()) / 2;
    const int w = static_cast<int>(img.cols()) / 2;
    Matrix out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out(y, x) = img(2 * y, 2 * x);
    return out;
}

// d(sampling point)/d(params) rows stacked as [dSx/dp; dSy/dp].
void sampling_jacobian(MotionModel model, double x, double y, double* jx, double* jy) {
    switch (model) {
        case MotionModel::Translation:
            jx[0] = 1; jx[1] = 0;
            jy[0] = 0; jy[1] = 1;
            break;
        case MotionModel::Similarity:
            jx[0] = x; jx[1] = -y; jx[2] = 1; jx[3] = 0;
            jy[0] = y; jy[1] = x;  jy[2] = 0; jy[3] = 1;
            break;
        case MotionModel::Affine:
            jx[0] = x; jx[1] = y; jx[2] = 0; jx[3] = 0; jx[4] = 1; jx[5] = 0;
            jy[0] = 0; jy[1] = 0; jy[2] = x; jy[3] = y; jy[4] = 0; jy[5] = 1;
            break;
        case MotionModel::Identity:
            break;
    }
}

double warp_residual_ssd(const Matrix& source, const Matrix& target, const Transform& sampling) {
    const int h = static_cast<int>(target.rows());
    const int w = static_cast<int>(target.cols());
    double acc = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double sx = sampling(0, 0) * x + sampling(0, 1) * y + sampling(0, 2);
            const double sy = sampling(1, 0) * x + sampling(1, 1) * y + sampling(1, 2);
            const double r = bilinear(source, sx, sy) - target(y, x);
            acc += r * r;
        }
    return acc;
}

// One Gauss-Newton pass at a single pyramid level; params are the sampling
// map of that level, updated in place.
void refine_level(const Matrix& source, const Matrix& target, MotionModel model, Vector& params) {
    constexpr int kMaxIters = 30;
    constexpr double kDampingBase = 1e-4;

    const int rho = param_count(model);
    const int h = static_cast<int>(target.rows());
    const int w = static_cast<int>(target.cols());
    Matrix gx, gy;
    image_gradients(source, gx, gy);

    double residual = warp_residual_ssd(source, target, params_to_matrix(params, model));

    for (int iter = 0; iter < kMaxIters; ++iter) {
        const Transform s = params_to_matrix(params, model);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(rho, rho);
        Vector grad = Vector::Zero(rho);
        double jx[6], jy[6], jrow[6];

        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double sx = s(0, 0) * x + s(0, 1) * y + s(0, 2);
                const double sy = s(1, 0) * x + s(1, 1) * y + s(1, 2);
                const double r = bilinear(source, sx, sy) - target(y, x);
                const double dx = bilinear(gx, sx, sy);
                const double dy = bilinear(gy, sx, sy);
                sampling_jacobian(model, x, y, jx, jy);
                for (int p = 0; p < rho; ++p) jrow[p] = dx * jx[p] + dy * jy[p];
                for (int p = 0; p < rho; ++p) {
                    grad[p] += jrow[p] * r;
                    for (int q = p; q < rho; ++q) hess(p, q) += jrow[p] * jrow[q];
                }
            }
        }
        for (int p = 0; p < rho; ++p)
            for (int q = 0; q < p; ++q) hess(p, q) = hess(q, p);

        // damped normal equations; damping grows until a step is accepted
        bool accepted = false;
        double mu = kDampingBase;
        for (int attempt = 0; attempt < 8; ++attempt) {
            Eigen::MatrixXd damped = hess;
            for (int p = 0; p < rho; ++p)
                damped(p, p) += mu * std::max(hess(p, p), 1e-12);
            const Vector delta = damped.ldlt().solve(-grad);
            if (!delta.allFinite()) break;
            const Vector cand = params + delta;
            double cand_residual;
            try {
                cand_residual = warp_residual_ssd(source, target, params_to_matrix(cand, model));
            } catch (const std::invalid_argument&) {
                mu *= 10.0;
                continue;
            }
            if (cand_residual <= residual) {
                const bool tiny = delta.cwiseAbs().maxCoeff() < 1e-12;
                params = cand;
                residual = cand_residual;
                accepted = true;
                if (tiny) return;
                break;
            }
            mu *= 10.0;
        }
        if (!accepted) return;
    }
}

Vector scale_translation(const Vector& params, MotionModel model, double factor) {
    Vector out = params;
    const int rho = param_count(model);
    out[rho - 2] *= factor;
    out[rho - 1] *= factor;
    return out;
}

}  // namespace

int param_count(MotionModel model) {
    switch (model) {
        case MotionModel::Identity: return 0;
        case MotionModel::Translation: return 2;
        case MotionModel::Similarity: return 4;
        case MotionModel::Affine: return 6;
    }
    return 0;
}

Eigen::Matrix<double, 2, 3> params_to_matrix(const Vector& tau, MotionModel model) {
    if (tau.size() != param_count(model))
        throw std::invalid_argument("motion: parameter count does not match model");
    Transform m;
    m << 1, 0, 0, 0, 1, 0;
    switch (model) {
        case MotionModel::Identity:
            break;
        case MotionModel::Translation:
            m(0, 2) = tau[0];
            m(1, 2) = tau[1];
            break;
        case MotionModel::Similarity:
            m(0, 0) = 1 + tau[0];
            m(0, 1) = -tau[1];
            m(1, 0) = tau[1];
            m(1, 1) = 1 + tau[0];
            m(0, 2) = tau[2];
            m(1, 2) = tau[3];
            break;
        case MotionModel::Affine:
            m(0, 0) = 1 + tau[0];
            m(0, 1) = tau[1];
            m(1, 0) = tau[2];
            m(1, 1) = 1 + tau[3];
            m(0, 2) = tau[4];
            m(1, 2) = tau[5];
            break;
    }
    return m;
}

Vector matrix_to_params(const Eigen::Matrix<double, 2, 3>& m, MotionModel model) {
    Vector tau(param_count(model));
    switch (model) {
        case MotionModel::Identity:
            break;
        case MotionModel::Translation:
            tau << m(0, 2), m(1, 2);
            break;
        case MotionModel::Similarity:
            tau << m(0, 0) - 1, m(1, 0), m(0, 2), m(1, 2);
            break;
        case MotionModel::Affine:
            tau << m(0, 0) - 1, m(0, 1), m(1, 0), m(1, 1) - 1, m(0, 2), m(1, 2);
            break;
    }
    return tau;
}

Vector identity_params(MotionModel model) { return Vector::Zero(param_count(model)); }

Vector invert_params(const Vector& tau, MotionModel model) {
    return matrix_to_params(invert_transform(params_to_matrix(tau, model)), model);
}

bool MotionParams::is_identity() const {
    if (model == MotionModel::Identity) return true;
    for (const Vector& tau : per_frame)
        if (tau.cwiseAbs().maxCoeff() != 0.0) return false;
    return true;
}

Matrix warp_frame(const Matrix& frame, const Vector& tau, MotionModel model) {
    if (model == MotionModel::Identity || tau.cwiseAbs().maxCoeff() == 0.0) return frame;

    const Transform sampling = invert_transform(params_to_matrix(tau, model));
    const int h = static_cast<int>(frame.rows());
    const int w = static_cast<int>(frame.cols());
    Matrix out(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double sx = sampling(0, 0) * x + sampling(0, 1) * y + sampling(0, 2);
            const double sy = sampling(1, 0) * x + sampling(1, 1) * y + sampling(1, 2);
            out(y, x) = bilinear(frame, sx, sy);
        }
    return out;
}

Pyramid build_pyramid(const Matrix& image, int levels) {
    if (levels < 1) throw std::invalid_argument("pyramid: need at least one level");
    Pyramid p;
    p.levels.push_back(image);
    while (static_cast<int>(p.levels.size()) < levels) {
        const Matrix& prev = p.levels.back();
        if (prev.rows() / 2 < 16 || prev.cols() / 2 < 16) break;
        p.levels.push_back(decimate2(blur5(prev)));
    }
    return p;
}

MotionEstimate estimate_motion(const Matrix& source, const Matrix& target, const Vector& tau_init,
                               MotionModel model, int levels) {
    if (source.rows() != target.rows() || source.cols() != target.cols())
        throw std::invalid_argument("estimate_motion: image sizes differ");
    if (levels < 1) throw std::invalid_argument("estimate_motion: levels must be >= 1");

    MotionEstimate est;
    if (model == MotionModel::Identity) {
        est.params = identity_params(model);
        est.initial_residual = est.final_residual = (source - target).squaredNorm();
        return est;
    }
    if (tau_init.size() != param_count(model))
        throw std::invalid_argument("estimate_motion: tau_init does not match model");

    // optimize the sampling map; the returned tau is its inverse
    const Transform init_sampling = invert_transform(params_to_matrix(tau_init, model));
    Vector sampling = matrix_to_params(init_sampling, model);

    const Pyramid src_pyr = build_pyramid(source, levels);
    const Pyramid tgt_pyr = build_pyramid(target, levels);
    const int built = static_cast<int>(src_pyr.levels.size());

    for (int level = built - 1; level >= 0; --level) {
        const double scale = std::ldexp(1.0, -level);  // 2^-level
        Vector level_params = scale_translation(sampling, model, scale);
        refine_level(src_pyr.levels[level], tgt_pyr.levels[level], model, level_params);
        sampling = scale_translation(level_params, model, 1.0 / scale);
    }

    const double init_residual = warp_residual_ssd(source, target, init_sampling);
    const double final_residual =
        warp_residual_ssd(source, target, params_to_matrix(sampling, model));

    est.initial_residual = init_residual;
    if (final_residual <= init_residual) {
        est.params = matrix_to_params(invert_transform(params_to_matrix(sampling, model)), model);
        est.final_residual = final_residual;
    } else {
        est.params = tau_init;
        est.final_residual = init_residual;
        est.warning = true;
    }
    return est;
}

PrealignResult prealign_to_middle(const FrameStack& stack, MotionModel model, int levels) {
    const int n = stack.frames();
    if (n < 2) throw std::invalid_argument("prealign_to_middle: need at least two frames");

    PrealignResult out;
    out.params.model = model;
    out.params.per_frame.assign(n, identity_params(model));
    if (model == MotionModel::Identity) return out;

    const int mid = n / 2;
    const Matrix target = column_to_image(stack.data.col(mid), stack.width, stack.height);
    for (int j = 0; j < n; ++j) {
        if (j == mid) continue;
        const Matrix frame = column_to_image(stack.data.col(j), stack.width, stack.height);
        const MotionEstimate est =
            estimate_motion(frame, target, identity_params(model), model, levels);
        out.params.per_frame[j] = est.params;
        if (est.warning) ++out.warnings;
    }
    return out;
}

}  // namespace lrsd
