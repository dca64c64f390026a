#include "lrsd/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace lrsd {

namespace {

// Fills columns [start, cols) of q with unit vectors orthogonal to all
// previous columns. Deterministic: seeded from the standard basis.
void fill_orthonormal_tail(Matrix& q, int start) {
    const int rows = static_cast<int>(q.rows());
    int basis = 0;
    for (int c = start; c < static_cast<int>(q.cols()); ++c) {
        Vector v;
        double nrm = 0.0;
        while (basis < rows) {
            v = Vector::Unit(rows, basis++);
            for (int pass = 0; pass < 2; ++pass)
                for (int j = 0; j < c; ++j) v -= q.col(j).dot(v) * q.col(j);
            nrm = v.norm();
            if (nrm > 0.5) break;
        }
        if (nrm <= 0.5) throw std::runtime_error("orthonormal tail fill failed");
        q.col(c) = v / nrm;
    }
}

// Modified Gram-Schmidt re-orthonormalization, two passes.
void reorthonormalize(Matrix& q) {
    for (int c = 0; c < static_cast<int>(q.cols()); ++c) {
        for (int pass = 0; pass < 2; ++pass)
            for (int j = 0; j < c; ++j) q.col(c) -= q.col(j).dot(q.col(c)) * q.col(j);
        const double nrm = q.col(c).norm();
        if (nrm > 1e-14) {
            q.col(c) /= nrm;
        } else {
            q.col(c).setZero();
            fill_orthonormal_tail(q, c);
            // the helper already normalized this column and the rest
            return;
        }
    }
}

Matrix thin_q(const Matrix& w) {
    Eigen::HouseholderQR<Matrix> qr(w);
    return qr.householderQ() * Matrix::Identity(w.rows(), w.cols());
}

// Eigendecomposition of b^T b sorted by decreasing eigenvalue.
void gram_eigen_desc(const Matrix& b, Vector& eigenvalues, Matrix& eigenvectors) {
    const Matrix gram = b.transpose() * b;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    if (eig.info() != Eigen::Success)
        throw SvdConvergenceError("dense eigendecomposition failed");
    eigenvalues = eig.eigenvalues().reverse();
    eigenvectors = eig.eigenvectors().rowwise().reverse();
}

// Rayleigh-Ritz finish: given an orthonormal right-side basis v of b
// (b tall), rotate it onto singular triplets.
SvdTruncation finish_from_right_basis(const Matrix& b, const Matrix& v) {
    const int k = static_cast<int>(v.cols());
    const Matrix y = b * v;
    Vector lambda;
    Matrix rot;
    gram_eigen_desc(y, lambda, rot);

    SvdTruncation out;
    out.singular_values = lambda.cwiseMax(0.0).cwiseSqrt();
    out.right_vectors = v * rot;
    out.left_vectors = Matrix::Zero(b.rows(), k);
    const Matrix yrot = y * rot;
    const double tiny = std::max(out.singular_values[0], 1.0) * 1e-14;
    for (int i = 0; i < k; ++i) {
        if (out.singular_values[i] > tiny)
            out.left_vectors.col(i) = yrot.col(i) / out.singular_values[i];
        else
            out.singular_values[i] = 0.0;
    }
    // zero columns (rank-deficient tail) are replaced by an orthonormal fill
    reorthonormalize(out.left_vectors);
    return out;
}

SvdTruncation svd_dense(const Matrix& b, int k) {
    Vector lambda;
    Matrix vecs;
    gram_eigen_desc(b, lambda, vecs);
    return finish_from_right_basis(b, vecs.leftCols(k));
}

SvdTruncation svd_block_power(const Matrix& b, int k, std::uint64_t seed) {
    constexpr int kMaxSweeps = 500;
    constexpr double kAngleTol = 1e-10;

    const int cols = static_cast<int>(b.cols());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix v(cols, k);
    for (int j = 0; j < k; ++j)
        for (int i = 0; i < cols; ++i) v(i, j) = gauss(rng);
    v = thin_q(v);

    // Power stepping: when the boundary gap sigma_{k+1}/sigma_k is close to
    // 1 a single Gram application per sweep contracts the subspace angle too
    // slowly for the sweep cap, so the number of applications per sweep is
    // doubled whenever progress stalls.
    int steps_per_sweep = 1;
    double prev_angle = std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        Matrix w = v;
        for (int r = 0; r < steps_per_sweep; ++r) w = thin_q(b.transpose() * (b * w));
        const double angle = (w - v * (v.transpose() * w)).norm();
        v.swap(w);
        if (angle <= kAngleTol) {
            converged = true;
            break;
        }
        if (sweep >= 2 && angle > 0.7 * prev_angle && steps_per_sweep < 256) steps_per_sweep *= 2;
        prev_angle = angle;
    }
    if (!converged)
        throw SvdConvergenceError("block power iteration did not reach subspace tolerance");
    return finish_from_right_basis(b, v);
}

}  // namespace

Matrix column_to_image(const Vector& col, int width, int height) {
    if (col.size() != static_cast<Eigen::Index>(width) * height)
        throw std::invalid_argument("column length does not match width*height");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        col.data(), height, width);
}

Vector image_to_column(const Matrix& image) {
    const int height = static_cast<int>(image.rows());
    const int width = static_cast<int>(image.cols());
    Vector col(static_cast<Eigen::Index>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) col[static_cast<Eigen::Index>(y) * width + x] = image(y, x);
    return col;
}

Matrix SvdTruncation::reconstruct() const {
    return left_vectors * singular_values.asDiagonal() * right_vectors.transpose();
}

SparsityRule SparsityRule::soft_entry(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    SparsityRule r;
    r.kind = Kind::SoftEntry;
    r.lambda = lambda;
    return r;
}

SparsityRule SparsityRule::column_block(double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
    SparsityRule r;
    r.kind = Kind::ColumnBlock;
    r.lambda = lambda;
    return r;
}

SparsityRule SparsityRule::cardinality_cap(std::size_t kappa) {
    SparsityRule r;
    r.kind = Kind::Cardinality;
    r.cardinality = kappa;
    return r;
}

double frobenius_norm(const Matrix& m) { return m.norm(); }

Matrix soft_threshold(const Matrix& m, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("soft_threshold: negative lambda");
    return m.unaryExpr([lambda](double x) {
        const double mag = std::abs(x) - lambda;
        return mag > 0.0 ? (x > 0.0 ? mag : -mag) : 0.0;
    });
}

Matrix column_shrink(const Matrix& m, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("column_shrink: negative lambda");
    Matrix out(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        const double nrm = m.col(c).norm();
        if (nrm > lambda)
            out.col(c) = m.col(c) * (1.0 - lambda / nrm);
        else
            out.col(c).setZero();
    }
    return out;
}

MagnitudeCut top_magnitude_cut(const double* data, std::size_t size, std::size_t kappa,
                               double scale_hint) {
    MagnitudeCut cut;
    if (kappa == 0 || size == 0) {
        cut.threshold = std::numeric_limits<double>::infinity();
        return cut;
    }
    kappa = std::min(kappa, size);

    double maxabs = scale_hint;
    if (maxabs <= 0.0) {
        maxabs = 0.0;
        for (std::size_t i = 0; i < size; ++i) maxabs = std::max(maxabs, std::abs(data[i]));
    }
    if (maxabs == 0.0) return cut;  // threshold 0, nothing strictly above

    constexpr std::size_t kBins = 4096;
    const double scale = static_cast<double>(kBins) / maxabs;
    std::vector<std::size_t> hist(kBins, 0);
    for (std::size_t i = 0; i < size; ++i) {
        const std::size_t bin =
            std::min(kBins - 1, static_cast<std::size_t>(std::abs(data[i]) * scale));
        ++hist[bin];
    }

    std::size_t above = 0;
    std::size_t bin = kBins;
    while (bin > 0) {
        --bin;
        if (above + hist[bin] >= kappa) break;
        above += hist[bin];
    }

    // exact rank within the cut bin
    std::vector<double> pool;
    pool.reserve(hist[bin]);
    for (std::size_t i = 0; i < size; ++i) {
        const double a = std::abs(data[i]);
        const std::size_t b =
            std::min(kBins - 1, static_cast<std::size_t>(a * scale));
        if (b == bin) pool.push_back(a);
    }
    const std::size_t need = kappa - above;  // rank of the threshold inside the pool
    std::nth_element(pool.begin(), pool.begin() + (need - 1), pool.end(), std::greater<>());
    cut.threshold = pool[need - 1];
    cut.count_above = above;
    for (const double a : pool)
        if (a > cut.threshold) ++cut.count_above;
    return cut;
}

double scatter_magnitude_cut(const Matrix& src, const MagnitudeCut& cut, std::size_t kappa,
                             Matrix& dst, Vector* row_sums) {
    if (dst.rows() != src.rows() || dst.cols() != src.cols()) dst.resize(src.rows(), src.cols());
    if (row_sums) row_sums->setZero(src.rows());
    if (kappa == 0 || cut.threshold == std::numeric_limits<double>::infinity()) {
        dst.setZero();
        return 0.0;
    }

    double kept = 0.0;
    std::size_t ties_left = kappa - cut.count_above;
    double* sums = row_sums ? row_sums->data() : nullptr;
    for (Eigen::Index j = 0; j < src.cols(); ++j) {
        const double* in = src.col(j).data();
        double* out = dst.col(j).data();
        for (Eigen::Index i = 0; i < src.rows(); ++i) {
            const double a = std::abs(in[i]);
            double v = 0.0;
            if (a > cut.threshold) {
                v = in[i];
            } else if (a == cut.threshold && ties_left > 0) {
                // zeros are never selected: they contribute nothing
                v = in[i];
                --ties_left;
            }
            out[i] = v;
            kept += v * v;
            if (sums) sums[i] += v;
        }
    }
    return kept;
}

double hard_threshold_top_into(const Matrix& m, std::size_t kappa, Matrix& out) {
    const std::size_t total = static_cast<std::size_t>(m.size());
    if (kappa > total) throw std::invalid_argument("hard_threshold_top: kappa exceeds entry count");
    const MagnitudeCut cut = top_magnitude_cut(m.data(), total, kappa);
    return scatter_magnitude_cut(m, cut, kappa, out);
}

Matrix hard_threshold_top(const Matrix& m, std::size_t kappa) {
    Matrix out(m.rows(), m.cols());
    hard_threshold_top_into(m, kappa, out);
    return out;
}

SvdTruncation truncated_svd(const Matrix& m, int k, std::uint64_t seed) {
    const int small_side = static_cast<int>(std::min(m.rows(), m.cols()));
    if (k < 1 || k > small_side) throw std::invalid_argument("truncated_svd: invalid rank k");

    const bool transposed = m.rows() < m.cols();
    Matrix bt;
    const Matrix* work = &m;
    if (transposed) {
        bt = m.transpose();
        work = &bt;
    }

    SvdTruncation res =
        small_side <= 64 ? svd_dense(*work, k) : svd_block_power(*work, k, seed);
    if (transposed) res.left_vectors.swap(res.right_vectors);
    return res;
}

Matrix rank_k_project(const Matrix& m, int k, std::uint64_t seed) {
    return truncated_svd(m, k, seed).reconstruct();
}

namespace {

// Right singular directions of m with numerical rank, via the column Gram.
struct RightSpectrum {
    Vector sigma;   // descending
    Matrix v;       // right singular vectors, columns match sigma
    int numerical_rank = 0;
};

RightSpectrum right_spectrum(const Matrix& m) {
    RightSpectrum s;
    gram_eigen_desc(m, s.sigma, s.v);
    s.sigma = s.sigma.cwiseMax(0.0).cwiseSqrt();
    // rank tolerance sits above the Gram noise floor sqrt(eps)*sigma_1
    const double tol = s.sigma.size() > 0 ? s.sigma[0] * 1e-7 : 0.0;
    for (int i = 0; i < static_cast<int>(s.sigma.size()); ++i)
        if (s.sigma[i] > tol && s.sigma[i] > 0.0) s.numerical_rank = i + 1;
    return s;
}

Vector leverage_from_spectrum(const RightSpectrum& s, int p) {
    Vector pi = Vector::Zero(s.v.rows());
    for (int k = 0; k < p; ++k) pi += s.v.col(k).cwiseAbs2();
    return pi / static_cast<double>(p);
}

}  // namespace

Vector leverage_scores(const Matrix& m, int p) {
    if (p < 1 || p > std::min(m.rows(), m.cols()))
        throw std::invalid_argument("leverage_scores: p out of range");
    const RightSpectrum s = right_spectrum(m);
    if (p > s.numerical_rank)
        throw std::runtime_error("leverage_scores: p exceeds numerical rank");
    return leverage_from_spectrum(s, p);
}

Vector leverage_scores_clamped(const Matrix& m, int p) {
    const int cap = static_cast<int>(std::min(m.rows(), m.cols()));
    p = std::min(p, cap);
    if (p < 1) return Vector();
    const RightSpectrum s = right_spectrum(m);
    p = std::min(p, s.numerical_rank);
    if (p < 1) return Vector();
    return leverage_from_spectrum(s, p);
}

Vector row_mean_vector(const Matrix& e) {
    if (e.cols() < 1) throw std::invalid_argument("row_mean_vector: empty matrix");
    // column-wise accumulation keeps the traversal sequential in memory
    Vector acc = Vector::Zero(e.rows());
    for (Eigen::Index j = 0; j < e.cols(); ++j) acc += e.col(j);
    return acc / static_cast<double>(e.cols());
}

}  // namespace lrsd
