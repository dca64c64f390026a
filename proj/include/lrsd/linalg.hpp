// Dense matrix substrate: norms, proximal/thresholding operators, truncated
// SVD and leverage scores shared by all decomposition drivers.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

namespace lrsd {

using Matrix = Eigen::MatrixXd;  // column-major, double
using Vector = Eigen::VectorXd;

// A sequence of n grayscale frames flattened into an m x n matrix,
// m = width*height. Column j holds frame j in row-major pixel order
// (index = y*width + x), values scaled to [0,1].
struct FrameStack {
    int width = 0;
    int height = 0;
    Matrix data;

    int pixels() const { return width * height; }
    int frames() const { return static_cast<int>(data.cols()); }
};

// height x width view of one flattened frame column.
inline Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
frame_view(const Matrix& stack_data, int col, int width, int height) {
    return {stack_data.col(col).data(), height, width};
}

Matrix column_to_image(const Vector& col, int width, int height);
Vector image_to_column(const Matrix& image);

// Top-k singular triplets. singular_values nonincreasing, U/V column-orthonormal.
struct SvdTruncation {
    Vector singular_values;
    Matrix left_vectors;   // m x k
    Matrix right_vectors;  // n x k

    int rank() const { return static_cast<int>(singular_values.size()); }
    Matrix reconstruct() const;
};

// Sparsity model selecting the S-update of a decomposition:
// entrywise soft threshold, per-frame image-column shrinkage, or a global
// cardinality cap.
struct SparsityRule {
    enum class Kind { SoftEntry, ColumnBlock, Cardinality };

    Kind kind = Kind::SoftEntry;
    double lambda = 0.0;
    std::size_t cardinality = 0;

    static SparsityRule soft_entry(double lambda);
    static SparsityRule column_block(double lambda);
    static SparsityRule cardinality_cap(std::size_t kappa);
};

double frobenius_norm(const Matrix& m);

// Entrywise sign(x)*max(|x|-lambda, 0). Throws on negative lambda.
Matrix soft_threshold(const Matrix& m, double lambda);

// Each column c -> c * max(0, 1 - lambda/||c||_2); zero columns unchanged.
Matrix column_shrink(const Matrix& m, double lambda);

// Keeps the kappa largest-magnitude entries, zeroes the rest. Ties at the
// cut magnitude are broken by lowest linear (column-major) index.
Matrix hard_threshold_top(const Matrix& m, std::size_t kappa);

// Same selection written into a preallocated target (every entry is
// assigned); returns the kept squared energy.
double hard_threshold_top_into(const Matrix& m, std::size_t kappa, Matrix& out);

// Magnitude of the kappa-th largest |entry| plus how many strictly-greater
// entries exist. Shared by hard_threshold_top and the SVD-free driver.
// scale_hint > 0 sets the histogram bin scale and saves the max pass; any
// positive value gives the exact cut (magnitudes beyond it share the top
// bin, which is resolved by selection within the bin).
struct MagnitudeCut {
    double threshold = 0.0;
    std::size_t count_above = 0;  // entries with |x| > threshold
};
MagnitudeCut top_magnitude_cut(const double* data, std::size_t size, std::size_t kappa,
                               double scale_hint = -1.0);

// Writes the top-kappa selection of src into dst (every entry assigned,
// lowest-linear-index tie rule); returns the kept squared energy. When
// row_sums is given it receives the per-row sums of dst.
double scatter_magnitude_cut(const Matrix& src, const MagnitudeCut& cut, std::size_t kappa,
                             Matrix& dst, Vector* row_sums = nullptr);

inline constexpr std::uint64_t kDefaultSvdSeed = 0x5eed5eedULL;

// Top-k SVD. Exact dense eigendecomposition of the small-side Gram matrix
// when min(m,n) <= 64, block power iteration with Gram-Schmidt
// re-orthonormalization otherwise (subspace-angle tolerance 1e-10, at most
// 500 sweeps; non-convergence throws SvdConvergenceError).
struct SvdConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
SvdTruncation truncated_svd(const Matrix& m, int k, std::uint64_t seed = kDefaultSvdSeed);

// Best rank-k Frobenius approximation, sum of the top-k singular triplets.
Matrix rank_k_project(const Matrix& m, int k, std::uint64_t seed = kDefaultSvdSeed);

// Normalized leverage scores over columns: pi_i = (1/p) * sum_{k<=p} (V_k^i)^2
// with V_k the top-p right singular vectors. Nonnegative, sums to 1.
// Throws when p exceeds min(rows, cols) or the numerical rank.
Vector leverage_scores(const Matrix& m, int p);

// Row means; the vector l minimizing ||E - l*1^T||_F^2.
Vector row_mean_vector(const Matrix& e);

// Column-wise equivalent of leverage_scores given a precomputed numerical
// rank clamp: p is reduced to the numerical rank, and an all-zero matrix
// yields an empty vector. Used by the ghost-removal initializer.
Vector leverage_scores_clamped(const Matrix& m, int p);

}  // namespace lrsd
