#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "lrsd/linalg.hpp"
#include "test_util.hpp"

using lrsd::Matrix;
using lrsd::Vector;

TEST_CASE("frobenius_norm basics") {
    Matrix m(1, 2);
    m << 3, 4;
    CHECK(lrsd::frobenius_norm(m) == doctest::Approx(5.0));
    CHECK(lrsd::frobenius_norm(Matrix::Zero(2, 2)) == 0.0);
    CHECK(lrsd::frobenius_norm(Matrix::Identity(2, 2)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("soft_threshold entries") {
    Matrix m(1, 3);
    m << 0.25, -0.05, -0.30;
    const Matrix s = lrsd::soft_threshold(m, 0.1);
    CHECK(s(0, 0) == doctest::Approx(0.15));
    CHECK(s(0, 1) == 0.0);
    CHECK(s(0, 2) == doctest::Approx(-0.20));
    CHECK_THROWS_AS(lrsd::soft_threshold(m, -0.1), std::invalid_argument);
}

TEST_CASE("soft_threshold matches scalar prox oracle") {
    // minimizer of (x-s)^2/2 + lambda*|s|, found numerically per entry
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> ux(-2.0, 2.0);
    std::uniform_real_distribution<double> ul(0.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        const double x = ux(rng);
        const double lambda = ul(rng);
        const double oracle = testutil::golden_minimize(
            [&](double s) { return 0.5 * (x - s) * (x - s) + lambda * std::abs(s); }, -3.0, 3.0);
        Matrix m(1, 1);
        m << x;
        CHECK(lrsd::soft_threshold(m, lambda)(0, 0) == doctest::Approx(oracle).epsilon(1e-6));
    }
}

TEST_CASE("column_shrink examples and oracle") {
    Matrix m(2, 1);
    m << 3, 4;
    CHECK(lrsd::column_shrink(m, 5.0).isZero(0.0));

    const Matrix s = lrsd::column_shrink(m, 2.5);
    CHECK(s(0, 0) == doctest::Approx(1.5));
    CHECK(s(1, 0) == doctest::Approx(2.0));

    // oracle: minimize ||h - t*h/||h|| ||^2/2 + lambda*t over the ray through h
    const double t = testutil::golden_minimize(
        [&](double tt) { return 0.5 * (5.0 - tt) * (5.0 - tt) + 2.5 * tt; }, 0.0, 10.0);
    CHECK(s(0, 0) == doctest::Approx(t * 3.0 / 5.0).epsilon(1e-6));
    CHECK(s(1, 0) == doctest::Approx(t * 4.0 / 5.0).epsilon(1e-6));

    const Matrix r = testutil::random_matrix(6, 4, 7);
    CHECK((lrsd::column_shrink(r, 0.0) - r).norm() == 0.0);
}

TEST_CASE("column_shrink norm identity") {
    const Matrix m = testutil::random_matrix(8, 10, 11);
    const double lambda = 0.7 * m.col(0).norm();
    const Matrix s = lrsd::column_shrink(m, lambda);
    for (int c = 0; c < m.cols(); ++c) {
        const double expect = std::max(0.0, m.col(c).norm() - lambda);
        CHECK(s.col(c).norm() == doctest::Approx(expect).epsilon(1e-10));
    }
}

TEST_CASE("hard_threshold_top examples") {
    Matrix m(2, 2);
    m << 1, -3, 2, 0.5;  // column-major data: 1, 2, -3, 0.5
    const Matrix k2 = lrsd::hard_threshold_top(m, 2);
    CHECK(k2(0, 0) == 0.0);
    CHECK(k2(1, 0) == 2.0);
    CHECK(k2(0, 1) == -3.0);
    CHECK(k2(1, 1) == 0.0);

    CHECK(lrsd::hard_threshold_top(m, 0).isZero(0.0));
    CHECK((lrsd::hard_threshold_top(m, 4) - m).norm() == 0.0);
    CHECK_THROWS_AS(lrsd::hard_threshold_top(m, 5), std::invalid_argument);
}

TEST_CASE("hard_threshold_top deterministic ties") {
    Matrix m(2, 2);
    m << 1.0, -1.0, 1.0, 0.5;  // linear order: 1, 1, -1, 0.5
    const Matrix k2 = lrsd::hard_threshold_top(m, 2);
    CHECK(k2(0, 0) == 1.0);
    CHECK(k2(1, 0) == 1.0);
    CHECK(k2(0, 1) == 0.0);
    CHECK(k2(1, 1) == 0.0);
}

TEST_CASE("hard_threshold_top vs sort oracle") {
    for (std::uint64_t seed = 0; seed < 12; ++seed) {
        const Matrix m = testutil::random_matrix(9, 7, 100 + seed);
        const std::size_t kappa = seed * 5 % (9 * 7 + 1);
        const Matrix out = lrsd::hard_threshold_top(m, kappa);

        std::vector<double> mags(m.data(), m.data() + m.size());
        for (double& v : mags) v = std::abs(v);
        std::sort(mags.begin(), mags.end(), std::greater<>());

        std::size_t nnz = 0;
        double min_kept = std::numeric_limits<double>::infinity();
        double max_dropped = 0.0;
        for (Eigen::Index i = 0; i < m.size(); ++i) {
            if (out.data()[i] != 0.0) {
                CHECK(out.data()[i] == m.data()[i]);
                ++nnz;
                min_kept = std::min(min_kept, std::abs(m.data()[i]));
            } else if (m.data()[i] != 0.0) {
                max_dropped = std::max(max_dropped, std::abs(m.data()[i]));
            }
        }
        std::size_t nonzero_input = 0;
        for (Eigen::Index i = 0; i < m.size(); ++i)
            if (m.data()[i] != 0.0) ++nonzero_input;
        CHECK(nnz == std::min(kappa, nonzero_input));
        if (nnz > 0 && nnz < nonzero_input) CHECK(min_kept >= max_dropped);
    }
}

TEST_CASE("truncated_svd diagonal and rank-1 cases") {
    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    const auto svd = lrsd::truncated_svd(d, 1);
    CHECK(svd.singular_values[0] == doctest::Approx(3.0));
    Matrix want = Matrix::Zero(2, 2);
    want(0, 0) = 3;
    CHECK((svd.reconstruct() - want).norm() < 1e-12);

    const Vector u = testutil::random_matrix(12, 1, 3).col(0);
    const Vector v = testutil::random_matrix(5, 1, 4).col(0);
    const Matrix outer = u * v.transpose();
    CHECK((lrsd::truncated_svd(outer, 1).reconstruct() - outer).norm() < 1e-10);
}

TEST_CASE("truncated_svd against full-decomposition oracle") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const Matrix m = testutil::random_matrix(20, 8, 500 + seed);
        const auto svd = lrsd::truncated_svd(m, 3);
        Eigen::JacobiSVD<Matrix> oracle(m);
        double tail = 0.0;
        for (int i = 3; i < 8; ++i) tail += oracle.singularValues()[i] * oracle.singularValues()[i];
        const double resid = (m - svd.reconstruct()).squaredNorm();
        CHECK(resid == doctest::Approx(tail).epsilon(1e-8));
        for (int i = 0; i < 3; ++i)
            CHECK(svd.singular_values[i] == doctest::Approx(oracle.singularValues()[i]).epsilon(1e-9));
    }
}

TEST_CASE("truncated_svd invariants and Eckart-Young optimality") {
    const Matrix m = testutil::random_matrix(25, 10, 77);
    const auto svd = lrsd::truncated_svd(m, 4);

    CHECK((svd.left_vectors.transpose() * svd.left_vectors - Matrix::Identity(4, 4)).norm() < 1e-8);
    CHECK((svd.right_vectors.transpose() * svd.right_vectors - Matrix::Identity(4, 4)).norm() < 1e-8);
    for (int i = 1; i < 4; ++i) CHECK(svd.singular_values[i] <= svd.singular_values[i - 1]);
    for (int i = 0; i < 4; ++i) CHECK(svd.singular_values[i] >= 0.0);

    const double ours = (m - svd.reconstruct()).norm();
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const Matrix a = testutil::random_matrix(25, 4, 900 + seed);
        const Matrix b = testutil::random_matrix(10, 4, 950 + seed);
        const double competitor = (m - a * b.transpose()).norm();
        CHECK(competitor >= ours - 1e-8);
    }
}

TEST_CASE("truncated_svd block power path on tall matrices") {
    // min(m,n) > 64 exercises the iterative branch
    const Matrix base = testutil::random_matrix(300, 70, 13);
    const auto svd = lrsd::truncated_svd(base, 2);
    Eigen::JacobiSVD<Matrix> oracle(base);
    CHECK(svd.singular_values[0] == doctest::Approx(oracle.singularValues()[0]).epsilon(1e-8));
    CHECK(svd.singular_values[1] == doctest::Approx(oracle.singularValues()[1]).epsilon(1e-8));
    CHECK((svd.left_vectors.transpose() * svd.left_vectors - Matrix::Identity(2, 2)).norm() < 1e-8);
}

TEST_CASE("rank_k_project basics") {
    const Vector u = testutil::random_matrix(9, 1, 21).col(0);
    const Vector v = testutil::random_matrix(6, 1, 22).col(0);
    const Matrix outer = u * v.transpose();
    CHECK((lrsd::rank_k_project(outer, 1) - outer).norm() < 1e-10);

    const Matrix m = testutil::random_matrix(7, 5, 23);
    CHECK((lrsd::rank_k_project(m, 5) - m).norm() < 1e-8);

    Matrix d = Matrix::Zero(2, 2);
    d(0, 0) = 3;
    d(1, 1) = 1;
    Matrix want = Matrix::Zero(2, 2);
    want(0, 0) = 3;
    CHECK((lrsd::rank_k_project(d, 1) - want).norm() < 1e-12);
}

TEST_CASE("leverage_scores closed cases") {
    const Vector u = testutil::random_matrix(10, 1, 31).col(0);
    Vector v(2);
    v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    const Vector pi = lrsd::leverage_scores(u * v.transpose(), 1);
    CHECK(pi[0] == doctest::Approx(0.5));
    CHECK(pi[1] == doctest::Approx(0.5));

    Vector e1 = Vector::Zero(4);
    e1[0] = 1.0;
    const Vector single = lrsd::leverage_scores(u * e1.transpose(), 1);
    CHECK(single[0] == doctest::Approx(1.0));
    for (int i = 1; i < 4; ++i) CHECK(single[i] == doctest::Approx(0.0));
}

TEST_CASE("leverage_scores against full-SVD oracle") {
    const Matrix m = testutil::random_matrix(30, 10, 404);
    const Vector pi = lrsd::leverage_scores(m, 3);
    CHECK(pi.sum() == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(pi.minCoeff() >= 0.0);

    Eigen::JacobiSVD<Matrix> oracle(m, Eigen::ComputeThinV);
    Vector want = Vector::Zero(10);
    for (int k = 0; k < 3; ++k) want += oracle.matrixV().col(k).cwiseAbs2();
    want /= 3.0;
    CHECK((pi - want).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("leverage_scores permutation equivariance and errors") {
    const Matrix m = testutil::random_matrix(12, 6, 55);
    const Vector pi = lrsd::leverage_scores(m, 2);

    std::vector<int> perm = {3, 0, 5, 1, 4, 2};
    Matrix mp(12, 6);
    for (int c = 0; c < 6; ++c) mp.col(c) = m.col(perm[c]);
    const Vector pip = lrsd::leverage_scores(mp, 2);
    for (int c = 0; c < 6; ++c) CHECK(pip[c] == doctest::Approx(pi[perm[c]]).epsilon(1e-9));

    CHECK_THROWS_AS(lrsd::leverage_scores(m, 7), std::invalid_argument);
    const Vector u = testutil::random_matrix(12, 1, 56).col(0);
    const Vector w = testutil::random_matrix(6, 1, 57).col(0);
    CHECK_THROWS_AS(lrsd::leverage_scores(Matrix(u * w.transpose()), 2), std::runtime_error);
}

TEST_CASE("row_mean_vector examples and optimality") {
    Matrix e(2, 2);
    e << 1, 3, 2, 4;
    const Vector l = lrsd::row_mean_vector(e);
    CHECK(l[0] == doctest::Approx(2.0));
    CHECK(l[1] == doctest::Approx(3.0));

    const Vector l0 = testutil::random_matrix(8, 1, 61).col(0);
    const Matrix exact = l0 * Vector::Ones(5).transpose();
    CHECK((lrsd::row_mean_vector(exact) - l0).norm() < 1e-12);
    CHECK((exact - lrsd::row_mean_vector(exact) * Vector::Ones(5).transpose()).norm() < 1e-12);

    // finite-difference first-order optimality
    const Matrix r = testutil::random_matrix(15, 6, 62);
    const Vector lr = lrsd::row_mean_vector(r);
    const auto objective = [&](const Vector& cand) {
        return (r - cand * Vector::Ones(6).transpose()).squaredNorm();
    };
    const double base = objective(lr);
    for (int i = 0; i < 15; ++i) {
        Vector up = lr, dn = lr;
        up[i] += 1e-3;
        dn[i] -= 1e-3;
        CHECK(objective(up) > base);
        CHECK(objective(dn) > base);
    }
    std::mt19937_64 rng(63);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 10; ++trial) {
        Vector d(15);
        for (int i = 0; i < 15; ++i) d[i] = gauss(rng);
        d.normalize();
        CHECK(base <= objective(lr + 1e-4 * d) + 1e-12);
    }
}

TEST_CASE("rank-1 mean vs top singular direction tracks the spectral gap") {
    // background-like ensemble: dominant right direction near the constant
    // vector, as in a static-scene frame stack
    int worst_trials = 0;
    std::mt19937_64 rng(71);
    std::uniform_real_distribution<double> logratio(std::log(1e-4), std::log(0.3));
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 30, n = 8;
        const double ratio = std::exp(logratio(rng));

        Vector sigma(n);
        sigma[0] = 1.0;
        for (int i = 1; i < n; ++i) sigma[i] = ratio * std::pow(0.6, i - 1);

        Matrix vseed = testutil::random_matrix(n, n, 7000 + trial, 0.25);
        vseed.col(0) = Vector::Ones(n) + 0.25 * testutil::random_matrix(n, 1, 7500 + trial).col(0);
        Eigen::HouseholderQR<Matrix> qr(vseed);
        const Matrix v = qr.householderQ() * Matrix::Identity(n, n);
        const Matrix u = testutil::random_orthonormal(m, n, 8000 + trial);
        const Matrix e = u * sigma.asDiagonal() * v.transpose();

        const Vector l = lrsd::row_mean_vector(e).normalized();
        const double cosang = std::min(1.0, std::abs(l.dot(u.col(0))));
        const double angle = std::acos(cosang);
        if (angle > 10.0 * ratio) ++worst_trials;
    }
    CHECK(worst_trials == 0);
}
