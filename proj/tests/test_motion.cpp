#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lrsd/motion.hpp"
#include "test_util.hpp"

using lrsd::Matrix;
using lrsd::MotionModel;
using lrsd::Vector;

namespace {

Vector translation(double tx, double ty) {
    Vector t(2);
    t << tx, ty;
    return t;
}

double mean_abs_interior(const Matrix& a, const Matrix& b, int margin) {
    double acc = 0.0;
    int count = 0;
    for (int y = margin; y < a.rows() - margin; ++y)
        for (int x = margin; x < a.cols() - margin; ++x) {
            acc += std::abs(a(y, x) - b(y, x));
            ++count;
        }
    return acc / count;
}

}  // namespace

TEST_CASE("warp_frame identity is bit-exact") {
    const Matrix img = testutil::smooth_image(40, 30, 1);
    const Matrix out = lrsd::warp_frame(img, lrsd::identity_params(MotionModel::Affine),
                                        MotionModel::Affine);
    CHECK((out - img).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("warp_frame translation matches integer-shift oracle") {
    const int w = 32, h = 24;
    Matrix ramp(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) ramp(y, x) = static_cast<double>(x) / w;

    const Matrix out = lrsd::warp_frame(ramp, translation(1, 0), MotionModel::Translation);
    for (int y = 0; y < h; ++y)
        for (int x = 1; x < w; ++x)
            CHECK(out(y, x) == doctest::Approx(ramp(y, x - 1)).epsilon(1e-12));
}

TEST_CASE("warp_frame similarity rotation by 90 degrees on symmetric checkerboard") {
    const int cells = 5, cell = 16, n = cells * cell;
    Matrix board(n, n);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) board(y, x) = ((x / cell + y / cell) % 2) ? 1.0 : 0.0;

    // rotation about the image center: t = c - R c
    const double c = (n - 1) / 2.0;
    Vector tau(4);
    tau << -1.0, 1.0, c - (0.0 * c - 1.0 * c), c - (1.0 * c + 0.0 * c);
    const Matrix out = lrsd::warp_frame(board, tau, MotionModel::Similarity);
    CHECK((out - board).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("warp_frame rejects non-invertible parameters") {
    Vector tau(6);
    tau << -1.0, 0.0, 0.0, -1.0, 0.0, 0.0;  // zero linear part
    const Matrix img = testutil::smooth_image(20, 20, 2);
    CHECK_THROWS_AS(lrsd::warp_frame(img, tau, MotionModel::Affine), std::invalid_argument);
}

TEST_CASE("warp then inverse warp recovers the interior") {
    const Matrix img = testutil::smooth_image(80, 60, 3);
    Vector tau(6);
    tau << 0.01, 0.004, -0.003, 0.008, 1.7, -0.9;
    const Matrix warped = lrsd::warp_frame(img, tau, MotionModel::Affine);
    const Matrix back =
        lrsd::warp_frame(warped, lrsd::invert_params(tau, MotionModel::Affine), MotionModel::Affine);
    CHECK(mean_abs_interior(img, back, 6) <= 2e-2);
}

TEST_CASE("build_pyramid respects the minimum level size") {
    const Matrix img = testutil::smooth_image(70, 50, 4);
    const lrsd::Pyramid p = lrsd::build_pyramid(img, 5);
    CHECK(p.levels.size() == 2);  // 35x25 next would violate the 16 px floor at level 2
    CHECK(p.levels[0].rows() == 50);
    CHECK(p.levels[1].rows() == 25);
    CHECK(p.levels[1].cols() == 35);
}

TEST_CASE("estimate_motion with identical images returns identity") {
    const Matrix img = testutil::smooth_image(64, 48, 5);
    const auto est = lrsd::estimate_motion(img, img, lrsd::identity_params(MotionModel::Affine),
                                           MotionModel::Affine, 3);
    CHECK(est.params.cwiseAbs().maxCoeff() <= 1e-6);
    CHECK_FALSE(est.warning);
}

TEST_CASE("estimate_motion recovers a sub-pixel translation") {
    const Matrix img = testutil::smooth_image(120, 90, 6);
    const Vector truth = translation(2.5, -1.25);
    const Matrix target = lrsd::warp_frame(img, truth, MotionModel::Translation);
    const auto est = lrsd::estimate_motion(img, target, translation(0, 0),
                                           MotionModel::Translation, 3);
    CHECK(std::abs(est.params[0] - 2.5) <= 0.1);
    CHECK(std::abs(est.params[1] + 1.25) <= 0.1);
    CHECK(est.final_residual <= est.initial_residual);
}

TEST_CASE("estimate_motion recovers a small affine transform") {
    const Matrix img = testutil::smooth_image(120, 90, 7);
    Vector truth(6);
    truth << 0.02, 0.01, -0.01, -0.02, 1.0, 1.0;  // [1.02 0.01; -0.01 0.98] + (1,1)
    const Matrix target = lrsd::warp_frame(img, truth, MotionModel::Affine);
    const auto est = lrsd::estimate_motion(img, target, lrsd::identity_params(MotionModel::Affine),
                                           MotionModel::Affine, 3);
    for (int i = 0; i < 6; ++i) CHECK(std::abs(est.params[i] - truth[i]) <= 1e-2);
}

TEST_CASE("composition consistency: estimate then warp back") {
    const Matrix img = testutil::smooth_image(100, 80, 8);
    Vector truth(4);
    truth << 0.01, 0.02, -1.2, 0.7;
    const Matrix target = lrsd::warp_frame(img, truth, MotionModel::Similarity);
    const auto est = lrsd::estimate_motion(img, target, lrsd::identity_params(MotionModel::Similarity),
                                           MotionModel::Similarity, 3);
    const Matrix aligned = lrsd::warp_frame(img, est.params, MotionModel::Similarity);
    CHECK(mean_abs_interior(aligned, target, 5) <= 2e-2);
}

TEST_CASE("prealign_to_middle conventions") {
    const Matrix img = testutil::smooth_image(60, 44, 9);
    lrsd::FrameStack stack;
    stack.width = 60;
    stack.height = 44;

    SUBCASE("identical frames give identity everywhere") {
        stack.data.resize(stack.pixels(), 3);
        for (int j = 0; j < 3; ++j) stack.data.col(j) = lrsd::image_to_column(img);
        const auto pre = lrsd::prealign_to_middle(stack, MotionModel::Translation);
        for (int j = 0; j < 3; ++j) CHECK(pre.params.per_frame[j].cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(pre.warnings == 0);
    }

    SUBCASE("three frames with one-pixel cumulative shifts") {
        stack.data.resize(stack.pixels(), 3);
        stack.data.col(0) =
            lrsd::image_to_column(lrsd::warp_frame(img, translation(-1, 0), MotionModel::Translation));
        stack.data.col(1) = lrsd::image_to_column(img);
        stack.data.col(2) =
            lrsd::image_to_column(lrsd::warp_frame(img, translation(1, 0), MotionModel::Translation));
        const auto pre = lrsd::prealign_to_middle(stack, MotionModel::Translation);
        CHECK(std::abs(pre.params.per_frame[0][0] - 1.0) <= 0.1);
        CHECK(pre.params.per_frame[1].cwiseAbs().maxCoeff() == 0.0);
        CHECK(std::abs(pre.params.per_frame[2][0] + 1.0) <= 0.1);
    }

    SUBCASE("two frames: the second frame is the middle") {
        stack.data.resize(stack.pixels(), 2);
        stack.data.col(0) =
            lrsd::image_to_column(lrsd::warp_frame(img, translation(-1, 0), MotionModel::Translation));
        stack.data.col(1) = lrsd::image_to_column(img);
        const auto pre = lrsd::prealign_to_middle(stack, MotionModel::Translation);
        CHECK(pre.params.per_frame[1].cwiseAbs().maxCoeff() == 0.0);
        CHECK(std::abs(pre.params.per_frame[0][0] - 1.0) <= 0.1);
    }

    SUBCASE("single frame is rejected") {
        stack.data.resize(stack.pixels(), 1);
        stack.data.col(0) = lrsd::image_to_column(img);
        CHECK_THROWS_AS(lrsd::prealign_to_middle(stack, MotionModel::Translation),
                        std::invalid_argument);
    }
}
