#include "lrsd/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace lrsd {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Smooth blob background in roughly [0.3, 0.7]. With flat_border the
// texture fades out only within 15% of the border, so warp clamping stays
// consistent while the interior keeps full contrast for alignment.
Matrix smooth_background(int width, int height, std::mt19937_64& rng, bool flat_border) {
    std::uniform_real_distribution<double> amp(-1.0, 1.0);
    std::uniform_real_distribution<double> pos(0.1, 0.9);
    std::uniform_real_distribution<double> sig(0.04, 0.14);

    struct Blob {
        double a, cx, cy, s;
    };
    std::vector<Blob> blobs(16);
    const double diag = std::sqrt(static_cast<double>(width) * width +
                                  static_cast<double>(height) * height);
    for (auto& b : blobs) b = {amp(rng), pos(rng) * width, pos(rng) * height, sig(rng) * diag};

    const auto edge = [](double dist, double margin) {
        if (dist >= margin) return 1.0;
        const double t = std::max(0.0, dist / margin);
        return t * t * (3.0 - 2.0 * t);
    };

    Matrix img(height, width);
    double sumsq = 0.0;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double dev = 0.0;
            for (const auto& b : blobs) {
                const double dx = x - b.cx, dy = y - b.cy;
                dev += b.a * std::exp(-(dx * dx + dy * dy) / (2 * b.s * b.s));
            }
            img(y, x) = dev;
            sumsq += dev * dev;
        }
    const double rms = std::max(std::sqrt(sumsq / (width * height)), 1e-12);

    // fine-scale static texture anchors gradient-based alignment the way
    // real surfaces do; a lightly blurred noise field keeps it resolvable
    // under bilinear resampling
    Matrix fine(height, width);
    std::normal_distribution<double> gauss;
    for (Eigen::Index i = 0; i < fine.size(); ++i) fine.data()[i] = gauss(rng);
    Matrix fs(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double acc = 0.0, wsum = 0.0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double w = (dx == 0 && dy == 0) ? 2.0 : 1.0;
                    acc += w * fine(std::clamp(y + dy, 0, height - 1),
                                    std::clamp(x + dx, 0, width - 1));
                    wsum += w;
                }
            fs(y, x) = acc / wsum;
        }
    const double frms = std::max(fs.norm() / std::sqrt(double(fs.size())), 1e-12);

    const double mx = 0.15 * width, my = 0.15 * height;
    for (int y = 0; y < height; ++y) {
        const double wy =
            flat_border ? edge(std::min<double>(y, height - 1.0 - y), my) : 1.0;
        for (int x = 0; x < width; ++x) {
            const double wx =
                flat_border ? edge(std::min<double>(x, width - 1.0 - x), mx) : 1.0;
            const double w = std::min(wx, wy);
            const double v =
                0.5 + (0.2 * std::tanh(img(y, x) / (1.2 * rms)) + 0.07 * fs(y, x) / frms) * w;
            img(y, x) = std::clamp(v, 0.02, 0.98);
        }
    }
    return img;
}

void add_noise(Matrix& data, double sigma, std::mt19937_64& rng) {
    if (sigma <= 0.0) return;
    std::normal_distribution<double> gauss(0.0, sigma);
    for (Eigen::Index i = 0; i < data.size(); ++i) data.data()[i] += gauss(rng);
}

// contrast push away from the local background value, staying inside [0,1]
double object_value(double background, double contrast) {
    return background < 0.5 ? std::min(1.0, background + contrast)
                            : std::max(0.0, background - contrast);
}

}  // namespace

SyntheticSequence synth_spikes(int width, int height, int n, double spike_fraction,
                               double spike_magnitude, double noise_sigma, std::uint64_t seed,
                               int background_modes) {
    if (spike_fraction < 0.0 || spike_fraction > 1.0)
        throw std::invalid_argument("synth_spikes: fraction out of range");
    std::mt19937_64 rng(seed);
    const Matrix bg = smooth_background(width, height, rng, false);
    const Vector base = image_to_column(bg);
    const Eigen::Index m = base.size();

    SyntheticSequence seq;
    seq.frames.width = width;
    seq.frames.height = height;
    seq.frames.data.resize(m, n);
    seq.truth = MaskStack::zeros(width, height, n);

    for (int j = 0; j < n; ++j) seq.frames.data.col(j) = base;

    // optional low-amplitude extra modes make the background mildly dynamic
    for (int mode = 1; mode < background_modes; ++mode) {
        const Vector shape = image_to_column(smooth_background(width, height, rng, false)) -
                             Vector::Constant(m, 0.5);
        std::uniform_real_distribution<double> phase(0.0, 2 * kPi);
        const double ph = phase(rng);
        for (int j = 0; j < n; ++j)
            seq.frames.data.col(j) += 0.25 * std::sin(2 * kPi * j / n + ph) * shape;
    }

    const std::size_t total = static_cast<std::size_t>(m) * n;
    const std::size_t spikes = static_cast<std::size_t>(spike_fraction * total);
    std::vector<std::size_t> idx(total);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t s = 0; s < spikes; ++s) {
        const std::size_t i = idx[s];
        double& v = seq.frames.data.data()[i];
        v += (v < 0.5 ? spike_magnitude : -spike_magnitude);
        seq.truth.bits[i] = 1;
    }

    add_noise(seq.frames.data, noise_sigma, rng);
    return seq;
}

SyntheticSequence synth_moving_block(int width, int height, int n, int block_size,
                                     double speed_px_per_frame, double contrast,
                                     double noise_sigma, std::uint64_t seed,
                                     double camera_jitter) {
    std::mt19937_64 rng(seed);
    const int margin = static_cast<int>(std::ceil(camera_jitter)) + 2;
    const Matrix world =
        smooth_background(width + 2 * margin, height + 2 * margin, rng, camera_jitter > 0.0);

    SyntheticSequence seq;
    seq.frames.width = width;
    seq.frames.height = height;
    seq.frames.data.resize(static_cast<Eigen::Index>(width) * height, n);
    seq.truth = MaskStack::zeros(width, height, n);

    std::vector<double> cam_x(n, 0.0), cam_y(n, 0.0);
    for (int j = 0; j < n; ++j) {
        cam_x[j] = camera_jitter * std::sin(2 * kPi * j / n);
        cam_y[j] = camera_jitter * std::cos(2 * kPi * j / n);
    }
    const int mid = n / 2;

    const int x0 = margin + width / 4, y0 = margin + height / 3;
    for (int j = 0; j < n; ++j) {
        const int bx = x0 + static_cast<int>(std::lround(speed_px_per_frame * j));
        const int by = y0 + static_cast<int>(std::lround(0.5 * speed_px_per_frame * j));
        Matrix scene = world;
        for (int y = by; y < std::min<int>(by + block_size, scene.rows()); ++y)
            for (int x = bx; x < std::min<int>(bx + block_size, scene.cols()); ++x)
                scene(y, x) = object_value(world(y, x), contrast);

        Matrix frame(height, width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double wx = x + margin + cam_x[j];
                const double wy = y + margin + cam_y[j];
                const int ix = static_cast<int>(std::floor(wx));
                const int iy = static_cast<int>(std::floor(wy));
                const double fx = wx - ix, fy = wy - iy;
                const double top = scene(iy, ix) + fx * (scene(iy, ix + 1) - scene(iy, ix));
                const double bot =
                    scene(iy + 1, ix) + fx * (scene(iy + 1, ix + 1) - scene(iy + 1, ix));
                frame(y, x) = top + fy * (bot - top);
            }
        seq.frames.data.col(j) = image_to_column(frame);

        const int rx = bx - margin - static_cast<int>(std::lround(cam_x[mid]));
        const int ry = by - margin - static_cast<int>(std::lround(cam_y[mid]));
        for (int y = std::max(0, ry); y < std::min(height, ry + block_size); ++y)
            for (int x = std::max(0, rx); x < std::min(width, rx + block_size); ++x)
                seq.truth.set(j, y, x, true);
    }

    add_noise(seq.frames.data, noise_sigma, rng);
    return seq;
}

SyntheticSequence synth_vertical_bar(int width, int height, int n, int bar_width, double speed,
                                     double contrast, double noise_sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Matrix bg = smooth_background(width, height, rng, false);

    SyntheticSequence seq;
    seq.frames.width = width;
    seq.frames.height = height;
    seq.frames.data.resize(static_cast<Eigen::Index>(width) * height, n);
    seq.truth = MaskStack::zeros(width, height, n);

    const int range = std::max(1, width - bar_width);
    for (int j = 0; j < n; ++j) {
        Matrix frame = bg;
        const int bx = static_cast<int>(std::lround(speed * j)) % range;
        for (int x = bx; x < bx + bar_width; ++x)
            for (int y = 0; y < height; ++y) {
                frame(y, x) = object_value(bg(y, x), contrast);
                seq.truth.set(j, y, x, true);
            }
        seq.frames.data.col(j) = image_to_column(frame);
    }

    add_noise(seq.frames.data, noise_sigma, rng);
    return seq;
}

SyntheticSequence synth_shifting_camera(int width, int height, int n, double max_shift,
                                        int object_size, double contrast, double noise_sigma,
                                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const int margin = static_cast<int>(std::ceil(max_shift)) + 2;
    const Matrix world = smooth_background(width + 2 * margin, height + 2 * margin, rng, true);

    SyntheticSequence seq;
    seq.frames.width = width;
    seq.frames.height = height;
    seq.frames.data.resize(static_cast<Eigen::Index>(width) * height, n);
    seq.truth = MaskStack::zeros(width, height, n);

    // camera path and the aligned reference (middle frame's offset)
    std::vector<double> cam_x(n), cam_y(n);
    for (int j = 0; j < n; ++j) {
        cam_x[j] = max_shift * std::sin(2 * kPi * j / n);
        cam_y[j] = max_shift * std::cos(2 * kPi * j / n);
    }
    const int mid = n / 2;

    for (int j = 0; j < n; ++j) {
        // object path crosses the middle of the world
        const int ox = margin + width / 5 +
                       static_cast<int>(std::lround((0.6 * width) * j / std::max(1, n - 1)));
        const int oy = margin + height / 2 - object_size / 2;
        Matrix scene = world;
        for (int y = oy; y < std::min<int>(oy + object_size, scene.rows()); ++y)
            for (int x = ox; x < std::min<int>(ox + object_size, scene.cols()); ++x)
                scene(y, x) = object_value(world(y, x), contrast);

        Matrix frame(height, width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) {
                const double wx = x + margin + cam_x[j];
                const double wy = y + margin + cam_y[j];
                const int x0 = static_cast<int>(std::floor(wx));
                const int y0 = static_cast<int>(std::floor(wy));
                const double fx = wx - x0, fy = wy - y0;
                const double top = scene(y0, x0) + fx * (scene(y0, x0 + 1) - scene(y0, x0));
                const double bot =
                    scene(y0 + 1, x0) + fx * (scene(y0 + 1, x0 + 1) - scene(y0 + 1, x0));
                frame(y, x) = top + fy * (bot - top);
            }
        seq.frames.data.col(j) = image_to_column(frame);

        // truth in aligned coordinates: object rectangle relative to the
        // reference camera position
        const int rx = ox - margin - static_cast<int>(std::lround(cam_x[mid]));
        const int ry = oy - margin - static_cast<int>(std::lround(cam_y[mid]));
        for (int y = std::max(0, ry); y < std::min(height, ry + object_size); ++y)
            for (int x = std::max(0, rx); x < std::min(width, rx + object_size); ++x)
                seq.truth.set(j, y, x, true);
    }

    add_noise(seq.frames.data, noise_sigma, rng);
    return seq;
}

}  // namespace lrsd
