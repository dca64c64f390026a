#include "lrsd/image_io.hpp"

#include <fnmatch.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace lrsd {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void io_fail(const fs::path& path, const std::string& what) {
    throw std::runtime_error(path.string() + ": " + what);
}

Matrix read_png(const fs::path& path) {
    FilePtr file(std::fopen(path.c_str(), "rb"));
    if (!file) io_fail(path, "cannot open");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail(path, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail(path, "png decode error");
    }

    png_init_io(png, file.get());
    png_read_info(png, info);

    const png_byte depth = png_get_bit_depth(png, info);
    if (depth > 8) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail(path, "only 8-bit images are supported");
    }
    const png_byte color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    const int width = static_cast<int>(png_get_image_width(png, info));
    const int height = static_cast<int>(png_get_image_height(png, info));
    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_fail(path, "unsupported channel layout");
    }

    std::vector<png_byte> data(static_cast<std::size_t>(width) * height * channels);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = data.data() + static_cast<std::size_t>(y) * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Matrix img(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const png_byte* px = rows[y] + static_cast<std::size_t>(x) * channels;
            const double v = channels == 1
                                 ? px[0]
                                 : 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            img(y, x) = v;
        }
    return img;
}

Matrix read_pgm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_fail(path, "cannot open");

    std::string magic;
    in >> magic;
    if (magic != "P5") io_fail(path, "expected binary PGM (P5)");

    const auto next_int = [&]() {
        int c = in.get();
        while (c == '#' || std::isspace(c)) {
            if (c == '#')
                while (c != '\n' && c != EOF) c = in.get();
            c = in.get();
        }
        int value = 0;
        while (std::isdigit(c)) {
            value = value * 10 + (c - '0');
            c = in.get();
        }
        return value;  // consumed one whitespace after the token
    };

    const int width = next_int();
    const int height = next_int();
    const int maxval = next_int();
    if (width < 1 || height < 1) io_fail(path, "bad PGM header");
    if (maxval < 1 || maxval > 255) io_fail(path, "only 8-bit PGM is supported");

    std::vector<unsigned char> data(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (in.gcount() != static_cast<std::streamsize>(data.size()))
        io_fail(path, "truncated PGM data");

    Matrix img(height, width);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            img(y, x) = data[static_cast<std::size_t>(y) * width + x];
    return img;
}

void write_png(const Matrix& image, const fs::path& path, const std::vector<png_byte>& bytes) {
    FilePtr file(std::fopen(path.c_str(), "wb"));
    if (!file) io_fail(path, "cannot open for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        io_fail(path, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        io_fail(path, "png encode error");
    }

    const int width = static_cast<int>(image.cols());
    const int height = static_cast<int>(image.rows());
    png_init_io(png, file.get());
    png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(bytes.data()) + static_cast<std::size_t>(y) * width;
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void write_pgm(const Matrix& image, const fs::path& path, const std::vector<png_byte>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) io_fail(path, "cannot open for writing");
    out << "P5\n" << image.cols() << " " << image.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) io_fail(path, "write failed");
}

bool has_png_signature(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    unsigned char sig[8] = {};
    in.read(reinterpret_cast<char*>(sig), 8);
    return in.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0;
}

std::string csv_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::vector<fs::path> list_frames(const fs::path& dir, const std::string& glob, int max_frames) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + ": not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (fnmatch(glob.c_str(), name.c_str(), 0) == 0) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
    if (max_frames > 0 && static_cast<int>(files.size()) > max_frames) files.resize(max_frames);
    return files;
}

Matrix read_image_gray(const fs::path& path) {
    Matrix img = has_png_signature(path) ? read_png(path) : read_pgm(path);
    return img / 255.0;
}

void write_image_gray(const Matrix& image, const fs::path& path) {
    const int width = static_cast<int>(image.cols());
    const int height = static_cast<int>(image.rows());
    std::vector<png_byte> bytes(static_cast<std::size_t>(width) * height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            const double v = std::clamp(image(y, x), 0.0, 1.0);
            bytes[static_cast<std::size_t>(y) * width + x] =
                static_cast<png_byte>(std::lround(v * 255.0));
        }
    if (path.extension() == ".pgm")
        write_pgm(image, path, bytes);
    else
        write_png(image, path, bytes);
}

FrameStack load_frames(const SequenceManifest& manifest) {
    const auto files = list_frames(manifest.frames_dir, manifest.frame_glob, manifest.max_frames);
    if (files.empty())
        throw std::runtime_error(manifest.frames_dir.string() + ": no frames match '" +
                                 manifest.frame_glob + "'");

    FrameStack stack;
    for (std::size_t j = 0; j < files.size(); ++j) {
        Matrix img = read_image_gray(files[j]);
        if (!manifest.normalize) img *= 255.0;
        if (j == 0) {
            stack.width = static_cast<int>(img.cols());
            stack.height = static_cast<int>(img.rows());
            stack.data.resize(stack.pixels(), static_cast<Eigen::Index>(files.size()));
        } else if (img.cols() != stack.width || img.rows() != stack.height) {
            io_fail(files[j], "frame dimensions differ from the first frame");
        }
        stack.data.col(static_cast<Eigen::Index>(j)) = image_to_column(img);
    }
    return stack;
}

MaskStack load_mask_stack(const fs::path& dir, const std::string& glob, int max_frames) {
    const auto files = list_frames(dir, glob, max_frames);
    if (files.empty()) throw std::runtime_error(dir.string() + ": no mask images found");

    MaskStack mask;
    for (std::size_t j = 0; j < files.size(); ++j) {
        const Matrix img = read_image_gray(files[j]);
        if (j == 0)
            mask = MaskStack::zeros(static_cast<int>(img.cols()), static_cast<int>(img.rows()),
                                    static_cast<int>(files.size()));
        else if (img.cols() != mask.width || img.rows() != mask.height)
            io_fail(files[j], "mask dimensions differ from the first mask");
        for (int y = 0; y < mask.height; ++y)
            for (int x = 0; x < mask.width; ++x)
                mask.set(static_cast<int>(j), y, x, img(y, x) >= 128.0 / 255.0);
    }
    return mask;
}

nlohmann::json metrics_to_json(const Metrics& m) {
    return {{"tp", m.tp},           {"fp", m.fp},     {"fn", m.fn},   {"tn", m.tn},
            {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"fpr", m.fpr}};
}

RunReport save_outputs(const DecompositionResult& result, const MaskStack& masks, int width,
                       int height, const fs::path& out_dir, const ReportContext& context) {
    const int n = static_cast<int>(result.sparse.cols());
    RunReport report;

    std::error_code ec;
    for (const char* sub : {"background", "foreground", "masks"}) {
        fs::create_directories(out_dir / sub, ec);
        if (ec) throw std::runtime_error((out_dir / sub).string() + ": " + ec.message());
    }

    const Matrix low_rank = result.low_rank_matrix();
    char name[32];
    for (int j = 0; j < n; ++j) {
        std::snprintf(name, sizeof(name), "%04d.png", j);

        const fs::path bg = out_dir / "background" / name;
        write_image_gray(column_to_image(low_rank.col(j), width, height), bg);
        report.output_paths.push_back(bg.string());

        const fs::path fg = out_dir / "foreground" / name;
        write_image_gray(column_to_image(result.sparse.col(j).cwiseAbs(), width, height), fg);
        report.output_paths.push_back(fg.string());

        Matrix mask_img(height, width);
        for (int y = 0; y < height; ++y)
            for (int x = 0; x < width; ++x) mask_img(y, x) = masks.at(j, y, x) ? 1.0 : 0.0;
        const fs::path mk = out_dir / "masks" / name;
        write_image_gray(mask_img, mk);
        report.output_paths.push_back(mk.string());
    }

    {
        const fs::path tau_path = out_dir / "tau.csv";
        std::ofstream tau(tau_path);
        if (!tau) io_fail(tau_path, "cannot open for writing");
        const int rho = param_count(result.tau.model);
        tau << "frame";
        for (int p = 0; p < rho; ++p) tau << ",p" << p;
        tau << "\n";
        for (int j = 0; j < n; ++j) {
            tau << j;
            for (int p = 0; p < rho; ++p) tau << "," << csv_double(result.tau.per_frame[j][p]);
            tau << "\n";
        }
        if (!tau) io_fail(tau_path, "write failed");
        report.output_paths.push_back(tau_path.string());
    }

    {
        const fs::path trace_path = out_dir / "trace.csv";
        std::ofstream trace(trace_path);
        if (!trace) io_fail(trace_path, "cannot open for writing");
        trace << "iteration,objective\n";
        for (std::size_t t = 0; t < result.objective_trace.size(); ++t)
            trace << (t + 1) << "," << csv_double(result.objective_trace[t]) << "\n";
        if (!trace) io_fail(trace_path, "write failed");
        report.output_paths.push_back(trace_path.string());
    }

    report.document["config"] = context.config_echo;
    report.document["iterations"] = result.iterations;
    report.document["converged"] = result.converged;
    report.document["motion_warnings"] = result.motion_warnings;
    report.document["objective_trace"] = result.objective_trace;
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [stage, ms] : context.timings_ms) timings[stage] = ms;
    report.document["timings_ms"] = timings;
    if (context.metrics) report.document["metrics"] = metrics_to_json(*context.metrics);
    report.document["outputs"] = report.output_paths;

    const fs::path report_path = out_dir / "report.json";
    std::ofstream rep(report_path);
    if (!rep) io_fail(report_path, "cannot open for writing");
    rep << report.document.dump(2) << "\n";
    if (!rep) io_fail(report_path, "write failed");
    report.output_paths.push_back(report_path.string());

    return report;
}

}  // namespace lrsd
