// Image-sequence ingestion and artifact persistence: 8-bit PNG/PGM frames
// in, background/foreground/mask images plus CSV traces and a JSON report
// out.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrsd/decompose.hpp"
#include "lrsd/evaluate.hpp"
#include "lrsd/linalg.hpp"

namespace lrsd {

struct SequenceManifest {
    std::filesystem::path frames_dir;
    std::optional<std::filesystem::path> ground_truth_dir;
    std::string frame_glob = "*";
    int max_frames = 0;  // 0 = no limit
    bool normalize = true;
};

// Frame files matching the glob, lexicographically ordered. Note that
// f10.png sorts before f2.png; zero-padded names are recommended.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir,
                                               const std::string& glob, int max_frames = 0);

// Reads an 8-bit grayscale image in [0,1]; RGB input is converted to luma
// (0.299 R + 0.587 G + 0.114 B). PNG or binary PGM by content.
Matrix read_image_gray(const std::filesystem::path& path);

// Writes an 8-bit image, clamping values to [0,1]. PNG or PGM by extension.
void write_image_gray(const Matrix& image, const std::filesystem::path& path);

FrameStack load_frames(const SequenceManifest& manifest);

// Binary masks from image files: pixels >= 128 are foreground.
MaskStack load_mask_stack(const std::filesystem::path& dir, const std::string& glob,
                          int max_frames = 0);

struct ReportContext {
    nlohmann::json config_echo;
    std::vector<std::pair<std::string, double>> timings_ms;
    std::optional<Metrics> metrics;
};

struct RunReport {
    nlohmann::json document;
    std::vector<std::string> output_paths;
};

// Writes background/NNNN.png, foreground/NNNN.png, masks/NNNN.png, tau.csv,
// trace.csv and report.json under out_dir.
RunReport save_outputs(const DecompositionResult& result, const MaskStack& masks, int width,
                       int height, const std::filesystem::path& out_dir,
                       const ReportContext& context);

nlohmann::json metrics_to_json(const Metrics& metrics);

}  // namespace lrsd
