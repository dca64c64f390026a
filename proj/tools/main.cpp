// Command-line front end: decompose an image sequence into background,
// foreground and masks; evaluate masks against ground truth; sweep lambda
// for ROC curves; emit synthetic test sequences.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "lrsd/decompose.hpp"
#include "lrsd/evaluate.hpp"
#include "lrsd/image_io.hpp"
#include "lrsd/synthetic.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

lrsd::MotionModel parse_motion(const std::string& name) {
    if (name == "none") return lrsd::MotionModel::Identity;
    if (name == "translation") return lrsd::MotionModel::Translation;
    if (name == "similarity") return lrsd::MotionModel::Similarity;
    if (name == "affine") return lrsd::MotionModel::Affine;
    throw CLI::ValidationError("--motion", "unknown motion model: " + name);
}

// shared by `decompose` and `roc`
struct DecomposeOptions {
    std::string in_dir;
    std::string gt_dir;
    std::string out_dir;
    std::string algorithm = "tau";
    std::string lambda = "0.1";  // number or "pcp"
    std::string motion = "none";
    std::string mask_method = "support";
    std::string frame_glob = "*";
    double cardinality_fraction = 0.15;
    double tol = 1e-7;
    int rank = 1;
    int max_iter = 10;
    int pyramid_levels = 3;
    int leverage_p = 5;
    int freeze_motion_after = 0;
    int max_frames = 0;
    bool ghost_removal = false;
    std::uint64_t seed = 0;
};

void add_decompose_options(CLI::App* cmd, DecomposeOptions& opt, bool with_lambda_value) {
    cmd->add_option("--in", opt.in_dir, "directory of input frames (PNG/PGM)")
        ->required()
        ->envname("LRSD_IN");
    cmd->add_option("--gt", opt.gt_dir, "directory of ground-truth masks")->envname("LRSD_GT");
    cmd->add_option("--algorithm", opt.algorithm, "tau | block | svdfree")
        ->check(CLI::IsMember({"tau", "block", "svdfree"}))
        ->envname("LRSD_ALGORITHM");
    if (with_lambda_value)
        cmd->add_option("--lambda", opt.lambda, "soft threshold, a number or 'pcp'")
            ->envname("LRSD_LAMBDA");
    cmd->add_option("--cardinality-fraction", opt.cardinality_fraction,
                    "svdfree: kept fraction of all entries")
        ->check(CLI::Range(0.0, 1.0))
        ->envname("LRSD_CARDINALITY_FRACTION");
    cmd->add_option("--rank", opt.rank, "rank bound on the background")
        ->check(CLI::PositiveNumber)
        ->envname("LRSD_RANK");
    cmd->add_option("--tol", opt.tol, "relative residual stopping tolerance")
        ->envname("LRSD_TOL");
    cmd->add_option("--max-iter", opt.max_iter, "iteration cap")->envname("LRSD_MAX_ITER");
    cmd->add_option("--motion", opt.motion, "none | translation | similarity | affine")
        ->check(CLI::IsMember({"none", "translation", "similarity", "affine"}))
        ->envname("LRSD_MOTION");
    cmd->add_option("--pyramid-levels", opt.pyramid_levels, "alignment pyramid depth")
        ->envname("LRSD_PYRAMID_LEVELS");
    cmd->add_flag("--ghost-removal", opt.ghost_removal, "leverage-score initialization")
        ->envname("LRSD_GHOST_REMOVAL");
    cmd->add_option("--leverage-p", opt.leverage_p, "singular vectors used for leverage scores")
        ->envname("LRSD_LEVERAGE_P");
    cmd->add_option("--freeze-motion-after", opt.freeze_motion_after,
                    "stop re-estimating tau after this iteration (0 = never)")
        ->envname("LRSD_FREEZE_MOTION_AFTER");
    cmd->add_option("--frame-glob", opt.frame_glob, "filename pattern for frames")
        ->envname("LRSD_FRAME_GLOB");
    cmd->add_option("--max-frames", opt.max_frames, "use at most this many frames (0 = all)")
        ->envname("LRSD_MAX_FRAMES");
    cmd->add_option("--seed", opt.seed, "seed for the iterative eigensolver start")
        ->envname("LRSD_SEED");
    cmd->add_option("--mask-method", opt.mask_method, "support | three-sigma")
        ->check(CLI::IsMember({"support", "three-sigma"}))
        ->envname("LRSD_MASK_METHOD");
}

lrsd::DecompositionConfig build_config(const DecomposeOptions& opt, Eigen::Index m,
                                       Eigen::Index n) {
    lrsd::DecompositionConfig cfg;
    cfg.rank = opt.rank;
    cfg.tol = opt.tol;
    cfg.max_iter = opt.max_iter;
    cfg.motion = parse_motion(opt.motion);
    cfg.pyramid_levels = opt.pyramid_levels;
    cfg.ghost_removal = opt.ghost_removal;
    cfg.leverage_p = opt.leverage_p;
    cfg.freeze_motion_after = opt.freeze_motion_after;
    cfg.seed = opt.seed;

    double lambda = 0.0;
    if (opt.algorithm != "svdfree") {
        if (opt.lambda == "pcp") {
            lambda = lrsd::pcp_lambda(m, n);
        } else {
            try {
                std::size_t pos = 0;
                lambda = std::stod(opt.lambda, &pos);
                if (pos != opt.lambda.size()) throw std::invalid_argument("");
            } catch (const std::exception&) {
                throw CLI::ValidationError("--lambda", "expected a number or 'pcp'");
            }
        }
    }
    if (opt.algorithm == "tau") {
        cfg.sparsity = lrsd::SparsityRule::soft_entry(lambda);
    } else if (opt.algorithm == "block") {
        cfg.sparsity = lrsd::SparsityRule::column_block(lambda);
    } else {
        const auto total = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
        cfg.sparsity = lrsd::SparsityRule::cardinality_cap(
            static_cast<std::size_t>(opt.cardinality_fraction * total));
    }
    return cfg;
}

nlohmann::json config_echo(const DecomposeOptions& opt, const lrsd::DecompositionConfig& cfg) {
    nlohmann::json j;
    j["algorithm"] = opt.algorithm;
    j["rank"] = cfg.rank;
    switch (cfg.sparsity.kind) {
        case lrsd::SparsityRule::Kind::SoftEntry:
            j["lambda"] = cfg.sparsity.lambda;
            break;
        case lrsd::SparsityRule::Kind::ColumnBlock:
            j["lambda"] = cfg.sparsity.lambda;
            break;
        case lrsd::SparsityRule::Kind::Cardinality:
            j["cardinality"] = cfg.sparsity.cardinality;
            j["cardinality_fraction"] = opt.cardinality_fraction;
            break;
    }
    j["tol"] = cfg.tol;
    j["max_iter"] = cfg.max_iter;
    j["motion"] = opt.motion;
    j["pyramid_levels"] = cfg.pyramid_levels;
    j["ghost_removal"] = cfg.ghost_removal;
    j["leverage_p"] = cfg.leverage_p;
    j["freeze_motion_after"] = cfg.freeze_motion_after;
    j["seed"] = cfg.seed;
    j["mask_method"] = opt.mask_method;
    j["in"] = opt.in_dir;
    if (!opt.gt_dir.empty()) j["gt"] = opt.gt_dir;
    return j;
}

void print_metrics(const lrsd::Metrics& m) {
    std::printf("tp=%llu fp=%llu fn=%llu tn=%llu\n", (unsigned long long)m.tp,
                (unsigned long long)m.fp, (unsigned long long)m.fn, (unsigned long long)m.tn);
    std::printf("precision=%.6f recall=%.6f f1=%.6f fpr=%.6f\n", m.precision, m.recall, m.f1,
                m.fpr);
}

int run_decompose(const DecomposeOptions& opt) {
    const auto t_start = Clock::now();
    lrsd::SequenceManifest manifest;
    manifest.frames_dir = opt.in_dir;
    manifest.frame_glob = opt.frame_glob;
    manifest.max_frames = opt.max_frames;
    const lrsd::FrameStack stack = lrsd::load_frames(manifest);
    const double load_ms = ms_since(t_start);

    const lrsd::DecompositionConfig cfg =
        build_config(opt, stack.data.rows(), stack.data.cols());

    const auto t_dec = Clock::now();
    const lrsd::DecompositionResult result = lrsd::decompose(stack, cfg);
    const double dec_ms = ms_since(t_dec);

    const auto t_mask = Clock::now();
    lrsd::MaskStack masks;
    if (opt.mask_method == "three-sigma") {
        const lrsd::Matrix warped = lrsd::apply_motion(stack, result.tau);
        masks = lrsd::mask_from_sparse(result.sparse, warped, result.low_rank_matrix(),
                                       stack.width, stack.height);
    } else {
        masks = lrsd::mask_from_sparse(result.sparse, stack.width, stack.height);
    }
    const double mask_ms = ms_since(t_mask);

    lrsd::ReportContext ctx;
    ctx.config_echo = config_echo(opt, cfg);
    if (!opt.gt_dir.empty()) {
        const lrsd::MaskStack truth =
            lrsd::load_mask_stack(opt.gt_dir, opt.frame_glob, opt.max_frames);
        ctx.metrics = lrsd::compute_metrics(masks, truth);
    }

    ctx.timings_ms = {{"load", load_ms},
                      {"decompose", dec_ms},
                      {"mask", mask_ms},
                      {"per_iteration", dec_ms / std::max(1, result.iterations)}};
    if (!opt.out_dir.empty())
        lrsd::save_outputs(result, masks, stack.width, stack.height, opt.out_dir, ctx);

    std::printf("frames=%d size=%dx%d iterations=%d converged=%s objective=%.6g\n",
                stack.frames(), stack.width, stack.height, result.iterations,
                result.converged ? "yes" : "no",
                result.objective_trace.empty() ? 0.0 : result.objective_trace.back());
    if (result.motion_warnings > 0)
        std::printf("motion warnings: %d\n", result.motion_warnings);
    if (ctx.metrics) print_metrics(*ctx.metrics);
    if (!opt.out_dir.empty()) std::printf("outputs written to %s\n", opt.out_dir.c_str());
    return 0;
}

int run_evaluate(const std::string& pred_dir, const std::string& gt_dir, const std::string& glob,
                 const std::string& json_path) {
    const lrsd::MaskStack pred = lrsd::load_mask_stack(pred_dir, glob);
    const lrsd::MaskStack truth = lrsd::load_mask_stack(gt_dir, glob);
    const lrsd::Metrics m = lrsd::compute_metrics(pred, truth);
    print_metrics(m);
    if (!json_path.empty()) {
        std::ofstream out(json_path);
        if (!out) throw std::runtime_error(json_path + ": cannot open for writing");
        out << lrsd::metrics_to_json(m).dump(2) << "\n";
    }
    return 0;
}

int run_roc(const DecomposeOptions& opt, const std::string& grid_arg,
            const std::string& csv_path) {
    if (opt.gt_dir.empty()) throw CLI::ValidationError("--gt", "roc requires ground truth");
    if (opt.algorithm == "svdfree")
        throw CLI::ValidationError("--algorithm", "roc sweeps lambda; use tau or block");

    std::vector<double> grid;
    std::size_t pos = 0;
    while (pos < grid_arg.size()) {
        std::size_t used = 0;
        grid.push_back(std::stod(grid_arg.substr(pos), &used));
        pos += used;
        if (pos < grid_arg.size() && grid_arg[pos] == ',') ++pos;
    }

    lrsd::SequenceManifest manifest;
    manifest.frames_dir = opt.in_dir;
    manifest.frame_glob = opt.frame_glob;
    manifest.max_frames = opt.max_frames;
    const lrsd::FrameStack stack = lrsd::load_frames(manifest);
    const lrsd::MaskStack truth =
        lrsd::load_mask_stack(opt.gt_dir, opt.frame_glob, opt.max_frames);
    const lrsd::DecompositionConfig cfg =
        build_config(opt, stack.data.rows(), stack.data.cols());

    const auto points = lrsd::roc_sweep(stack, truth, cfg, grid);
    std::ostringstream csv;
    csv << "lambda,ok,tp,fp,fn,tn,precision,recall,f1,fpr,error\n";
    for (const auto& p : points) {
        csv << p.lambda << "," << (p.ok ? 1 : 0) << "," << p.metrics.tp << "," << p.metrics.fp
            << "," << p.metrics.fn << "," << p.metrics.tn << "," << p.metrics.precision << ","
            << p.metrics.recall << "," << p.metrics.f1 << "," << p.metrics.fpr << ","
            << (p.ok ? "" : p.error) << "\n";
    }
    std::fputs(csv.str().c_str(), stdout);
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error(csv_path + ": cannot open for writing");
        out << csv.str();
    }
    return 0;
}

struct SynthOptions {
    std::string kind = "spikes";
    std::string out_dir;
    int width = 160, height = 120, frames = 50;
    std::uint64_t seed = 0;
    double spike_frac = 0.05, spike_mag = 0.5, noise = 0.02;
    int bg_modes = 1;
    int block_size = 14, object_size = 16, bar_width = 6;
    double speed = 1.05, contrast = 0.35, max_shift = 2.5, jitter = 0.0;
};

int run_synth(const SynthOptions& opt) {
    lrsd::SyntheticSequence seq;
    if (opt.kind == "spikes") {
        seq = lrsd::synth_spikes(opt.width, opt.height, opt.frames, opt.spike_frac, opt.spike_mag,
                                 opt.noise, opt.seed, opt.bg_modes);
    } else if (opt.kind == "block") {
        seq = lrsd::synth_moving_block(opt.width, opt.height, opt.frames, opt.block_size,
                                       opt.speed, opt.contrast, opt.noise, opt.seed, opt.jitter);
    } else if (opt.kind == "bar") {
        seq = lrsd::synth_vertical_bar(opt.width, opt.height, opt.frames, opt.bar_width,
                                       opt.speed, opt.contrast, opt.noise, opt.seed);
    } else {
        seq = lrsd::synth_shifting_camera(opt.width, opt.height, opt.frames, opt.max_shift,
                                          opt.object_size, opt.contrast, opt.noise, opt.seed);
    }

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(opt.out_dir) / "frames", ec);
    fs::create_directories(fs::path(opt.out_dir) / "gt", ec);

    char name[32];
    for (int j = 0; j < seq.frames.frames(); ++j) {
        std::snprintf(name, sizeof(name), "%04d.png", j);
        lrsd::write_image_gray(
            lrsd::column_to_image(seq.frames.data.col(j), seq.frames.width, seq.frames.height),
            fs::path(opt.out_dir) / "frames" / name);
        lrsd::Matrix mask(seq.truth.height, seq.truth.width);
        for (int y = 0; y < seq.truth.height; ++y)
            for (int x = 0; x < seq.truth.width; ++x)
                mask(y, x) = seq.truth.at(j, y, x) ? 1.0 : 0.0;
        lrsd::write_image_gray(mask, fs::path(opt.out_dir) / "gt" / name);
    }
    std::printf("wrote %d frames to %s\n", seq.frames.frames(), opt.out_dir.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-rank + sparse background/foreground separation"};
    app.require_subcommand(1);

    DecomposeOptions dopt;
    CLI::App* dec = app.add_subcommand("decompose", "decompose an image sequence");
    add_decompose_options(dec, dopt, true);
    dec->add_option("--out", dopt.out_dir, "output directory")->envname("LRSD_OUT");
    dec->footer(
        "Outputs under --out: background/NNNN.png, foreground/NNNN.png, masks/NNNN.png;\n"
        "tau.csv columns: frame,p0,...,p{rho-1} (one row per frame);\n"
        "trace.csv columns: iteration,objective;\n"
        "report.json: config echo, objective trace, per-stage timings in ms,\n"
        "metrics when --gt is given, output paths.");

    std::string ev_pred, ev_gt, ev_glob = "*", ev_json;
    CLI::App* ev = app.add_subcommand("evaluate", "compare mask directories");
    ev->add_option("--pred", ev_pred, "predicted masks directory")->required();
    ev->add_option("--gt", ev_gt, "ground-truth masks directory")->required();
    ev->add_option("--frame-glob", ev_glob, "filename pattern");
    ev->add_option("--json", ev_json, "also write metrics to this JSON file");

    DecomposeOptions ropt;
    std::string roc_grid, roc_csv;
    CLI::App* roc = app.add_subcommand("roc", "metrics across a lambda grid");
    add_decompose_options(roc, ropt, false);
    roc->add_option("--lambda-grid", roc_grid, "comma-separated ascending lambdas")->required();
    roc->add_option("--out", roc_csv, "also write the CSV here");
    roc->footer("CSV columns: lambda,ok,tp,fp,fn,tn,precision,recall,f1,fpr,error");

    SynthOptions sopt;
    CLI::App* synth = app.add_subcommand("synth", "emit a synthetic sequence + ground truth");
    synth->add_option("--kind", sopt.kind, "spikes | block | bar | shift")
        ->check(CLI::IsMember({"spikes", "block", "bar", "shift"}));
    synth->add_option("--out", sopt.out_dir, "output directory")->required();
    synth->add_option("--width", sopt.width);
    synth->add_option("--height", sopt.height);
    synth->add_option("--frames", sopt.frames);
    synth->add_option("--seed", sopt.seed);
    synth->add_option("--spike-frac", sopt.spike_frac);
    synth->add_option("--spike-mag", sopt.spike_mag);
    synth->add_option("--noise", sopt.noise);
    synth->add_option("--bg-modes", sopt.bg_modes);
    synth->add_option("--block-size", sopt.block_size);
    synth->add_option("--object-size", sopt.object_size);
    synth->add_option("--bar-width", sopt.bar_width);
    synth->add_option("--speed", sopt.speed);
    synth->add_option("--contrast", sopt.contrast);
    synth->add_option("--max-shift", sopt.max_shift);
    synth->add_option("--jitter", sopt.jitter);

    try {
        app.parse(argc, argv);
        if (dec->parsed()) return run_decompose(dopt);
        if (ev->parsed()) return run_evaluate(ev_pred, ev_gt, ev_glob, ev_json);
        if (roc->parsed()) return run_roc(ropt, roc_grid, roc_csv);
        if (synth->parsed()) return run_synth(sopt);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // 1 for usage errors, 0 for --help
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
