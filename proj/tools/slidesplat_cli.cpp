// SPDX-License-Identifier: Apache-2.0
// Command-line front end for the sliding-window pipeline.

#include "slidesplat/dataset.hpp"
#include "slidesplat/error.hpp"
#include "slidesplat/model_io.hpp"
#include "slidesplat/pipeline.hpp"
#include "slidesplat/se3.hpp"
#include "slidesplat/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace slidesplat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kNumeric = 4 };

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::OverlapMismatch:
        return kConfig;
    case ErrorKind::NumericFailure:
    case ErrorKind::NearPiRotation:
        return kNumeric;
    default:
        return kData;
    }
}

struct CommonFlags {
    std::string config;
    std::string preset;
    int workers = 0;
    std::uint64_t seed = 0;
    int window = -1;
    bool seed_set = false;
};

void add_common(CLI::App *cmd, CommonFlags &f, bool with_window) {
    cmd->add_option("--config", f.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--preset", f.preset, "Hyperparameter preset")->check(CLI::IsMember({"paper", "desk"}));
    cmd->add_option("--workers", f.workers, "Stage-1 worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "Run seed")->each([&f](const std::string &) { f.seed_set = true; });
    if (with_window)
        cmd->add_option("--window", f.window, "Restrict to one window (debug)")->check(CLI::NonNegativeNumber);
}

PipelineConfig load_config(const CommonFlags &f) {
    std::optional<Preset> preset;
    if (!f.preset.empty()) preset = preset_from_string(f.preset);
    PipelineConfig cfg = PipelineConfig::load(f.config, preset);
    if (f.workers > 0) cfg.workers = f.workers;
    if (f.seed_set) cfg.seed = f.seed;
    cfg.validate();
    return cfg;
}

std::optional<int> window_opt(const CommonFlags &f) {
    return f.window >= 0 ? std::optional<int>(f.window) : std::nullopt;
}

json plan_json(const WindowPlan &plan, const FlowSummary &flow) {
    json windows = json::array();
    for (const auto &w : plan.windows)
        windows.push_back({{"start", w.start}, {"end", w.end}, {"flow", window_flow(flow, w)}});
    return {{"threshold", std::isfinite(plan.threshold) ? json(plan.threshold) : json("inf")},
            {"total_flow", flow.total()},
            {"windows", windows}};
}

void print_run(const PipelineResult &r) {
    std::cout << "windows: " << r.plan.windows.size() << "\n"
              << "stage 1: trained " << r.stage1_trained << ", reused " << r.stage1_reused << "\n"
              << "stage 2: ran " << r.stage2_run << ", reused " << r.stage2_reused << "\n";
    for (const auto &o : r.overlap) {
        std::printf("overlap frame %d (windows %d -> %d): L1 %.6f -> %.6f\n", o.frame, o.previous, o.current,
                    o.before.mean, o.after.mean);
    }
    if (!r.bundle_dir.empty()) std::cout << "bundle: " << r.bundle_dir.string() << "\n";
}

SceneBundle bundle_from(const std::string &bundle_dir, const CommonFlags &f) {
    if (!bundle_dir.empty()) return load_bundle(bundle_dir);
    require(!f.config.empty(), ErrorKind::ConfigError, "pass --bundle or --config");
    return load_bundle(load_config(f).output / "bundle");
}

Camera pick_camera(const SceneBundle &b, const std::string &id, const std::string &beta_text) {
    if (!beta_text.empty()) {
        std::vector<double> beta;
        std::stringstream ss(beta_text);
        for (std::string tok; std::getline(ss, tok, ',');) beta.push_back(std::stod(tok));
        require(beta.size() == b.rig.size(), ErrorKind::ConfigError,
                "--beta needs one weight per training camera (" + std::to_string(b.rig.size()) + ")");
        double sum = 0.0;
        for (double v : beta) {
            require(v >= 0.0, ErrorKind::ConfigError, "--beta weights must be non-negative");
            sum += v;
        }
        require(sum > 0.0, ErrorKind::ConfigError, "--beta weights must not all be zero");
        Eigen::VectorXd w(Eigen::Index(beta.size()));
        for (std::size_t i = 0; i < beta.size(); ++i) w[Eigen::Index(i)] = beta[i] / sum;
        return PoseSampler(b.rig).camera_for(w);
    }
    for (const CameraRig *rig : {&b.rig, &b.held_out})
        for (std::size_t v = 0; v < rig->size(); ++v)
            if (rig->ids[v] == id) return rig->cameras[v];
    throw Error(ErrorKind::ConfigError, "unknown camera id '" + id + "'");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Sliding-window dynamic Gaussian splatting"};
    app.require_subcommand(1);
    CommonFlags flags;

    auto *plan = app.add_subcommand("plan", "Summarize flow and print the window plan");
    add_common(plan, flags, false);

    auto *train = app.add_subcommand("train", "Stage 1: train every window independently");
    add_common(train, flags, true);

    auto *finetune = app.add_subcommand("finetune", "Stage 2: sequential consistency fine-tuning");
    add_common(finetune, flags, true);

    auto *run = app.add_subcommand("run", "Both stages plus bundle export, resuming from checkpoints");
    add_common(run, flags, false);

    auto *exp = app.add_subcommand("export", "Write the viewer bundle from stage-1 checkpoints, fine-tuning where needed");
    add_common(exp, flags, false);

    std::string bundle_dir, camera_id, beta, out_png;
    int frame = 0;
    auto *rend = app.add_subcommand("render", "Render one frame of a bundle to PNG");
    rend->add_option("--config", flags.config, "Pipeline config (its output holds the bundle)");
    rend->add_option("--bundle", bundle_dir, "Bundle directory");
    rend->add_option("--frame", frame, "Global frame index")->required();
    rend->add_option("--camera", camera_id, "Training or held-out camera id");
    rend->add_option("--beta", beta, "Comma-separated blending weights for a novel pose");
    rend->add_option("--out", out_png, "Output PNG")->required();

    auto *metrics = app.add_subcommand("metrics", "PSNR/SSIM per frame and neighbouring-frame L1");
    metrics->add_option("--config", flags.config, "Pipeline config")->required()->check(CLI::ExistingFile);
    metrics->add_option("--bundle", bundle_dir, "Bundle directory (default: <output>/bundle)");

    SyntheticSpec spec;
    std::string synth_out, motion = "translation";
    auto *synth = app.add_subcommand("synth", "Generate a synthetic multi-view dataset");
    synth->add_option("--out", synth_out, "Dataset directory")->required();
    synth->add_option("--seed", spec.seed, "Scene seed");
    synth->add_option("--motion", motion, "none, translation or burst")
        ->check(CLI::IsMember({"none", "translation", "burst"}));
    synth->add_option("--frames", spec.frames, "Frame count");
    synth->add_option("--views", spec.views, "Training camera count");
    synth->add_option("--width", spec.width, "Image width");
    synth->add_option("--height", spec.height, "Image height");
    synth->add_option("--gaussians", spec.gaussians, "Ground-truth Gaussian count");
    synth->add_option("--moving", spec.moving, "Moving Gaussian count");
    synth->add_option("--speed", spec.speed, "World units per frame");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*synth) {
            spec.motion = motion_type_from_string(motion);
            spec.validate();
            const SyntheticScene scene = generate_synthetic_scene(spec);
            write_synthetic_dataset(scene, synth_out);
            std::cout << "wrote " << (fs::path(synth_out) / "dataset.json").string() << "\n";
        } else if (*plan) {
            FlowSummary flow;
            const WindowPlan p = plan_only(load_config(flags), &flow);
            std::cout << plan_json(p, flow).dump(2) << "\n";
        } else if (*train) {
            print_run(run_pipeline(load_config(flags), {true, false, false, window_opt(flags)}));
        } else if (*finetune) {
            print_run(run_pipeline(load_config(flags), {false, true, false, window_opt(flags)}));
        } else if (*run) {
            print_run(run_pipeline(load_config(flags), {}));
        } else if (*exp) {
            print_run(run_pipeline(load_config(flags), {false, true, true, std::nullopt}));
        } else if (*rend) {
            require(camera_id.empty() != beta.empty(), ErrorKind::ConfigError, "pass exactly one of --camera, --beta");
            const SceneBundle b = bundle_from(bundle_dir, flags);
            require(frame >= 0 && frame < b.frames, ErrorKind::ConfigError, "--frame is outside the sequence");
            write_png(out_png, b.render_frame(frame, pick_camera(b, camera_id, beta)));
            std::cout << "wrote " << out_png << "\n";
        } else if (*metrics) {
            const PipelineConfig cfg = load_config(flags);
            const SceneBundle b = load_bundle(bundle_dir.empty() ? cfg.output / "bundle" : fs::path(bundle_dir));
            const SequenceDataset data = SequenceDataset::open(cfg.dataset);
            json out = json::array();
            for (const BundleMetrics &m : evaluate_bundle(b, data)) {
                json frames = json::array();
                for (const auto &f : m.report.frames) frames.push_back({{"psnr", f.psnr}, {"ssim", f.ssim}});
                out.push_back({{"cameras", m.camera_set},
                               {"mean_psnr", m.report.mean_psnr},
                               {"mean_ssim", m.report.mean_ssim},
                               {"frames", frames},
                               {"neighbor_l1", m.report.neighbor_l1},
                               {"neighbor_l1_first_camera", m.neighbor_l1_first_camera}});
            }
            fs::create_directories(cfg.output);
            std::ofstream(cfg.output / "metrics.json") << out.dump(2) << "\n";
            std::cout << out.dump(2) << "\n";
        }
    } catch (const Error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kOk;
}
