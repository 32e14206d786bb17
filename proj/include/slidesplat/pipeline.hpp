// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/dataset.hpp"
#include "slidesplat/finetune.hpp"
#include "slidesplat/metrics.hpp"
#include "slidesplat/trainer.hpp"
#include "slidesplat/window_sampler.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace slidesplat {

/// Environment variable that relative dataset paths resolve against when set.
inline constexpr const char *kDataRootEnv = "SLIDESPLAT_DATA_ROOT";

enum class Preset { Paper, Desk };

Preset preset_from_string(const std::string &name);
const char *to_string(Preset p);

/// Run description. JSON schema (every key optional except "dataset"):
///
///   {
///     "dataset": "toy/dataset.json",     relative to $SLIDESPLAT_DATA_ROOT, else the config dir
///     "output": "runs/toy",              relative to the config dir; default "run_out"
///     "preset": "desk" | "paper",
///     "seed": 0, "workers": 1,
///     "window_threshold": 12.5 | "inf",  absolute tau on accumulated flow
///     "window_threshold_fraction": 0.5,  tau as a fraction of the total flow (overrides the above)
///     "overlap_poses": 16, "overlap_seed": 7,
///     "train": { TrainConfig fields by name, e.g. "total_iters", "mlp_lr", "mode", "modes" },
///     "finetune": { "iters", "consistency_fraction", "position_lr", "lr_decay", "ssim_weight" }
///   }
///
/// Unknown keys are rejected with ConfigError.
struct PipelineConfig {
    std::filesystem::path dataset;
    std::filesystem::path output;
    Preset preset = Preset::Desk;
    std::uint64_t seed = 0;
    int workers = 1;
    std::optional<double> threshold; // nullopt: a single window
    std::optional<double> threshold_fraction;
    int overlap_poses = 16;
    std::uint64_t overlap_seed = 7;
    TrainConfig train = TrainConfig::desk();
    FinetuneConfig finetune = FinetuneConfig::desk();

    /// `preset_override` replaces the file's preset before the per-key overrides apply.
    static PipelineConfig load(const std::filesystem::path &path,
                               const std::optional<Preset> &preset_override = std::nullopt);
    static PipelineConfig parse(const std::string &json_text, const std::filesystem::path &config_dir,
                                const std::optional<Preset> &preset_override = std::nullopt);
    void validate() const;
    /// Presets plus overrides, serialized; used to detect stale checkpoints.
    std::string train_fingerprint() const;
    std::string finetune_fingerprint() const;
};

/// Independent per-window stream derived from the run seed.
std::uint64_t window_seed(std::uint64_t run_seed, int window, std::uint64_t salt = 0);

/// Central frame of a window in global indices.
int central_frame(const FrameWindow &w);

/// tau resolved from the config against a flow summary (infinity when unset).
double resolve_threshold(const PipelineConfig &cfg, const FlowSummary &flow);

struct OverlapRecord {
    int previous = 0;
    int current = 0;
    int frame = 0;
    OverlapReport before;
    OverlapReport after;
};

struct RunOptions {
    bool stage1 = true;
    bool stage2 = true;
    bool export_bundle = true;
    std::optional<int> only_window; // debug: restrict the active stage to one window
};

struct PipelineResult {
    FlowSummary flow;
    WindowPlan plan;
    std::vector<WindowModel> stage1; // as reloaded from the checkpoints
    std::vector<WindowModel> finals; // window 0 is its stage-1 model
    int stage1_trained = 0;
    int stage1_reused = 0;
    int stage2_run = 0;
    int stage2_reused = 0;
    std::vector<OverlapRecord> overlap;
    std::filesystem::path bundle_dir;
};

/// flow summary -> window plan -> parallel stage 1 -> sequential stage 2 -> bundle export.
/// Checkpoints live under cfg.output; a re-run reuses every checkpoint whose inputs are
/// unchanged. Module errors are rethrown with window context.
PipelineResult run_pipeline(const PipelineConfig &cfg, const RunOptions &opts = {});

/// Window plan only (no training).
WindowPlan plan_only(const PipelineConfig &cfg, FlowSummary *flow_out = nullptr);

struct BundleWindow {
    FrameWindow window;
    std::string file;
    std::uint32_t crc32 = 0;
    bool finetuned = false;
    WindowModel model;
};

/// Parsed viewer bundle: manifest.json plus the window blobs it references.
struct SceneBundle {
    int frames = 0;
    int width = 0;
    int height = 0;
    Vec3<double> background = Vec3<double>::Zero();
    CameraRig rig;
    CameraRig held_out;
    WindowPlan plan;
    std::vector<BundleWindow> windows;

    /// The owning window of a global frame (later window at overlap frames).
    const WindowModel &model_for(int frame) const;
    GaussianSet frame_gaussians(int frame) const;
    Image render_frame(int frame, const Camera &cam) const;
};

/// Writes manifest.json, window_KK.ssm blobs, golden.json (deformed per-frame attributes) and
/// overlap_report.jsonl into `dir`.
void export_bundle(const std::filesystem::path &dir, const SequenceDataset &data, const PipelineResult &result);
/// Verifies magic, version and checksums; throws DataError or ParseError.
SceneBundle load_bundle(const std::filesystem::path &dir);

struct BundleMetrics {
    std::string camera_set; // "held_out" or "train"
    MetricsReport report;   // averaged over the cameras of that set
    std::vector<double> neighbor_l1_first_camera;
};

/// Renders every frame of the bundle at the dataset cameras and compares with the images.
std::vector<BundleMetrics> evaluate_bundle(const SceneBundle &bundle, const SequenceDataset &data);

} // namespace slidesplat
