// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/pipeline.hpp"

#include "slidesplat/error.hpp"
#include "slidesplat/loss.hpp"
#include "slidesplat/model_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

namespace slidesplat {
namespace fs = std::filesystem;
using nlohmann::json;

Preset preset_from_string(const std::string &name) {
    if (name == "paper") return Preset::Paper;
    if (name == "desk") return Preset::Desk;
    throw Error(ErrorKind::ConfigError, "unknown preset '" + name + "' (expected paper or desk)");
}

const char *to_string(Preset p) { return p == Preset::Paper ? "paper" : "desk"; }

namespace {

// Reads `key` into `out` when present and erases it, so leftovers can be reported.
template <typename T> void take(json &j, const char *key, T &out) {
    auto it = j.find(key);
    if (it == j.end()) return;
    out = it->get<T>();
    j.erase(it);
}

void reject_leftovers(const json &j, const std::string &where) {
    if (j.empty()) return;
    throw Error(ErrorKind::ConfigError, "unknown key '" + j.begin().key() + "' in " + where);
}

void apply_train(TrainConfig &c, json j) {
    take(j, "total_iters", c.total_iters);
    take(j, "warmup_iters", c.warmup_iters);
    take(j, "densify_from", c.densify_from);
    take(j, "densify_until", c.densify_until);
    take(j, "densify_interval", c.densify_interval);
    take(j, "opacity_reset_interval", c.opacity_reset_interval);
    take(j, "position_lr_init", c.lr.position_init);
    take(j, "position_lr_final", c.lr.position_final);
    take(j, "rotation_lr", c.lr.rotation);
    take(j, "scale_lr", c.lr.scale);
    take(j, "opacity_lr", c.lr.opacity);
    take(j, "sh_dc_lr", c.lr.sh_dc);
    take(j, "sh_rest_lr", c.lr.sh_rest);
    take(j, "mlp_lr", c.mlp_lr);
    take(j, "alpha_lr", c.alpha_lr);
    take(j, "mlp_lr_decay_factor", c.mlp_lr_decay_factor);
    take(j, "decay_horizon", c.decay_horizon);
    take(j, "ssim_weight", c.ssim_weight);
    take(j, "grad_threshold", c.density.grad_threshold);
    take(j, "min_opacity", c.density.min_opacity);
    take(j, "percent_dense", c.density.percent_dense);
    take(j, "alpha_pixel_threshold", c.alpha_init.pixel_threshold);
    take(j, "alpha_neighborhood", c.alpha_init.neighborhood);
    take(j, "modes", c.mlp.modes);
    take(j, "frequencies", c.mlp.frequencies);
    take(j, "mlp_depth", c.mlp.depth);
    take(j, "mlp_width", c.mlp.width);
    take(j, "skip_after", c.mlp.skip_after);
    take(j, "sh_degree", c.sh_degree);
    take(j, "initial_opacity", c.initial_opacity);
    take(j, "render_threads", c.render_threads);
    take(j, "log_interval", c.log_interval);
    std::string mode;
    take(j, "mode", mode);
    if (!mode.empty()) c.mode = deformation_mode_from_string(mode);
    reject_leftovers(j, "\"train\"");
}

void apply_finetune(FinetuneConfig &c, json j) {
    take(j, "iters", c.iters);
    take(j, "consistency_fraction", c.consistency_fraction);
    take(j, "position_lr", c.position_lr);
    take(j, "rotation_lr", c.lr.rotation);
    take(j, "scale_lr", c.lr.scale);
    take(j, "opacity_lr", c.lr.opacity);
    take(j, "sh_dc_lr", c.lr.sh_dc);
    take(j, "sh_rest_lr", c.lr.sh_rest);
    take(j, "lr_decay", c.lr_decay);
    take(j, "ssim_weight", c.ssim_weight);
    take(j, "render_threads", c.render_threads);
    reject_leftovers(j, "\"finetune\"");
}

json train_json(const TrainConfig &c) {
    return {{"total_iters", c.total_iters},
            {"warmup_iters", c.warmup_iters},
            {"densify_from", c.densify_from},
            {"densify_until", c.densify_until},
            {"densify_interval", c.densify_interval},
            {"opacity_reset_interval", c.opacity_reset_interval},
            {"position_lr_init", c.lr.position_init},
            {"position_lr_final", c.lr.position_final},
            {"rotation_lr", c.lr.rotation},
            {"scale_lr", c.lr.scale},
            {"opacity_lr", c.lr.opacity},
            {"sh_dc_lr", c.lr.sh_dc},
            {"sh_rest_lr", c.lr.sh_rest},
            {"mlp_lr", c.mlp_lr},
            {"alpha_lr", c.alpha_lr},
            {"mlp_lr_decay_factor", c.mlp_lr_decay_factor},
            {"decay_horizon", c.decay_horizon},
            {"ssim_weight", c.ssim_weight},
            {"grad_threshold", c.density.grad_threshold},
            {"min_opacity", c.density.min_opacity},
            {"percent_dense", c.density.percent_dense},
            {"alpha_pixel_threshold", c.alpha_init.pixel_threshold},
            {"alpha_neighborhood", c.alpha_init.neighborhood},
            {"modes", c.mlp.modes},
            {"frequencies", c.mlp.frequencies},
            {"mlp_depth", c.mlp.depth},
            {"mlp_width", c.mlp.width},
            {"skip_after", c.mlp.skip_after},
            {"sh_degree", c.sh_degree},
            {"initial_opacity", c.initial_opacity},
            {"mode", to_string(c.mode)},
            {"background", {c.background.x(), c.background.y(), c.background.z()}}};
}

json finetune_json(const FinetuneConfig &c) {
    return {{"iters", c.iters},
            {"consistency_fraction", c.consistency_fraction},
            {"position_lr", c.position_lr},
            {"rotation_lr", c.lr.rotation},
            {"scale_lr", c.lr.scale},
            {"opacity_lr", c.lr.opacity},
            {"sh_dc_lr", c.lr.sh_dc},
            {"sh_rest_lr", c.lr.sh_rest},
            {"lr_decay", c.lr_decay},
            {"ssim_weight", c.ssim_weight},
            {"background", {c.background.x(), c.background.y(), c.background.z()}}};
}

fs::path resolve_dataset(const fs::path &p, const fs::path &config_dir) {
    if (p.is_absolute()) return p;
    if (const char *root = std::getenv(kDataRootEnv); root && *root) return fs::path(root) / p;
    return config_dir / p;
}

std::string window_stem(int k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "window_%02d", k);
    return buf;
}

json read_json_file(const fs::path &p) {
    std::ifstream is(p);
    if (!is) throw Error(ErrorKind::DataError, "cannot open " + p.string());
    try {
        return json::parse(is);
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, p.string() + ": " + e.what());
    }
}

void write_json_file(const fs::path &p, const json &j, int indent = 2) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    const std::string text = j.dump(indent) + "\n";
    write_file_bytes(p, std::vector<std::uint8_t>(text.begin(), text.end()));
}

Error with_context(const Error &e, const std::string &context) {
    return Error(e.kind(), context + ": " + e.message());
}

std::string window_label(int k, const FrameWindow &w) {
    return "window " + std::to_string(k) + " [" + std::to_string(w.start) + ", " + std::to_string(w.end) + "]";
}

json overlap_json(const OverlapReport &r) { return {{"mean", r.mean}, {"per_pose", r.per_pose_l1}}; }

OverlapReport overlap_from_json(const json &j) {
    OverlapReport r;
    r.mean = j.at("mean").get<double>();
    r.per_pose_l1 = j.at("per_pose").get<std::vector<double>>();
    return r;
}

json flat(const Eigen::MatrixXd &m) {
    std::vector<double> v;
    v.reserve(std::size_t(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
    return v;
}

// Checkpoint metadata lives next to each blob; a checkpoint is reused only when its recorded
// inputs match the current run exactly and the blob still passes its checksum.
struct Checkpoint {
    fs::path blob;
    fs::path meta;
};

Checkpoint checkpoint_paths(const fs::path &dir, int k) {
    return {dir / (window_stem(k) + ".ssm"), dir / (window_stem(k) + ".json")};
}

std::optional<WindowModel> try_reuse(const Checkpoint &cp, const json &expected_inputs, json *meta_out) {
    if (!fs::exists(cp.blob) || !fs::exists(cp.meta)) return std::nullopt;
    json meta;
    try {
        meta = read_json_file(cp.meta);
    } catch (const Error &) {
        return std::nullopt;
    }
    if (!meta.contains("inputs") || meta["inputs"] != expected_inputs || !meta.contains("crc32"))
        return std::nullopt;
    const auto crc = meta["crc32"].get<std::uint32_t>();
    try {
        WindowModel m = load_model(cp.blob, &crc);
        if (meta_out) *meta_out = meta;
        return m;
    } catch (const Error &) {
        return std::nullopt;
    }
}

} // namespace

PipelineConfig PipelineConfig::parse(const std::string &text, const fs::path &config_dir,
                                     const std::optional<Preset> &preset_override) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ConfigError, std::string("config is not valid JSON: ") + e.what());
    }
    require(j.is_object(), ErrorKind::ConfigError, "config must be a JSON object");
    PipelineConfig c;
    try {
        std::string preset = "desk";
        take(j, "preset", preset);
        c.preset = preset_override ? *preset_override : preset_from_string(preset);
        c.train = c.preset == Preset::Paper ? TrainConfig::paper() : TrainConfig::desk();
        c.finetune = c.preset == Preset::Paper ? FinetuneConfig::paper() : FinetuneConfig::desk();
        std::string dataset, output;
        take(j, "dataset", dataset);
        require(!dataset.empty(), ErrorKind::ConfigError, "config needs a \"dataset\" path");
        c.dataset = resolve_dataset(dataset, config_dir);
        take(j, "output", output);
        c.output = output.empty() ? config_dir / "run_out" : fs::path(output).is_absolute() ? fs::path(output)
                                                                                             : config_dir / output;
        take(j, "seed", c.seed);
        take(j, "workers", c.workers);
        if (auto it = j.find("window_threshold"); it != j.end()) {
            if (it->is_string()) {
                require(it->get<std::string>() == "inf", ErrorKind::ConfigError,
                        "window_threshold must be a number or \"inf\"");
                c.threshold.reset();
            } else {
                c.threshold = it->get<double>();
            }
            j.erase(it);
        }
        if (auto it = j.find("window_threshold_fraction"); it != j.end()) {
            c.threshold_fraction = it->get<double>();
            j.erase(it);
        }
        take(j, "overlap_poses", c.overlap_poses);
        take(j, "overlap_seed", c.overlap_seed);
        if (auto it = j.find("train"); it != j.end()) {
            apply_train(c.train, *it);
            j.erase(it);
        }
        if (auto it = j.find("finetune"); it != j.end()) {
            apply_finetune(c.finetune, *it);
            j.erase(it);
        }
        reject_leftovers(j, "config");
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ConfigError, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

PipelineConfig PipelineConfig::load(const fs::path &path, const std::optional<Preset> &preset_override) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::ConfigError, "cannot open config " + path.string());
    std::stringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.parent_path(), preset_override);
}

void PipelineConfig::validate() const {
    require(workers >= 1, ErrorKind::ConfigError, "workers must be >= 1");
    require(overlap_poses >= 1, ErrorKind::ConfigError, "overlap_poses must be >= 1");
    if (threshold) require(*threshold > 0.0, ErrorKind::ConfigError, "window_threshold must be positive");
    if (threshold_fraction)
        require(*threshold_fraction > 0.0, ErrorKind::ConfigError, "window_threshold_fraction must be positive");
    train.validate();
    finetune.validate();
}

std::string PipelineConfig::train_fingerprint() const { return train_json(train).dump(); }
std::string PipelineConfig::finetune_fingerprint() const { return finetune_json(finetune).dump(); }

std::uint64_t window_seed(std::uint64_t run_seed, int window, std::uint64_t salt) {
    // splitmix64 finalizer over a mix of the inputs.
    std::uint64_t z = run_seed + 0x9E3779B97F4A7C15ull * (std::uint64_t(window) + 1) + salt * 0xD1B54A32D192ED03ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

int central_frame(const FrameWindow &w) { return w.start + w.length() / 2; }

double resolve_threshold(const PipelineConfig &cfg, const FlowSummary &flow) {
    if (cfg.threshold_fraction) {
        const double t = *cfg.threshold_fraction * flow.total();
        // A motionless sequence has no meaningful fraction; treat it as one window.
        return t > 0.0 ? t : std::numeric_limits<double>::infinity();
    }
    return cfg.threshold ? *cfg.threshold : std::numeric_limits<double>::infinity();
}

namespace {

// `seq` is only read when the dataset has no flow directory.
WindowPlan plan_for(const PipelineConfig &cfg, const SequenceDataset &data, const MultiViewSequence &seq,
                    FlowSummary *flow_out) {
    if (data.frames < 2) {
        if (flow_out) *flow_out = {};
        WindowPlan p;
        p.windows.push_back({0, 0});
        return p;
    }
    FlowSummary flow = summarize_flow(data.load_flows(seq));
    if (flow_out) *flow_out = flow;
    return plan_windows(flow, resolve_threshold(cfg, flow));
}

} // namespace

WindowPlan plan_only(const PipelineConfig &cfg, FlowSummary *flow_out) {
    const SequenceDataset data = SequenceDataset::open(cfg.dataset);
    const MultiViewSequence seq = data.flow_dir ? MultiViewSequence{data.rig, {}} : data.load_training();
    return plan_for(cfg, data, seq, flow_out);
}

PipelineResult run_pipeline(const PipelineConfig &cfg, const RunOptions &opts) {
    cfg.validate();
    const SequenceDataset data = SequenceDataset::open(cfg.dataset);
    const MultiViewSequence seq = data.load_training();
    PipelineResult result;
    result.plan = plan_for(cfg, data, seq, &result.flow);
    const int windows = int(result.plan.windows.size());
    if (opts.only_window)
        require(*opts.only_window >= 0 && *opts.only_window < windows, ErrorKind::ConfigError,
                "--window " + std::to_string(*opts.only_window) + " is outside the plan of " +
                    std::to_string(windows) + " windows");
    const fs::path stage1_dir = cfg.output / "stage1", stage2_dir = cfg.output / "stage2";
    fs::create_directories(stage1_dir);
    {
        json plan = {{"threshold", std::isfinite(result.plan.threshold) ? json(result.plan.threshold) : json("inf")},
                     {"flow", result.flow.per_transition},
                     {"windows", json::array()}};
        for (const auto &w : result.plan.windows) plan["windows"].push_back({w.start, w.end});
        write_json_file(cfg.output / "plan.json", plan);
    }

    TrainConfig train = cfg.train;
    train.background = data.background;
    FinetuneConfig finetune = cfg.finetune;
    finetune.background = data.background;

    // Stage 1: one independent model per window.
    auto stage1_inputs = [&](int k) {
        const FrameWindow &w = result.plan.windows[std::size_t(k)];
        return json{{"window", {w.start, w.end}},
                    {"seed", window_seed(cfg.seed, k)},
                    {"dataset", fs::absolute(cfg.dataset).lexically_normal().string()},
                    {"train", json::parse(cfg.train_fingerprint())},
                    {"background", {data.background.x(), data.background.y(), data.background.z()}}};
    };
    result.stage1.resize(std::size_t(windows));
    std::vector<bool> have(std::size_t(windows), false);
    std::vector<int> todo;
    for (int k = 0; k < windows; ++k) {
        if (auto m = try_reuse(checkpoint_paths(stage1_dir, k), stage1_inputs(k), nullptr)) {
            result.stage1[std::size_t(k)] = std::move(*m);
            have[std::size_t(k)] = true;
            ++result.stage1_reused;
        } else if (opts.stage1 && (!opts.only_window || *opts.only_window == k)) {
            todo.push_back(k);
        }
    }
    if (!todo.empty()) {
        std::atomic<std::size_t> next{0};
        std::mutex error_mutex;
        std::exception_ptr first_error;
        auto worker = [&] {
            for (std::size_t i; (i = next.fetch_add(1)) < todo.size();) {
                const int k = todo[i];
                const FrameWindow &w = result.plan.windows[std::size_t(k)];
                try {
                    TrainConfig c = train;
                    c.seed = window_seed(cfg.seed, k);
                    std::vector<TrainingRecord> log;
                    const WindowModel model = train_window(data.seed_points(central_frame(w)), seq, w, c, {}, &log);
                    const Checkpoint cp = checkpoint_paths(stage1_dir, k);
                    const std::uint32_t crc = save_model(cp.blob, model);
                    json records = json::array();
                    for (const auto &r : log)
                        records.push_back({{"iter", r.iter}, {"loss", r.loss}, {"psnr", r.psnr}, {"gaussians", r.gaussians}});
                    write_json_file(cp.meta, {{"inputs", stage1_inputs(k)}, {"crc32", crc}, {"log", records}});
                } catch (const Error &e) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::make_exception_ptr(with_context(e, window_label(k, w)));
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        };
        const int n = std::min<int>(cfg.workers, int(todo.size()));
        std::vector<std::thread> pool;
        for (int i = 1; i < n; ++i) pool.emplace_back(worker);
        worker();
        for (auto &t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
        // Continue from the stored blobs so a resumed run sees exactly the same models.
        for (int k : todo) {
            const Checkpoint cp = checkpoint_paths(stage1_dir, k);
            const auto crc = read_json_file(cp.meta).at("crc32").get<std::uint32_t>();
            result.stage1[std::size_t(k)] = load_model(cp.blob, &crc);
            have[std::size_t(k)] = true;
            ++result.stage1_trained;
        }
    }
    const bool stage1_complete = std::all_of(have.begin(), have.end(), [](bool b) { return b; });
    if (!opts.stage2 || !stage1_complete) {
        require(!opts.stage2 || stage1_complete, ErrorKind::DataError,
                "stage 2 needs every stage-1 checkpoint; run the train stage first");
        return result;
    }

    // Stage 2: strictly sequential chain, each window against the final previous window.
    fs::create_directories(stage2_dir);
    result.finals.resize(std::size_t(windows));
    result.finals[0] = result.stage1[0];
    std::uint32_t previous_crc = crc32_of(encode_model(result.finals[0]));
    for (int k = 1; k < windows; ++k) {
        const FrameWindow &w = result.plan.windows[std::size_t(k)];
        const std::uint32_t stage1_crc = crc32_of(encode_model(result.stage1[std::size_t(k)]));
        const json inputs = {{"stage1_crc32", stage1_crc},
                             {"previous_crc32", previous_crc},
                             {"seed", window_seed(cfg.seed, k, 1)},
                             {"overlap_poses", cfg.overlap_poses},
                             {"overlap_seed", cfg.overlap_seed},
                             {"finetune", json::parse(cfg.finetune_fingerprint())}};
        const Checkpoint cp = checkpoint_paths(stage2_dir, k);
        const WindowModel &previous = result.finals[std::size_t(k - 1)];
        OverlapRecord rec{k - 1, k, w.start, {}, {}};
        json meta;
        if (auto m = try_reuse(cp, inputs, &meta)) {
            result.finals[std::size_t(k)] = std::move(*m);
            rec.before = overlap_from_json(meta.at("overlap_before"));
            rec.after = overlap_from_json(meta.at("overlap_after"));
            ++result.stage2_reused;
        } else {
            if (opts.only_window && *opts.only_window != k) {
                throw Error(ErrorKind::DataError, window_label(k, w) + " has no current stage-2 checkpoint; "
                                                  "fine-tune it before window " + std::to_string(*opts.only_window));
            }
            try {
                FinetuneConfig c = finetune;
                c.seed = window_seed(cfg.seed, k, 1);
                const WindowModel &current = result.stage1[std::size_t(k)];
                rec.before = measure_overlap(current, previous, data.rig, cfg.overlap_poses, cfg.overlap_seed,
                                             data.background);
                const WindowModel tuned = finetune_window(current, previous, seq, c);
                const std::uint32_t crc = save_model(cp.blob, tuned);
                result.finals[std::size_t(k)] = load_model(cp.blob, &crc);
                rec.after = measure_overlap(result.finals[std::size_t(k)], previous, data.rig, cfg.overlap_poses,
                                            cfg.overlap_seed, data.background);
                write_json_file(cp.meta, {{"inputs", inputs},
                                          {"crc32", crc},
                                          {"overlap_before", overlap_json(rec.before)},
                                          {"overlap_after", overlap_json(rec.after)}});
            } catch (const Error &e) {
                throw with_context(e, window_label(k, w));
            }
            ++result.stage2_run;
        }
        result.overlap.push_back(rec);
        previous_crc = crc32_of(encode_model(result.finals[std::size_t(k)]));
        if (opts.only_window && *opts.only_window == k) return result;
    }

    if (opts.export_bundle) {
        result.bundle_dir = cfg.output / "bundle";
        export_bundle(result.bundle_dir, data, result);
    }
    return result;
}

// -- bundle --------------------------------------------------------------------------------

namespace {

json rig_json(const CameraRig &rig) {
    json out = json::array();
    for (std::size_t v = 0; v < rig.size(); ++v) {
        const Camera &c = rig.cameras[v];
        std::vector<double> pose;
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 4; ++k) pose.push_back(c.pose(r, k));
        out.push_back({{"id", rig.ids[v]},
                       {"fx", c.intrinsics.fx},
                       {"fy", c.intrinsics.fy},
                       {"cx", c.intrinsics.cx},
                       {"cy", c.intrinsics.cy},
                       {"pose", pose}});
    }
    return out;
}

CameraRig rig_from(const json &j, int width, int height) {
    CameraRig rig;
    for (const json &c : j) {
        Camera cam;
        cam.width = width;
        cam.height = height;
        cam.intrinsics = {c.at("fx").get<double>(), c.at("fy").get<double>(), c.at("cx").get<double>(),
                          c.at("cy").get<double>()};
        const auto pose = c.at("pose").get<std::vector<double>>();
        require(pose.size() == 16, ErrorKind::ParseError, "bundle camera pose needs 16 numbers");
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 4; ++k) cam.pose(r, k) = pose[std::size_t(r * 4 + k)];
        rig.cameras.push_back(cam);
        rig.ids.push_back(c.at("id").get<std::string>());
    }
    return rig;
}

json gaussians_json(const GaussianSet &g) {
    return {{"count", g.size()},
            {"sh_degree", g.sh_degree},
            {"means", flat(g.means)},
            {"rotations", flat(g.rotations)},
            {"log_scales", flat(g.log_scales)},
            {"opacity_logits", flat(g.opacity_logits)},
            {"sh", flat(g.sh)}};
}

} // namespace

void export_bundle(const fs::path &dir, const SequenceDataset &data, const PipelineResult &result) {
    require(result.finals.size() == result.plan.windows.size(), ErrorKind::DataError,
            "bundle export needs every fine-tuned window");
    fs::create_directories(dir);
    json manifest = {{"format", "slidesplat-bundle"},
                     {"version", 1},
                     {"frames", data.frames},
                     {"width", data.width},
                     {"height", data.height},
                     {"background", {data.background.x(), data.background.y(), data.background.z()}},
                     {"cameras", rig_json(data.rig)},
                     {"held_out", rig_json(data.held_out)},
                     {"overlap_rule", "later_window"},
                     {"model_format", {{"magic", "SSWM"}, {"version", kModelVersion}, {"endianness", "little"}}},
                     {"plan",
                      {{"threshold", std::isfinite(result.plan.threshold) ? json(result.plan.threshold) : json("inf")},
                       {"flow", result.flow.per_transition}}},
                     {"windows", json::array()},
                     {"golden", "golden.json"},
                     {"overlap_report", "overlap_report.jsonl"}};
    SceneBundle bundle;
    bundle.frames = data.frames;
    bundle.plan = result.plan;
    for (std::size_t k = 0; k < result.finals.size(); ++k) {
        const WindowModel &m = result.finals[k];
        const std::string file = window_stem(int(k)) + ".ssm";
        const auto bytes = encode_model(m);
        write_file_bytes(dir / file, bytes);
        const std::uint32_t crc = crc32_of(bytes);
        manifest["windows"].push_back({{"index", k},
                                       {"start", m.window.start},
                                       {"end", m.window.end},
                                       {"file", file},
                                       {"bytes", bytes.size()},
                                       {"crc32", crc},
                                       {"gaussians", m.canonical.size()},
                                       {"modes", m.canonical.modes()},
                                       {"sh_degree", m.canonical.sh_degree},
                                       {"mode", to_string(m.mode)},
                                       {"finetuned", k > 0},
                                       {"norm",
                                        {{"mean", {m.norm.mean.x(), m.norm.mean.y(), m.norm.mean.z()}},
                                         {"std", {m.norm.stddev.x(), m.norm.stddev.y(), m.norm.stddev.z()}}}}});
        bundle.windows.push_back({m.window, file, crc, k > 0, decode_model(bytes)});
    }

    // Golden vectors from the decoded blobs, i.e. exactly what a bundle reader sees.
    json golden = {{"tolerance", 1e-4}, {"frames", json::array()}};
    for (int f = 0; f < data.frames; ++f) {
        const int k = result.plan.owner_of(f);
        const WindowModel &m = bundle.windows[std::size_t(k)].model;
        json entry = gaussians_json(m.at_frame(f));
        entry["frame"] = f;
        entry["window"] = k;
        entry["t"] = m.time_of(f);
        golden["frames"].push_back(std::move(entry));
    }
    write_json_file(dir / "golden.json", golden, -1);

    // Flicker budget for viewers scrubbing across an overlap: the largest neighbouring-frame
    // change seen anywhere in the sequence from the first training camera.
    double budget = 0.0;
    Image prev;
    for (int f = 0; f < data.frames; ++f) {
        Image cur = bundle.render_frame(f, data.rig.cameras[0]);
        if (f > 0) budget = std::max(budget, l1_loss(cur, prev));
        prev = std::move(cur);
    }
    manifest["flicker_budget"] = budget;
    write_json_file(dir / "manifest.json", manifest);

    std::string lines;
    for (const OverlapRecord &r : result.overlap) {
        lines += json{{"previous", r.previous},
                      {"current", r.current},
                      {"frame", r.frame},
                      {"before", overlap_json(r.before)},
                      {"after", overlap_json(r.after)},
                      {"reduction", r.before.mean > 0.0 ? 1.0 - r.after.mean / r.before.mean : 0.0}}
                     .dump();
        lines += '\n';
    }
    write_file_bytes(dir / "overlap_report.jsonl", std::vector<std::uint8_t>(lines.begin(), lines.end()));
}

SceneBundle load_bundle(const fs::path &dir) {
    const json m = read_json_file(dir / "manifest.json");
    SceneBundle b;
    try {
        require(m.at("format").get<std::string>() == "slidesplat-bundle", ErrorKind::ParseError,
                "not a scene bundle manifest");
        require(m.at("version").get<int>() == 1, ErrorKind::ParseError, "unsupported bundle version");
        b.frames = m.at("frames").get<int>();
        b.width = m.at("width").get<int>();
        b.height = m.at("height").get<int>();
        const auto bg = m.at("background").get<std::vector<double>>();
        b.background = Vec3<double>(bg.at(0), bg.at(1), bg.at(2));
        b.rig = rig_from(m.at("cameras"), b.width, b.height);
        b.held_out = rig_from(m.at("held_out"), b.width, b.height);
        const json &plan = m.at("plan");
        b.plan.threshold = plan.at("threshold").is_string() ? std::numeric_limits<double>::infinity()
                                                            : plan.at("threshold").get<double>();
        for (const json &w : m.at("windows")) {
            BundleWindow bw;
            bw.window = {w.at("start").get<int>(), w.at("end").get<int>()};
            bw.file = w.at("file").get<std::string>();
            bw.crc32 = w.at("crc32").get<std::uint32_t>();
            bw.finetuned = w.at("finetuned").get<bool>();
            bw.model = load_model(dir / bw.file, &bw.crc32);
            require(bw.model.window == bw.window, ErrorKind::DataError,
                    bw.file + " frame range disagrees with the manifest");
            b.plan.windows.push_back(bw.window);
            b.windows.push_back(std::move(bw));
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ParseError, "manifest: " + std::string(e.what()));
    }
    require(!b.windows.empty(), ErrorKind::DataError, "bundle holds no windows");
    require(b.plan.windows.front().start == 0 && b.plan.frame_count() == b.frames, ErrorKind::DataError,
            "bundle windows do not cover the sequence");
    for (std::size_t k = 1; k < b.plan.windows.size(); ++k)
        require(b.plan.windows[k].start == b.plan.windows[k - 1].end, ErrorKind::DataError,
                "adjacent bundle windows must share exactly one frame");
    return b;
}

const WindowModel &SceneBundle::model_for(int frame) const {
    return windows[std::size_t(plan.owner_of(frame))].model;
}

GaussianSet SceneBundle::frame_gaussians(int frame) const { return model_for(frame).at_frame(frame); }

Image SceneBundle::render_frame(int frame, const Camera &cam) const {
    return render(frame_gaussians(frame), cam, background).rgb;
}

std::vector<BundleMetrics> evaluate_bundle(const SceneBundle &bundle, const SequenceDataset &data) {
    std::vector<BundleMetrics> out;
    auto evaluate = [&](const MultiViewSequence &seq, const char *name) {
        BundleMetrics bm;
        bm.camera_set = name;
        const std::size_t views = seq.rig.size();
        bm.report.frames.assign(std::size_t(data.frames), {});
        bm.report.neighbor_l1.assign(std::size_t(std::max(0, data.frames - 1)), 0.0);
        for (std::size_t v = 0; v < views; ++v) {
            std::vector<Image> renders, targets;
            for (int f = 0; f < data.frames; ++f) {
                renders.push_back(bundle.render_frame(f, seq.rig.cameras[v]));
                targets.push_back(seq.image(v, f));
            }
            const MetricsReport r = compute_metrics(renders, targets);
            for (std::size_t f = 0; f < r.frames.size(); ++f) {
                bm.report.frames[f].psnr += r.frames[f].psnr / double(views);
                bm.report.frames[f].ssim += r.frames[f].ssim / double(views);
            }
            for (std::size_t i = 0; i < r.neighbor_l1.size(); ++i) bm.report.neighbor_l1[i] += r.neighbor_l1[i] / double(views);
            bm.report.mean_psnr += r.mean_psnr / double(views);
            bm.report.mean_ssim += r.mean_ssim / double(views);
            if (v == 0) bm.neighbor_l1_first_camera = r.neighbor_l1;
        }
        out.push_back(std::move(bm));
    };
    if (data.held_out.size() > 0) evaluate(data.load_held_out(), "held_out");
    evaluate(data.load_training(), "train");
    return out;
}

} // namespace slidesplat
