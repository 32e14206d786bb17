// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/trainer.hpp"

#include "slidesplat/error.hpp"
#include "slidesplat/loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace slidesplat {

const Image &MultiViewSequence::image(std::size_t view, int frame) const {
    if (view >= images.size() || frame < 0 || frame >= int(images[view].size()) ||
        images[view][std::size_t(frame)].size() == 0)
        throw Error(ErrorKind::MissingImage, "view " + std::to_string(view) + ", frame " + std::to_string(frame));
    return images[view][std::size_t(frame)];
}

std::vector<std::vector<Image>> MultiViewSequence::window_frames(const FrameWindow &window) const {
    std::vector<std::vector<Image>> out(rig.size());
    for (std::size_t v = 0; v < rig.size(); ++v)
        for (int f = window.start; f <= window.end; ++f) out[v].push_back(image(v, f));
    return out;
}

NormalizationStats NormalizationStats::of(const RowMatrix3 &points) {
    NormalizationStats s;
    if (points.rows() == 0) return s;
    s.mean = points.colwise().mean().transpose();
    const RowMatrix3 centered = points.rowwise() - s.mean.transpose();
    s.stddev = (centered.array().square().colwise().mean().sqrt()).transpose();
    for (int k = 0; k < 3; ++k)
        if (!(s.stddev[k] > 1e-8)) s.stddev[k] = 1.0;
    return s;
}

RowMatrix3 NormalizationStats::apply(const RowMatrix3 &points) const {
    return (points.rowwise() - mean.transpose()).array().rowwise() / stddev.transpose().array();
}

const char *to_string(DeformationMode mode) {
    switch (mode) {
    case DeformationMode::Dynamic: return "dynamic";
    case DeformationMode::RegularMlp: return "regular_mlp";
    case DeformationMode::Identity: return "identity";
    }
    return "?";
}

DeformationMode deformation_mode_from_string(const std::string &name) {
    if (name == "dynamic") return DeformationMode::Dynamic;
    if (name == "regular_mlp") return DeformationMode::RegularMlp;
    if (name == "identity") return DeformationMode::Identity;
    throw Error(ErrorKind::ConfigError, "unknown deformation mode '" + name + "'");
}

double WindowModel::time_of(int frame) const {
    if (window.length() <= 1) return 0.0;
    return double(frame - window.start) / double(window.length() - 1);
}

GaussianSet WindowModel::at_time(double t) const { return deform_model(*this, t, false).gaussians; }

TrainConfig TrainConfig::paper() { return TrainConfig{}; }

TrainConfig TrainConfig::desk() {
    TrainConfig c;
    c.total_iters = 1500;
    c.warmup_iters = 300;
    c.densify_from = 300;
    c.densify_until = 800;
    c.opacity_reset_interval = 0;
    c.decay_horizon = 2000;
    c.mlp_lr = 1e-3;
    c.alpha_lr = 1e-3;
    c.log_interval = 50;
    return c;
}

void TrainConfig::validate() const {
    auto positive = [](double v, const char *what) {
        require(v > 0.0 && std::isfinite(v), ErrorKind::ConfigError, std::string(what) + " must be positive");
    };
    require(total_iters > 0, ErrorKind::ConfigError, "total_iters must be positive");
    require(warmup_iters >= 0 && warmup_iters <= total_iters, ErrorKind::ConfigError,
            "warmup_iters must lie in [0, total_iters]");
    require(densify_from >= warmup_iters, ErrorKind::ConfigError, "densification starts after warm-up");
    require(densify_interval > 0, ErrorKind::ConfigError, "densify_interval must be positive");
    require(opacity_reset_interval >= 0, ErrorKind::ConfigError, "opacity_reset_interval must be >= 0");
    positive(lr.position_init, "position lr");
    positive(lr.position_final, "final position lr");
    positive(lr.rotation, "rotation lr");
    positive(lr.scale, "scale lr");
    positive(lr.opacity, "opacity lr");
    positive(lr.sh_dc, "sh dc lr");
    positive(lr.sh_rest, "sh rest lr");
    positive(mlp_lr, "mlp_lr");
    positive(alpha_lr, "alpha_lr");
    positive(mlp_lr_decay_factor, "mlp_lr_decay_factor");
    positive(decay_horizon, "decay_horizon");
    require(ssim_weight >= 0.0 && ssim_weight <= 1.0, ErrorKind::ConfigError, "ssim_weight must lie in [0,1]");
    require(sh_degree == 0 || sh_degree == 1, ErrorKind::ConfigError, "sh_degree must be 0 or 1");
    require(initial_opacity > 0.0 && initial_opacity < 1.0, ErrorKind::ConfigError,
            "initial_opacity must lie in (0,1)");
    require(mlp.modes >= 1 && mlp.depth >= 1 && mlp.width >= 1 && mlp.frequencies >= 0, ErrorKind::ConfigError,
            "MLP shape");
    require(render_threads >= 1, ErrorKind::ConfigError, "render_threads must be >= 1");
}

double scene_extent(const CameraRig &rig) {
    if (rig.size() == 0) return 1.0;
    Vec3<double> centroid = Vec3<double>::Zero();
    for (const auto &c : rig.cameras) centroid += c.center();
    centroid /= double(rig.size());
    double radius = 0.0;
    for (const auto &c : rig.cameras) radius = std::max(radius, (c.center() - centroid).norm());
    return radius > 1e-9 ? 1.1 * radius : 1.0;
}

GaussianSet gaussians_from_points(const PointCloud &points, int sh_degree, int modes, double opacity) {
    require(points.size() > 0, ErrorKind::EmptySeedCloud, "seed point cloud is empty");
    require(points.colors.rows() == points.size(), ErrorKind::ShapeMismatch, "one color per seed point");
    const Eigen::Index n = points.size();
    GaussianSet set(n, sh_degree, modes);
    set.means = points.positions;
    set.opacity_logits.setConstant(logit(opacity));
    set.sh.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) set.sh(i, c) = sh_dc_from_color(points.colors(i, c));
        std::vector<double> d2;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) d2.push_back((points.positions.row(i) - points.positions.row(j)).squaredNorm());
        double scale = 0.1;
        if (!d2.empty()) {
            const std::size_t k = std::min<std::size_t>(3, d2.size());
            std::partial_sort(d2.begin(), d2.begin() + std::ptrdiff_t(k), d2.end());
            double mean = 0.0;
            for (std::size_t q = 0; q < k; ++q) mean += d2[q];
            scale = std::sqrt(std::max(mean / double(k), 1e-7));
        }
        set.log_scales.row(i).setConstant(std::log(scale));
    }
    set.alpha.setZero();
    set.alpha.col(0).setOnes();
    return set;
}

DeformedFrame deform_model(const WindowModel &model, double t, bool with_cache) {
    DeformedFrame out;
    if (model.mode == DeformationMode::Identity) {
        out.gaussians = model.canonical;
        return out;
    }
    const RowMatrix3 positions = model.norm.apply(model.canonical.means);
    out.delta = deform(model.mlp, positions, t, model.canonical.alpha, with_cache ? &out.cache : nullptr);
    out.gaussians = apply_deformation(model.canonical, out.delta);
    out.deformed = true;
    return out;
}

ModelGradients model_backward(const WindowModel &model, const DeformedFrame &frame, const Camera &cam,
                              const Vec3<double> &background, const Image &upstream,
                              const RenderOptions &opts) {
    ModelGradients out;
    out.frame = render_backward(frame.gaussians, cam, background, upstream, opts);
    out.canonical = out.frame;
    if (!frame.deformed) return out;
    require(!frame.cache.layers.empty(), ErrorKind::ShapeMismatch, "deformed frame was built without a cache");
    // The deformed quaternion is normalize(q + dr); the renderer's gradient is already
    // tangent to the unit sphere, so only the 1/|q + dr| factor remains.
    const RowMatrix4 raw = model.canonical.rotations + frame.delta.dr;
    const Eigen::VectorXd norms = raw.rowwise().norm();
    Deformation up;
    up.dx = out.frame.means;
    up.dr = out.frame.rotations.array().colwise() / norms.array();
    up.ds = out.frame.log_scales;
    out.canonical.rotations = up.dr;
    const DeformGradients dg = deform_backward(model.mlp, frame.cache, up);
    out.canonical.means += RowMatrix3(dg.positions.array().rowwise() / model.norm.stddev.transpose().array());
    out.mlp = dg.parameters;
    out.alpha = dg.alpha;
    return out;
}

void step_gaussians(GaussianSet &set, const RenderGradients &grads, GaussianOptimizerState &state,
                    const GaussianLearningRates &lr, double position_lr) {
    adam_step(set.means, grads.means, state.means, position_lr);
    adam_step(set.rotations, grads.rotations, state.rotations, lr.rotation);
    adam_step(set.log_scales, grads.log_scales, state.log_scales, lr.scale);
    adam_step(set.opacity_logits, grads.opacity_logits, state.opacity_logits, lr.opacity);
    adam_step(set.sh.leftCols(3), grads.sh.leftCols(3), state.sh_dc, lr.sh_dc);
    if (set.sh.cols() > 3)
        adam_step(set.sh.rightCols(set.sh.cols() - 3), grads.sh.rightCols(grads.sh.cols() - 3), state.sh_rest,
                  lr.sh_rest);
}

namespace {

bool gradients_finite(const ModelGradients &g) {
    const RenderGradients &c = g.canonical;
    return c.means.allFinite() && c.rotations.allFinite() && c.log_scales.allFinite() &&
           c.opacity_logits.allFinite() && c.sh.allFinite() && g.mlp.allFinite() && g.alpha.allFinite();
}

std::string where(const FrameWindow &w, int iter) {
    return "window [" + std::to_string(w.start) + ", " + std::to_string(w.end) + "] iteration " +
           std::to_string(iter);
}

} // namespace

WindowModel train_window(const PointCloud &points, const MultiViewSequence &data, const FrameWindow &window,
                         const TrainConfig &cfg, const IterationObserver &observer,
                         std::vector<TrainingRecord> *log) {
    cfg.validate();
    require(points.size() > 0, ErrorKind::EmptySeedCloud, "seed point cloud is empty");
    data.rig.validate();
    require(data.images.size() == data.rig.size(), ErrorKind::DataError, "one image list per camera");
    require(window.start >= 0 && window.end >= window.start, ErrorKind::EmptyWindow, "window has no frames");
    const std::vector<std::vector<Image>> frames = data.window_frames(window);

    std::mt19937_64 rng(cfg.seed);
    WindowModel model;
    model.window = window;
    model.mode = cfg.mode;
    model.seed = cfg.seed;
    MlpConfig mlp_cfg = cfg.mlp;
    if (cfg.mode != DeformationMode::Dynamic) mlp_cfg.modes = 1;
    model.mlp = DynamicMlp(mlp_cfg, rng);
    model.canonical = gaussians_from_points(points, cfg.sh_degree, mlp_cfg.modes, cfg.initial_opacity);
    model.norm = NormalizationStats::of(model.canonical.means);

    const double extent = scene_extent(data.rig);
    DensityThresholds density = cfg.density;
    density.extent = extent;
    GaussianOptimizerState opt;
    opt.reset(model.canonical);
    AdamState mlp_state;
    DensityStats stats;
    stats.reset(model.canonical.size());

    const RenderOptions ropts{9.0, cfg.render_threads};
    const int central = window.length() / 2;
    const bool trains_mlp = cfg.mode != DeformationMode::Identity;
    std::uniform_int_distribution<int> pick_view(0, int(data.rig.size()) - 1);
    std::uniform_int_distribution<int> pick_frame(0, window.length() - 1);

    for (int iter = 0; iter < cfg.total_iters; ++iter) {
        const bool joint = iter >= cfg.warmup_iters;
        if (iter == cfg.warmup_iters) {
            model.norm = NormalizationStats::of(model.canonical.means);
            if (cfg.mode == DeformationMode::Dynamic) {
                const DynamicMask mask = init_alpha(model.canonical, data.rig, frames, central, cfg.alpha_init);
                model.canonical.alpha = mask.alpha(mlp_cfg.modes);
            }
            opt.alpha.reset(model.canonical.size(), model.canonical.modes());
        }
        const std::size_t view = std::size_t(pick_view(rng));
        const int local = joint ? pick_frame(rng) : central;
        const Camera &cam = data.rig.cameras[view];
        const Image &target = frames[view][std::size_t(local)];

        DeformedFrame frame;
        if (joint && trains_mlp) {
            frame = deform_model(model, model.time_of(window.start + local), true);
        } else {
            frame.gaussians = model.canonical;
        }
        const RenderedImage img = render(frame.gaussians, cam, cfg.background, ropts);
        const LossResult loss = training_loss(img.rgb, target, cfg.ssim_weight);
        if (!std::isfinite(loss.loss)) throw Error(ErrorKind::NumericFailure, "non-finite loss at " + where(window, iter));
        const ModelGradients grads = model_backward(model, frame, cam, cfg.background, loss.grad, ropts);
        if (!gradients_finite(grads))
            throw Error(ErrorKind::NumericFailure, "non-finite gradient at " + where(window, iter));

        const bool densifying = iter >= cfg.densify_from && iter < cfg.densify_until;
        if (densifying) stats.accumulate(grads.frame, cam.width, cam.height);

        const double position_lr = log_linear(cfg.lr.position_init * extent, cfg.lr.position_final * extent,
                                              double(iter), double(cfg.total_iters));
        step_gaussians(model.canonical, grads.canonical, opt, cfg.lr, position_lr);
        if (joint && trains_mlp) {
            Eigen::VectorXd params = model.mlp.parameters();
            adam_step(params, grads.mlp, mlp_state,
                      exponential_decay(cfg.mlp_lr, cfg.mlp_lr_decay_factor, double(iter), cfg.decay_horizon));
            model.mlp.set_parameters(params);
            if (cfg.mode == DeformationMode::Dynamic)
                adam_step(model.canonical.alpha, grads.alpha, opt.alpha, cfg.alpha_lr);
        }
        model.canonical.normalize_rotations();
        if (!model.canonical.all_finite())
            throw Error(ErrorKind::NumericFailure, "non-finite parameters at " + where(window, iter));

        DensityReport report;
        bool ran_density = false;
        if (densifying && (iter + 1 - cfg.densify_from) % cfg.densify_interval == 0) {
            report = adaptive_density_control(model.canonical, stats, density, rng);
            opt.apply(report.edit);
            stats.reset(model.canonical.size());
            ran_density = true;
        }
        if (cfg.opacity_reset_interval > 0 && iter < cfg.densify_until &&
            (iter + 1) % cfg.opacity_reset_interval == 0) {
            reset_opacity(model.canonical);
            opt.opacity_logits.reset(model.canonical.size(), 1);
        }

        model.iterations = iter + 1;
        model.final_loss = loss.loss;
        if (log && (iter % cfg.log_interval == 0 || iter + 1 == cfg.total_iters))
            log->push_back({iter, loss.loss, psnr(img.rgb, target), model.canonical.size()});
        if (observer) {
            IterationInfo info;
            info.iter = iter;
            info.phase = joint ? TrainPhase::Joint : TrainPhase::WarmUp;
            info.loss = loss.loss;
            info.model = &model;
            info.optimizer = &opt;
            info.density = ran_density ? &report : nullptr;
            observer(info);
        }
    }
    if (cfg.warmup_iters >= cfg.total_iters) model.norm = NormalizationStats::of(model.canonical.means);
    return model;
}

} // namespace slidesplat
