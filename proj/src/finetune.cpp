// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/finetune.hpp"

#include "slidesplat/error.hpp"
#include "slidesplat/loss.hpp"

#include <cmath>

namespace slidesplat {

FinetuneConfig FinetuneConfig::paper() { return FinetuneConfig{}; }

FinetuneConfig FinetuneConfig::desk() {
    FinetuneConfig c;
    c.iters = 300;
    return c;
}

void FinetuneConfig::validate() const {
    require(iters >= 0, ErrorKind::ConfigError, "finetune iters must be >= 0");
    require(consistency_fraction >= 0.0 && consistency_fraction <= 1.0, ErrorKind::ConfigError,
            "consistency_fraction must lie in [0,1]");
    require(position_lr > 0.0 && lr.rotation > 0.0 && lr.scale > 0.0 && lr.opacity > 0.0 && lr.sh_dc > 0.0 &&
                lr.sh_rest > 0.0,
            ErrorKind::ConfigError, "finetune learning rates must be positive");
    require(lr_decay > 0.0 && lr_decay <= 1.0, ErrorKind::ConfigError, "lr_decay must lie in (0,1]");
    require(ssim_weight >= 0.0 && ssim_weight <= 1.0, ErrorKind::ConfigError, "ssim_weight must lie in [0,1]");
    require(render_threads >= 1, ErrorKind::ConfigError, "render_threads must be >= 1");
}

bool is_consistency_step(int k, double fraction) {
    return std::ceil((k + 1) * fraction) - std::ceil(k * fraction) == 1.0;
}

WindowModel finetune_window(const WindowModel &current, const WindowModel &previous,
                            const MultiViewSequence &data, const FinetuneConfig &cfg,
                            const FinetuneObserver &observer) {
    cfg.validate();
    if (previous.window.end != current.window.start)
        throw Error(ErrorKind::OverlapMismatch,
                    "previous window ends at frame " + std::to_string(previous.window.end) +
                        " but the current one starts at " + std::to_string(current.window.start));
    data.rig.validate();
    const std::vector<std::vector<Image>> frames = data.window_frames(current.window);

    WindowModel model = current;
    std::mt19937_64 rng(cfg.seed);
    const PoseSampler sampler(data.rig);
    const GaussianSet previous_overlap = previous.at_frame(previous.window.end);
    const double position_lr = cfg.position_lr * scene_extent(data.rig);
    const RenderOptions ropts{9.0, cfg.render_threads};
    GaussianOptimizerState opt;
    opt.reset(model.canonical);
    std::uniform_int_distribution<int> pick_view(0, int(data.rig.size()) - 1);
    std::uniform_int_distribution<int> pick_frame(0, current.window.length() - 1);

    for (int k = 0; k < cfg.iters; ++k) {
        const bool consistency = is_consistency_step(k, cfg.consistency_fraction);
        Camera cam;
        Image target;
        double t = 0.0;
        if (consistency) {
            cam = sampler.sample(rng);
            target = render(previous_overlap, cam, cfg.background, ropts).rgb;
        } else {
            const std::size_t view = std::size_t(pick_view(rng));
            const int local = pick_frame(rng);
            cam = data.rig.cameras[view];
            target = frames[view][std::size_t(local)];
            t = model.time_of(current.window.start + local);
        }
        const DeformedFrame frame = deform_model(model, t, true);
        const RenderedImage img = render(frame.gaussians, cam, cfg.background, ropts);
        double loss = 0.0;
        Image upstream;
        if (consistency) {
            loss = l1_loss(img.rgb, target, &upstream);
        } else {
            LossResult r = training_loss(img.rgb, target, cfg.ssim_weight);
            loss = r.loss;
            upstream = std::move(r.grad);
        }
        if (!std::isfinite(loss))
            throw Error(ErrorKind::NumericFailure, "non-finite fine-tuning loss at step " + std::to_string(k));
        const ModelGradients grads = model_backward(model, frame, cam, cfg.background, upstream, ropts);
        const double scale = log_linear(1.0, cfg.lr_decay, double(k), double(std::max(1, cfg.iters - 1)));
        GaussianLearningRates lr = cfg.lr;
        for (double *r : {&lr.rotation, &lr.scale, &lr.opacity, &lr.sh_dc, &lr.sh_rest}) *r *= scale;
        step_gaussians(model.canonical, grads.canonical, opt, lr, position_lr * scale);
        model.canonical.normalize_rotations();
        if (!model.canonical.all_finite())
            throw Error(ErrorKind::NumericFailure, "non-finite parameters at fine-tuning step " + std::to_string(k));
        if (observer) observer({k, consistency, loss, &model, &previous});
    }
    return model;
}

OverlapReport measure_overlap(const WindowModel &current, const WindowModel &previous, const CameraRig &rig,
                              int poses, std::uint64_t seed, const Vec3<double> &background) {
    require(poses >= 1, ErrorKind::ConfigError, "need at least one pose");
    if (previous.window.end != current.window.start)
        throw Error(ErrorKind::OverlapMismatch, "windows do not share their boundary frame");
    const PoseSampler sampler(rig);
    std::mt19937_64 rng(seed);
    const GaussianSet a = current.at_frame(current.window.start);
    const GaussianSet b = previous.at_frame(previous.window.end);
    OverlapReport report;
    for (int p = 0; p < poses; ++p) {
        const Camera cam = sampler.sample(rng);
        report.per_pose_l1.push_back(l1_loss(render(a, cam, background).rgb, render(b, cam, background).rgb));
        report.mean += report.per_pose_l1.back();
    }
    report.mean /= poses;
    return report;
}

} // namespace slidesplat
