// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/alpha_init.hpp"
#include "slidesplat/camera.hpp"
#include "slidesplat/density.hpp"
#include "slidesplat/dynamic_mlp.hpp"
#include "slidesplat/gaussian_set.hpp"
#include "slidesplat/image.hpp"
#include "slidesplat/optimizer.hpp"
#include "slidesplat/renderer.hpp"
#include "slidesplat/window_sampler.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace slidesplat {

/// Colored seed points (colors in [0,1]).
struct PointCloud {
    RowMatrix3 positions;
    RowMatrix3 colors;

    Eigen::Index size() const { return positions.rows(); }
};

/// Calibrated rig plus images[view][frame] for a whole sequence.
struct MultiViewSequence {
    CameraRig rig;
    std::vector<std::vector<Image>> images;

    int frame_count() const { return images.empty() ? 0 : int(images.front().size()); }
    /// Throws MissingImage when the (view, frame) slot is absent or empty.
    const Image &image(std::size_t view, int frame) const;
    /// Per-view image lists restricted to `window`.
    std::vector<std::vector<Image>> window_frames(const FrameWindow &window) const;
};

/// Per-axis mean and standard deviation used to normalize MLP position inputs.
struct NormalizationStats {
    Vec3<double> mean = Vec3<double>::Zero();
    Vec3<double> stddev = Vec3<double>::Ones();

    static NormalizationStats of(const RowMatrix3 &points);
    RowMatrix3 apply(const RowMatrix3 &points) const;
};

enum class DeformationMode {
    Dynamic,    // M weight sets blended by trained alpha
    RegularMlp, // ablation: single weight set, alpha fixed at 1
    Identity,   // ablation: no deformation, static 3DGS
};

const char *to_string(DeformationMode mode);
DeformationMode deformation_mode_from_string(const std::string &name);

struct TrainingRecord {
    int iter = 0;
    double loss = 0.0;
    double psnr = 0.0;
    Eigen::Index gaussians = 0;
};

struct WindowModel {
    GaussianSet canonical;
    DynamicMlp mlp;
    FrameWindow window;
    NormalizationStats norm;
    DeformationMode mode = DeformationMode::Dynamic;
    std::uint64_t seed = 0;
    int iterations = 0;
    double final_loss = 0.0;

    /// Normalized window time of a global frame index: 0 at the first frame, 1 at the last.
    double time_of(int frame) const;
    /// Gaussians deformed to time t (the canonical set itself in identity mode).
    GaussianSet at_time(double t) const;
    GaussianSet at_frame(int frame) const { return at_time(time_of(frame)); }
};

struct GaussianLearningRates {
    double position_init = 1.6e-4; // scaled by scene extent
    double position_final = 1.6e-6;
    double rotation = 1e-3;
    double scale = 5e-3;
    double opacity = 0.05;
    double sh_dc = 2.5e-3;
    double sh_rest = 2.5e-3 / 20.0;
};

struct TrainConfig {
    int total_iters = 15000;
    int warmup_iters = 2000;
    int densify_from = 2000;
    int densify_until = 8000;
    int densify_interval = 100;
    int opacity_reset_interval = 3000; // 0 disables
    GaussianLearningRates lr;
    double mlp_lr = 1e-4;
    double alpha_lr = 1e-4;
    double mlp_lr_decay_factor = 1e-2;
    double decay_horizon = 20000;
    double ssim_weight = 0.2;
    DensityThresholds density;
    AlphaInitOptions alpha_init;
    MlpConfig mlp;
    DeformationMode mode = DeformationMode::Dynamic;
    int sh_degree = 1;
    double initial_opacity = 0.1;
    Vec3<double> background = Vec3<double>::Zero();
    int render_threads = 1;
    int log_interval = 100;
    std::uint64_t seed = 0;

    static TrainConfig paper();
    static TrainConfig desk();
    /// Throws ConfigError on non-positive rates or inconsistent schedules.
    void validate() const;
};

/// 1.1 x the largest camera-center distance from the rig centroid; 1 for a degenerate rig.
double scene_extent(const CameraRig &rig);

/// Seeds one Gaussian per point: nearest-neighbour isotropic scale, identity rotation, color in
/// the DC coefficient, uniform initial opacity.
GaussianSet gaussians_from_points(const PointCloud &points, int sh_degree, int modes, double opacity);

/// Everything needed to backpropagate one rendered frame of a window model.
struct DeformedFrame {
    GaussianSet gaussians;
    Deformation delta;
    DeformCache cache;
    bool deformed = false;
};

DeformedFrame deform_model(const WindowModel &model, double t, bool with_cache);

struct ModelGradients {
    RenderGradients frame;     // with respect to the deformed Gaussians
    RenderGradients canonical; // chained to the canonical Gaussians
    Eigen::VectorXd mlp;       // empty when the frame was not deformed
    Eigen::MatrixXd alpha;
};

ModelGradients model_backward(const WindowModel &model, const DeformedFrame &frame, const Camera &cam,
                              const Vec3<double> &background, const Image &upstream,
                              const RenderOptions &opts);

enum class TrainPhase { WarmUp, Joint };

struct IterationInfo {
    int iter = 0;
    TrainPhase phase = TrainPhase::WarmUp;
    double loss = 0.0;
    const WindowModel *model = nullptr;
    const GaussianOptimizerState *optimizer = nullptr;
    const DensityReport *density = nullptr; // set on iterations that ran ADC
};

using IterationObserver = std::function<void(const IterationInfo &)>;

WindowModel train_window(const PointCloud &points, const MultiViewSequence &data, const FrameWindow &window,
                         const TrainConfig &cfg, const IterationObserver &observer = {},
                         std::vector<TrainingRecord> *log = nullptr);

/// Adam updates for every canonical Gaussian group from `grads`.
void step_gaussians(GaussianSet &set, const RenderGradients &grads, GaussianOptimizerState &state,
                    const GaussianLearningRates &lr, double position_lr);

} // namespace slidesplat
