// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/se3.hpp"
#include "slidesplat/trainer.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace slidesplat {

struct FinetuneConfig {
    int iters = 3000;
    double consistency_fraction = 0.75;
    GaussianLearningRates lr;
    /// Constant position rate, multiplied by the scene extent.
    double position_lr = 1.6e-5;
    /// Every rate decays log-linearly to rate * lr_decay by the last step.
    double lr_decay = 0.01;
    double ssim_weight = 0.2;
    Vec3<double> background = Vec3<double>::Zero();
    int render_threads = 1;
    std::uint64_t seed = 0;

    static FinetuneConfig paper();
    static FinetuneConfig desk();
    void validate() const;
};

/// Deterministic alternation: step k is a consistency step when ceil((k+1) f) - ceil(k f) == 1,
/// so f = 0.75 repeats consistency, consistency, consistency, training.
bool is_consistency_step(int k, double fraction);

struct FinetuneIterationInfo {
    int iter = 0;
    bool consistency = false;
    double loss = 0.0;
    const WindowModel *current = nullptr;
    const WindowModel *previous = nullptr;
};

using FinetuneObserver = std::function<void(const FinetuneIterationInfo &)>;

/// Refines the canonical Gaussians of `current` so its first frame agrees with the last frame
/// of `previous` from sampled novel viewpoints; MLP, alpha and `previous` stay untouched.
/// Throws OverlapMismatch unless previous.window.end == current.window.start.
WindowModel finetune_window(const WindowModel &current, const WindowModel &previous,
                            const MultiViewSequence &data, const FinetuneConfig &cfg,
                            const FinetuneObserver &observer = {});

struct OverlapReport {
    std::vector<double> per_pose_l1;
    double mean = 0.0;
};

/// Mean absolute difference between the two models' renders of the shared frame at `poses`
/// novel cameras drawn from `rig` with a fixed seed.
OverlapReport measure_overlap(const WindowModel &current, const WindowModel &previous, const CameraRig &rig,
                              int poses, std::uint64_t seed, const Vec3<double> &background = Vec3<double>::Zero());

} // namespace slidesplat
