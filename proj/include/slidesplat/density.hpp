// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/gaussian_set.hpp"
#include "slidesplat/optimizer.hpp"
#include "slidesplat/renderer.hpp"

#include <random>

namespace slidesplat {

/// Running mean of the screen-space positional gradient norm per Gaussian, counted only in
/// views where the Gaussian was visible.
struct DensityStats {
    Eigen::VectorXd grad_accum;
    Eigen::VectorXd visible_count;

    void reset(Eigen::Index rows);
    Eigen::Index rows() const { return grad_accum.size(); }
    /// Pixel gradients are converted to normalized device units (x W/2, y H/2) so thresholds
    /// do not depend on resolution.
    void accumulate(const RenderGradients &grads, int width, int height);
    Eigen::VectorXd mean_grad() const;
    void apply(const RowEdit &edit);
};

struct DensityThresholds {
    double grad_threshold = 2e-4;
    double min_opacity = 5e-3;
    /// Clone below, split above this fraction of the scene extent (largest axis).
    double percent_dense = 0.01;
    double extent = 1.0;
    int split_children = 2;
    double split_scale_divisor = 1.6;
};

struct DensityReport {
    RowEdit edit;
    int cloned = 0;
    int split = 0;
    int pruned = 0;
};

/// Clones small high-gradient Gaussians, splits large high-gradient ones into children
/// sampled from the parent, then prunes low-opacity Gaussians. Alpha rows follow their
/// Gaussians; the returned edit replays the same change on any other row-aligned state.
DensityReport adaptive_density_control(GaussianSet &set, const DensityStats &stats,
                                       const DensityThresholds &thresholds, std::mt19937_64 &rng);

/// Drops Gaussians with realized opacity below `min_opacity`.
DensityReport prune_transparent(GaussianSet &set, double min_opacity);

/// Caps realized opacity at `ceiling` (periodic reset).
void reset_opacity(GaussianSet &set, double ceiling = 0.01);

} // namespace slidesplat
