// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/camera.hpp"
#include "slidesplat/gaussian_set.hpp"
#include "slidesplat/image.hpp"

namespace slidesplat {

struct RenderOptions {
    /// Squared Mahalanobis radius beyond which a splat contributes nothing (3 sigma).
    double cutoff_sq = 9.0;
    /// Row-parallel workers for forward and backward passes.
    int threads = 1;
};

struct RenderedImage {
    Image rgb;                 // H x W x 3
    Image accumulated_opacity; // H x W x 1
    /// Number of (pixel, splat) pairs inside the cutoff; changes only when the piecewise
    /// structure of the image function changes.
    long contributions = 0;
};

/// Per-Gaussian reverse-mode gradients; rows align with the rendered GaussianSet.
struct RenderGradients {
    RowMatrix3 means;
    RowMatrix4 rotations;
    RowMatrix3 log_scales;
    Eigen::VectorXd opacity_logits;
    Eigen::MatrixXd sh;
    /// d loss / d projected center in pixels, used for densification statistics.
    Eigen::Matrix<double, Eigen::Dynamic, 2> screen_means;
    /// True when the Gaussian projected in front of the camera and touched at least one pixel.
    std::vector<bool> visible;

    static RenderGradients zeros(const GaussianSet &set);
    bool all_zero() const;
};

/// Front-to-back alpha compositing of depth-sorted splats over a constant background.
RenderedImage render(const GaussianSet &set, const Camera &cam, const Vec3<double> &background,
                     const RenderOptions &opts = {});

/// Exact adjoint of `render` for an upstream gradient on the rgb image. The depth order is
/// treated as piecewise constant.
RenderGradients render_backward(const GaussianSet &set, const Camera &cam,
                                const Vec3<double> &background, const Image &upstream_rgb,
                                const RenderOptions &opts = {});

/// Per-pixel index of the splat with the largest compositing weight, or -1 where the
/// background dominates (accumulated opacity below `min_opacity`).
Eigen::ArrayXXi dominant_splat(const GaussianSet &set, const Camera &cam, double min_opacity = 0.5,
                               const RenderOptions &opts = {});

} // namespace slidesplat
