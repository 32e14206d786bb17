// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/camera.hpp"
#include "slidesplat/gaussian_set.hpp"
#include "slidesplat/image.hpp"

#include <vector>

namespace slidesplat {

struct AlphaInitOptions {
    double pixel_threshold = 0.05;
    /// Compare 3x3 neighborhood means instead of the single nearest pixel.
    bool neighborhood = false;
};

/// Binary static (0) / dynamic (1) labels, one per Gaussian.
struct DynamicMask {
    std::vector<int> labels;
    /// Per-vote averages behind the labels; NaN where the Gaussian was never visible.
    std::vector<double> votes;

    /// Expands labels to an N x M alpha initialization: M = 1 gives all ones, otherwise column 0
    /// is the static weight and column 1 the dynamic weight.
    Eigen::MatrixXd alpha(int modes) const;
};

/// Labels each Gaussian by majority vote of thresholded L1 color differences between the
/// central frame and every other frame, sampled at the Gaussian's projected pixel in every
/// view. (view, frame) pairs where the Gaussian falls outside the image abstain.
/// `frames[view][k]` is frame k of the window as seen by camera `view`.
DynamicMask init_alpha(const GaussianSet &set, const CameraRig &rig,
                       const std::vector<std::vector<Image>> &frames, int central_frame,
                       const AlphaInitOptions &opts = {});

} // namespace slidesplat
