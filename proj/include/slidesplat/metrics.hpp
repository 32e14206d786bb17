// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/image.hpp"

#include <vector>

namespace slidesplat {

struct FrameMetrics {
    double psnr = 0.0; // capped at kPsnrCap
    double ssim = 0.0;
};

struct MetricsReport {
    std::vector<FrameMetrics> frames;
    /// Mean absolute difference between consecutive renders: entry i compares frame i + 1
    /// with frame i.
    std::vector<double> neighbor_l1;
    double mean_psnr = 0.0;
    double mean_ssim = 0.0;
};

/// Per-frame PSNR/SSIM of renders against targets plus the neighbouring-render L1 series.
/// Throws ShapeMismatch on a length or shape disagreement.
MetricsReport compute_metrics(const std::vector<Image> &renders, const std::vector<Image> &targets);

} // namespace slidesplat
