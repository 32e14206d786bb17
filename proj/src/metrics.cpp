// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/metrics.hpp"

#include "slidesplat/error.hpp"
#include "slidesplat/loss.hpp"

namespace slidesplat {

MetricsReport compute_metrics(const std::vector<Image> &renders, const std::vector<Image> &targets) {
    require(renders.size() == targets.size(), ErrorKind::ShapeMismatch, "render and target counts differ");
    MetricsReport r;
    for (std::size_t i = 0; i < renders.size(); ++i) {
        r.frames.push_back({psnr(renders[i], targets[i]), ssim(renders[i], targets[i])});
        r.mean_psnr += r.frames.back().psnr;
        r.mean_ssim += r.frames.back().ssim;
        if (i > 0) r.neighbor_l1.push_back(l1_loss(renders[i], renders[i - 1]));
    }
    if (!renders.empty()) {
        r.mean_psnr /= double(renders.size());
        r.mean_ssim /= double(renders.size());
    }
    return r;
}

} // namespace slidesplat
