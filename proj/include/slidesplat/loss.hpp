// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/image.hpp"

namespace slidesplat {

inline constexpr double kDefaultSsimWeight = 0.2;

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// Mean SSIM over all pixels and channels; Gaussian window with zero padding at the borders.
double ssim(const Image &a, const Image &b, const SsimOptions &opts = {});

/// SSIM and its gradient with respect to `a`.
double ssim_with_grad(const Image &a, const Image &b, Image &grad_a, const SsimOptions &opts = {});

/// Mean absolute difference over all elements, and its (sub)gradient with respect to `a`.
double l1_loss(const Image &a, const Image &b, Image *grad_a = nullptr);

inline constexpr double kPsnrCap = 99.0;

double mse(const Image &a, const Image &b);
/// 10 log10(1 / MSE) for images in [0,1], capped at `cap` dB (identical images hit the cap).
double psnr(const Image &a, const Image &b, double cap = kPsnrCap);

struct LossResult {
    double loss = 0.0;
    double l1 = 0.0;
    double ssim = 1.0;
    Image grad; // d loss / d rendered
};

/// (1 - lambda) * L1 + lambda * (1 - SSIM), with the analytic gradient of both terms.
LossResult training_loss(const Image &rendered, const Image &target,
                         double ssim_weight = kDefaultSsimWeight, const SsimOptions &opts = {});

} // namespace slidesplat
