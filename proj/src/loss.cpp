// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/loss.hpp"

#include "slidesplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace slidesplat {
namespace {

using Plane = Eigen::ArrayXXd; // rows = y, cols = x

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(static_cast<std::size_t>(size));
    const int half = size / 2;
    double sum = 0.0;
    for (int i = 0; i < size; ++i) {
        k[std::size_t(i)] = std::exp(-double((i - half) * (i - half)) / (2.0 * sigma * sigma));
        sum += k[std::size_t(i)];
    }
    for (auto &v : k) v /= sum;
    return k;
}

// Separable "same" convolution with zero padding. The kernel is symmetric, so this operator
// is its own adjoint.
Plane blur(const Plane &in, const std::vector<double> &k) {
    const int h = int(in.rows()), w = int(in.cols()), half = int(k.size()) / 2;
    Plane tmp = Plane::Zero(h, w), out = Plane::Zero(h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -half; j <= half; ++j) {
                const int xx = x + j;
                if (xx >= 0 && xx < w) acc += k[std::size_t(j + half)] * in(y, xx);
            }
            tmp(y, x) = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -half; j <= half; ++j) {
                const int yy = y + j;
                if (yy >= 0 && yy < h) acc += k[std::size_t(j + half)] * tmp(yy, x);
            }
            out(y, x) = acc;
        }
    return out;
}

Plane channel(const Image &img, int c) {
    Plane p(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) p(y, x) = img.at(x, y, c);
    return p;
}

double ssim_impl(const Image &a, const Image &b, Image *grad_a, const SsimOptions &opts) {
    require(a.same_shape(b), ErrorKind::ShapeMismatch, "SSIM inputs differ in shape");
    const auto k = gaussian_kernel(opts.window, opts.sigma);
    const double count = double(a.size());
    double total = 0.0;
    if (grad_a) *grad_a = Image(a.width, a.height, a.channels);
    for (int c = 0; c < a.channels; ++c) {
        const Plane x = channel(a, c), y = channel(b, c);
        const Plane mx = blur(x, k), my = blur(y, k);
        const Plane exx = blur(x * x, k), eyy = blur(y * y, k), exy = blur(x * y, k);
        const Plane vx = exx - mx * mx, vy = eyy - my * my, cxy = exy - mx * my;
        const Plane a1 = 2.0 * mx * my + opts.c1, a2 = 2.0 * cxy + opts.c2;
        const Plane b1 = mx * mx + my * my + opts.c1, b2 = vx + vy + opts.c2;
        const Plane s = (a1 * a2) / (b1 * b2);
        total += s.sum();
        if (!grad_a) continue;
        // s depends on x through mx, exx and exy; seed each with d mean / d s = 1 / count.
        const Plane den = b1 * b2;
        const Plane d_mx = ((2.0 * my * a2 - 2.0 * my * a1) * den -
                            a1 * a2 * (2.0 * mx * b2 - 2.0 * mx * b1)) /
                           (den * den);
        const Plane d_exx = -s / b2;
        const Plane d_exy = 2.0 * a1 / den;
        const Plane g = blur(d_mx, k) + 2.0 * x * blur(d_exx, k) + y * blur(d_exy, k);
        for (int yy = 0; yy < a.height; ++yy)
            for (int xx = 0; xx < a.width; ++xx) grad_a->at(xx, yy, c) = g(yy, xx) / count;
    }
    return total / count;
}

} // namespace

double ssim(const Image &a, const Image &b, const SsimOptions &opts) {
    return ssim_impl(a, b, nullptr, opts);
}

double ssim_with_grad(const Image &a, const Image &b, Image &grad_a, const SsimOptions &opts) {
    return ssim_impl(a, b, &grad_a, opts);
}

double l1_loss(const Image &a, const Image &b, Image *grad_a) {
    require(a.same_shape(b), ErrorKind::ShapeMismatch, "L1 inputs differ in shape");
    const Eigen::ArrayXd diff = a.data - b.data;
    if (grad_a) {
        *grad_a = Image(a.width, a.height, a.channels);
        grad_a->data = diff.sign() / double(diff.size());
    }
    return diff.abs().mean();
}

double mse(const Image &a, const Image &b) {
    require(a.same_shape(b), ErrorKind::ShapeMismatch, "MSE inputs differ in shape");
    return (a.data - b.data).square().mean();
}

double psnr(const Image &a, const Image &b, double cap) {
    const double e = mse(a, b);
    if (e <= 0.0) return cap;
    return std::min(cap, -10.0 * std::log10(e));
}

LossResult training_loss(const Image &rendered, const Image &target, double ssim_weight,
                         const SsimOptions &opts) {
    require(rendered.same_shape(target), ErrorKind::ShapeMismatch,
            "rendered and target images differ in shape");
    LossResult r;
    Image g_l1, g_ssim;
    r.l1 = l1_loss(rendered, target, &g_l1);
    r.ssim = ssim_with_grad(rendered, target, g_ssim, opts);
    r.loss = (1.0 - ssim_weight) * r.l1 + ssim_weight * (1.0 - r.ssim);
    r.grad = Image(rendered.width, rendered.height, rendered.channels);
    r.grad.data = (1.0 - ssim_weight) * g_l1.data - ssim_weight * g_ssim.data;
    return r;
}

} // namespace slidesplat
