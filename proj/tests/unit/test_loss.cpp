// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/error.hpp"
#include "slidesplat/loss.hpp"

#include "support/fixtures.hpp"

#include <gtest/gtest.h>

using namespace slidesplat;

namespace {

// Direct 2D-window SSIM: for every pixel, weight the whole window at once instead of two 1D
// passes; out-of-image samples count as zero.
double reference_ssim(const Image &a, const Image &b, int win = 11, double sigma = 1.5) {
    const int half = win / 2;
    Eigen::ArrayXXd w(win, win);
    for (int j = 0; j < win; ++j)
        for (int i = 0; i < win; ++i)
            w(j, i) = std::exp(-((i - half) * (i - half) + (j - half) * (j - half)) / (2 * sigma * sigma));
    w /= w.sum();
    const double c1 = 1e-4, c2 = 9e-4;
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c)
        for (int y = 0; y < a.height; ++y)
            for (int x = 0; x < a.width; ++x) {
                double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
                for (int j = -half; j <= half; ++j)
                    for (int i = -half; i <= half; ++i) {
                        const int px = x + i, py = y + j;
                        if (px < 0 || py < 0 || px >= a.width || py >= a.height) continue;
                        const double wt = w(j + half, i + half);
                        const double va = a.at(px, py, c), vb = b.at(px, py, c);
                        mx += wt * va;
                        my += wt * vb;
                        xx += wt * va * va;
                        yy += wt * vb * vb;
                        xy += wt * va * vb;
                    }
                const double vx = xx - mx * mx, vy = yy - my * my, cov = xy - mx * my;
                total += ((2 * mx * my + c1) * (2 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
    return total / double(a.size());
}

} // namespace

TEST(Loss, SsimOfIdenticalImagesIsOne) {
    std::mt19937_64 rng(1);
    const Image a = fixtures::random_image(13, 9, 3, rng, 0.0, 1.0);
    EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
}

TEST(Loss, SsimMatchesDirectWindowReference) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 4; ++trial) {
        const Image a = fixtures::random_image(17, 12, 3, rng, 0.0, 1.0);
        const Image b = fixtures::random_image(17, 12, 3, rng, 0.0, 1.0);
        EXPECT_NEAR(ssim(a, b), reference_ssim(a, b), 1e-12);
    }
}

TEST(Loss, TrainingLossGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(3);
    const Image r = fixtures::random_image(12, 10, 3, rng, 0.0, 1.0);
    const Image t = fixtures::random_image(12, 10, 3, rng, 0.0, 1.0);
    const LossResult res = training_loss(r, t);
    EXPECT_NEAR(res.loss, 0.8 * res.l1 + 0.2 * (1.0 - res.ssim), 1e-15);
    for (Eigen::Index i = 0; i < r.size(); i += 7) {
        auto eval = [&](double h) {
            Image p = r;
            p.data[i] += h;
            return std::make_pair(training_loss(p, t).loss, long(0));
        };
        const auto [numeric, ok] = fixtures::central_difference(eval, 1e-6);
        ASSERT_TRUE(ok);
        EXPECT_LT(fixtures::relative_error(res.grad.data[i], numeric), 1e-3) << "element " << i;
    }
}

TEST(Loss, SsimGradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(4);
    const Image a = fixtures::random_image(9, 8, 1, rng, 0.0, 1.0);
    const Image b = fixtures::random_image(9, 8, 1, rng, 0.0, 1.0);
    Image g;
    ssim_with_grad(a, b, g);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        Image p = a, m = a;
        p.data[i] += 1e-6;
        m.data[i] -= 1e-6;
        const double numeric = (ssim(p, b) - ssim(m, b)) / 2e-6;
        EXPECT_LT(fixtures::relative_error(g.data[i], numeric), 1e-4);
    }
}

TEST(Loss, L1IsMeanAbsoluteDifference) {
    Image a(2, 1, 1), b(2, 1, 1);
    a.data << 0.5, 0.2;
    b.data << 0.1, 0.4;
    Image g;
    EXPECT_DOUBLE_EQ(l1_loss(a, b, &g), 0.3);
    EXPECT_DOUBLE_EQ(g.data[0], 0.5);
    EXPECT_DOUBLE_EQ(g.data[1], -0.5);
}

TEST(Loss, ShapeMismatchThrows) {
    EXPECT_THROW(training_loss(Image(3, 3, 3), Image(3, 4, 3)), Error);
}
