// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/camera.hpp"
#include "slidesplat/gaussian_set.hpp"
#include "slidesplat/image.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <utility>

namespace slidesplat::fixtures {

/// Camera at the origin looking down +z.
inline Camera front_camera(int w = 16, int h = 16, double f = 20.0) {
    Camera cam;
    cam.pose = Mat4<double>::Identity();
    cam.intrinsics = {f, f, 0.5 * (w - 1), 0.5 * (h - 1)};
    cam.width = w;
    cam.height = h;
    return cam;
}

/// Gaussians scattered in the frustum of `front_camera`, with positive colors so the SH clamp
/// stays inactive.
inline GaussianSet random_scene(int n, int degree, int modes, std::mt19937_64 &rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GaussianSet set(n, degree, modes);
    for (int i = 0; i < n; ++i) {
        const double z = 3.0 + 1.5 * (u(rng) + 1.0);
        set.means.row(i) << 0.6 * u(rng) * z / 3.0, 0.6 * u(rng) * z / 3.0, z;
        Vec4<double> q(1.0 + 0.3 * u(rng), 0.4 * u(rng), 0.4 * u(rng), 0.4 * u(rng));
        set.rotations.row(i) = q.transpose();
        set.log_scales.row(i) << std::log(0.25 + 0.1 * u(rng)), std::log(0.2 + 0.08 * u(rng)),
            std::log(0.15 + 0.05 * u(rng));
        set.opacity_logits[i] = 0.8 * u(rng);
        for (int c = 0; c < 3; ++c) {
            set.sh(i, c) = (0.55 + 0.3 * u(rng)) / kShC0;
            for (int k = 1; k < set.sh_coeffs(); ++k) set.sh(i, k * 3 + c) = 0.08 * u(rng);
        }
        for (int m = 0; m < modes; ++m) set.alpha(i, m) = 0.5 + 0.5 * u(rng);
    }
    return set;
}

inline Image random_image(int w, int h, int c, std::mt19937_64 &rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Image img(w, h, c);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data[i] = u(rng);
    return img;
}

/// Central difference of a scalar function that also reports a structural count. The step
/// shrinks whenever the count changes across the stencil, which signals a jump at the
/// Mahalanobis cutoff rather than a genuine slope.
template <typename Eval> std::pair<double, bool> central_difference(Eval &&eval, double h = 1e-5) {
    const long base = eval(0.0).second;
    for (int attempt = 0; attempt < 5; ++attempt, h *= 0.1) {
        const auto plus = eval(h);
        const auto minus = eval(-h);
        if (plus.second == base && minus.second == base) return {(plus.first - minus.first) / (2.0 * h), true};
    }
    return {std::numeric_limits<double>::quiet_NaN(), false};
}

inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

} // namespace slidesplat::fixtures
