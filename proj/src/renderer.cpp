// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/renderer.hpp"

#include "slidesplat/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slidesplat {
namespace {

struct Splat {
    Eigen::Index index = 0;
    Vec3<double> p_cam;
    Vec2<double> center;
    Mat2<double> conic;
    double depth = 0.0;
    double opacity = 0.0;
    Vec3<double> color;
    Vec3<double> color_raw;
    Vec3<double> view_dir;
    double view_dist = 0.0;
    Mat3<double> rot;
    Vec3<double> scale;
    Mat3<double> cov3d;
    Eigen::Matrix<double, 2, 3> jw; // J * W
    int x0 = 0, x1 = -1, y0 = 0, y1 = -1;
};

struct SplatGrad {
    Vec2<double> center = Vec2<double>::Zero();
    Mat2<double> conic = Mat2<double>::Zero();
    double opacity = 0.0;
    Vec3<double> color = Vec3<double>::Zero();
    bool touched = false;
};

std::vector<Splat> prepare(const GaussianSet &set, const Camera &cam, double cutoff_sq) {
    std::vector<Splat> splats;
    splats.reserve(std::size_t(set.size()));
    const Vec3<double> cam_center = cam.center();
    const double radius_scale = std::sqrt(cutoff_sq);
    for (Eigen::Index i = 0; i < set.size(); ++i) {
        const Gaussian g = set.gaussian(i);
        const auto proj = project_gaussian(g, cam);
        if (!proj) continue;
        Splat s;
        s.index = i;
        s.p_cam = cam.to_camera(g.mean);
        s.center = proj->center;
        s.depth = proj->depth;
        s.conic = proj->covariance.inverse();
        s.opacity = g.opacity();
        const Vec3<double> v = g.mean - cam_center;
        s.view_dist = v.norm();
        s.view_dir = v / s.view_dist;
        s.color_raw = g.sh.transpose() * sh_basis<double>(g.sh_degree(), s.view_dir);
        s.color = s.color_raw.cwiseMax(0.0);
        s.rot = rotation_from_quaternion(g.rotation);
        s.scale = g.scale();
        s.cov3d = g.covariance();
        const double iz = 1.0 / s.p_cam.z();
        Eigen::Matrix<double, 2, 3> jac;
        jac << cam.intrinsics.fx * iz, 0.0, -cam.intrinsics.fx * s.p_cam.x() * iz * iz, //
            0.0, cam.intrinsics.fy * iz, -cam.intrinsics.fy * s.p_cam.y() * iz * iz;
        s.jw = jac * cam.rotation();
        // Every point with d^T conic d <= cutoff lies within sqrt(cutoff * lambda_max).
        const Mat2<double> &c = proj->covariance;
        const double mid = 0.5 * (c(0, 0) + c(1, 1));
        const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(1, 0);
        const double lambda_max = mid + std::sqrt(std::max(0.0, mid * mid - det));
        const double r = radius_scale * std::sqrt(lambda_max);
        s.x0 = std::max(0, int(std::ceil(s.center.x() - r)));
        s.x1 = std::min(cam.width - 1, int(std::floor(s.center.x() + r)));
        s.y0 = std::max(0, int(std::ceil(s.center.y() - r)));
        s.y1 = std::min(cam.height - 1, int(std::floor(s.center.y() + r)));
        if (s.x0 > s.x1 || s.y0 > s.y1) continue;
        splats.push_back(s);
    }
    std::stable_sort(splats.begin(), splats.end(),
                     [](const Splat &a, const Splat &b) { return a.depth < b.depth; });
    return splats;
}

/// Per-row candidate lists so the inner loop only touches splats whose box covers the row.
std::vector<std::vector<int>> bin_rows(const std::vector<Splat> &splats, int height) {
    std::vector<std::vector<int>> rows(std::size_t(std::max(0, height)));
    for (int k = 0; k < int(splats.size()); ++k)
        for (int y = splats[k].y0; y <= splats[k].y1; ++y) rows[std::size_t(y)].push_back(k);
    return rows;
}

inline bool splat_weight(const Splat &s, int x, int y, double cutoff_sq, Vec2<double> &d,
                         double &gauss) {
    if (x < s.x0 || x > s.x1) return false;
    d = Vec2<double>(double(x), double(y)) - s.center;
    const double m = d.dot(s.conic * d);
    if (m > cutoff_sq) return false;
    gauss = std::exp(-0.5 * m);
    return true;
}

// d R(q_hat) / d q_hat contracted with g_r, q_hat = (w, x, y, z).
Vec4<double> rotation_vjp(const Vec4<double> &q, const Mat3<double> &g) {
    const double w = q[0], x = q[1], y = q[2], z = q[3];
    Vec4<double> out;
    out[0] = 2.0 * (-z * g(0, 1) + y * g(0, 2) + z * g(1, 0) - x * g(1, 2) - y * g(2, 0) + x * g(2, 1));
    out[1] = 2.0 * (y * g(0, 1) + z * g(0, 2) + y * g(1, 0) - 2.0 * x * g(1, 1) - w * g(1, 2) +
                    z * g(2, 0) + w * g(2, 1) - 2.0 * x * g(2, 2));
    out[2] = 2.0 * (-2.0 * y * g(0, 0) + x * g(0, 1) + w * g(0, 2) + x * g(1, 0) + z * g(1, 2) -
                    w * g(2, 0) + z * g(2, 1) - 2.0 * y * g(2, 2));
    out[3] = 2.0 * (-2.0 * z * g(0, 0) - w * g(0, 1) + x * g(0, 2) + w * g(1, 0) - 2.0 * z * g(1, 1) +
                    y * g(1, 2) + x * g(2, 0) + y * g(2, 1));
    return out;
}

} // namespace

RenderGradients RenderGradients::zeros(const GaussianSet &set) {
    RenderGradients g;
    const Eigen::Index n = set.size();
    g.means = RowMatrix3::Zero(n, 3);
    g.rotations = RowMatrix4::Zero(n, 4);
    g.log_scales = RowMatrix3::Zero(n, 3);
    g.opacity_logits = Eigen::VectorXd::Zero(n);
    g.sh = Eigen::MatrixXd::Zero(n, set.sh.cols());
    g.screen_means = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(n, 2);
    g.visible.assign(std::size_t(n), false);
    return g;
}

bool RenderGradients::all_zero() const {
    return means.isZero(0) && rotations.isZero(0) && log_scales.isZero(0) &&
           opacity_logits.isZero(0) && sh.isZero(0);
}

RenderedImage render(const GaussianSet &set, const Camera &cam, const Vec3<double> &background,
                     const RenderOptions &opts) {
    set.validate();
    const auto splats = prepare(set, cam, opts.cutoff_sq);
    const auto rows = bin_rows(splats, cam.height);
    RenderedImage out;
    out.rgb = Image(cam.width, cam.height, 3);
    out.accumulated_opacity = Image(cam.width, cam.height, 1);
    std::vector<long> counts(std::size_t(std::max(1, opts.threads)), 0);
    parallel_chunks(cam.height, opts.threads, [&](int y_begin, int y_end, int worker) {
        long local = 0;
        for (int y = y_begin; y < y_end; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                Vec3<double> color = Vec3<double>::Zero();
                double transmittance = 1.0;
                for (const int k : rows[std::size_t(y)]) {
                    const Splat &s = splats[std::size_t(k)];
                    Vec2<double> d;
                    double gauss;
                    if (!splat_weight(s, x, y, opts.cutoff_sq, d, gauss)) continue;
                    ++local;
                    const double a = s.opacity * gauss;
                    color += transmittance * a * s.color;
                    transmittance *= 1.0 - a;
                }
                color += transmittance * background;
                for (int c = 0; c < 3; ++c) out.rgb.at(x, y, c) = color[c];
                out.accumulated_opacity.at(x, y, 0) = 1.0 - transmittance;
            }
        }
        counts[std::size_t(worker)] = local;
    });
    out.contributions = std::accumulate(counts.begin(), counts.end(), 0L);
    return out;
}

RenderGradients render_backward(const GaussianSet &set, const Camera &cam,
                                const Vec3<double> &background, const Image &upstream,
                                const RenderOptions &opts) {
    set.validate();
    require(upstream.width == cam.width && upstream.height == cam.height && upstream.channels == 3,
            ErrorKind::ShapeMismatch, "upstream gradient must be H x W x 3");
    const auto splats = prepare(set, cam, opts.cutoff_sq);
    const auto rows = bin_rows(splats, cam.height);
    const int workers = std::max(1, std::min(opts.threads, cam.height));
    std::vector<std::vector<SplatGrad>> partial(std::size_t(workers),
                                                std::vector<SplatGrad>(splats.size()));

    parallel_chunks(cam.height, workers, [&](int y_begin, int y_end, int worker) {
        auto &acc = partial[std::size_t(worker)];
        struct Hit {
            int k;
            Vec2<double> d;
            double gauss, a, t;
        };
        std::vector<Hit> hits;
        for (int y = y_begin; y < y_end; ++y) {
            for (int x = 0; x < cam.width; ++x) {
                const Vec3<double> up(upstream.at(x, y, 0), upstream.at(x, y, 1), upstream.at(x, y, 2));
                hits.clear();
                double transmittance = 1.0;
                for (const int k : rows[std::size_t(y)]) {
                    const Splat &s = splats[std::size_t(k)];
                    Hit h;
                    if (!splat_weight(s, x, y, opts.cutoff_sq, h.d, h.gauss)) continue;
                    h.k = k;
                    h.a = s.opacity * h.gauss;
                    h.t = transmittance;
                    hits.push_back(h);
                    transmittance *= 1.0 - h.a;
                }
                // behind holds the color composited from everything after splat i.
                Vec3<double> behind = background;
                for (auto it = hits.rbegin(); it != hits.rend(); ++it) {
                    const Splat &s = splats[std::size_t(it->k)];
                    SplatGrad &g = acc[std::size_t(it->k)];
                    g.touched = true;
                    g.color += it->t * it->a * up;
                    const double g_alpha = it->t * up.dot(s.color - behind);
                    g.opacity += g_alpha * it->gauss;
                    // a = o * exp(-1/2 d^T conic d), d = pixel - center
                    const double g_power = g_alpha * it->a;
                    g.center += g_power * (s.conic * it->d);
                    g.conic += -0.5 * g_power * (it->d * it->d.transpose());
                    behind = it->a * s.color + (1.0 - it->a) * behind;
                }
            }
        }
    });

    RenderGradients out = RenderGradients::zeros(set);
    const auto &k = cam.intrinsics;
    const Mat3<double> w_rot = cam.rotation();
    for (std::size_t si = 0; si < splats.size(); ++si) {
        SplatGrad g;
        for (const auto &p : partial) {
            g.center += p[si].center;
            g.conic += p[si].conic;
            g.opacity += p[si].opacity;
            g.color += p[si].color;
            g.touched = g.touched || p[si].touched;
        }
        if (!g.touched) continue;
        const Splat &s = splats[si];
        const Eigen::Index i = s.index;
        out.visible[std::size_t(i)] = true;
        out.screen_means.row(i) = g.center.transpose();

        // opacity = sigmoid(logit)
        out.opacity_logits[i] = g.opacity * s.opacity * (1.0 - s.opacity);

        // color = max(0, sh^T basis(dir))
        Vec3<double> g_color = g.color;
        for (int c = 0; c < 3; ++c)
            if (s.color_raw[c] < 0.0) g_color[c] = 0.0;
        const auto basis = sh_basis<double>(set.sh_degree, s.view_dir);
        for (int b = 0; b < set.sh_coeffs(); ++b)
            for (int c = 0; c < 3; ++c) out.sh(i, b * 3 + c) = basis[b] * g_color[c];
        Vec3<double> g_mean = Vec3<double>::Zero();
        if (set.sh_degree >= 1) {
            Vec3<double> g_dir = Vec3<double>::Zero();
            for (int c = 0; c < 3; ++c) {
                g_dir.y() += -kShC1 * set.sh(i, 1 * 3 + c) * g_color[c];
                g_dir.z() += kShC1 * set.sh(i, 2 * 3 + c) * g_color[c];
                g_dir.x() += -kShC1 * set.sh(i, 3 * 3 + c) * g_color[c];
            }
            g_mean += (g_dir - s.view_dir * s.view_dir.dot(g_dir)) / s.view_dist;
        }

        // conic = cov2d^-1, cov2d = T cov3d T^T + floor, T = J W
        const Mat2<double> g_cov2d = -s.conic.transpose() * g.conic * s.conic.transpose();
        const Mat3<double> g_cov3d = s.jw.transpose() * g_cov2d * s.jw;
        const Eigen::Matrix<double, 2, 3> g_t =
            g_cov2d * s.jw * s.cov3d.transpose() + g_cov2d.transpose() * s.jw * s.cov3d;
        const Eigen::Matrix<double, 2, 3> g_j = g_t * w_rot.transpose();

        const double x = s.p_cam.x(), y = s.p_cam.y(), z = s.p_cam.z();
        const double iz = 1.0 / z, iz2 = iz * iz, iz3 = iz2 * iz;
        Vec3<double> g_p = Vec3<double>::Zero();
        g_p.x() += g_j(0, 2) * (-k.fx * iz2);
        g_p.y() += g_j(1, 2) * (-k.fy * iz2);
        g_p.z() += g_j(0, 0) * (-k.fx * iz2) + g_j(0, 2) * (2.0 * k.fx * x * iz3) +
                   g_j(1, 1) * (-k.fy * iz2) + g_j(1, 2) * (2.0 * k.fy * y * iz3);
        g_p.x() += g.center.x() * k.fx * iz;
        g_p.y() += g.center.y() * k.fy * iz;
        g_p.z() += -g.center.x() * k.fx * x * iz2 - g.center.y() * k.fy * y * iz2;
        g_mean += w_rot.transpose() * g_p;
        out.means.row(i) = g_mean.transpose();

        // cov3d = M M^T, M = R diag(s)
        const Mat3<double> m = s.rot * s.scale.asDiagonal();
        const Mat3<double> g_m = (g_cov3d + g_cov3d.transpose()) * m;
        for (int a = 0; a < 3; ++a)
            out.log_scales(i, a) = s.rot.col(a).dot(g_m.col(a)) * s.scale[a];
        const Mat3<double> g_r = g_m * s.scale.asDiagonal();
        const Vec4<double> q = set.rotations.row(i).transpose();
        const double qn = q.norm();
        const Vec4<double> q_hat = q / qn;
        const Vec4<double> g_qhat = rotation_vjp(q_hat, g_r);
        out.rotations.row(i) = ((g_qhat - q_hat * q_hat.dot(g_qhat)) / qn).transpose();
    }
    return out;
}

Eigen::ArrayXXi dominant_splat(const GaussianSet &set, const Camera &cam, double min_opacity,
                               const RenderOptions &opts) {
    const auto splats = prepare(set, cam, opts.cutoff_sq);
    const auto rows = bin_rows(splats, cam.height);
    Eigen::ArrayXXi out = Eigen::ArrayXXi::Constant(cam.height, cam.width, -1);
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            double transmittance = 1.0, best = -1.0;
            int best_index = -1;
            for (const int k : rows[std::size_t(y)]) {
                const Splat &s = splats[std::size_t(k)];
                Vec2<double> d;
                double gauss;
                if (!splat_weight(s, x, y, opts.cutoff_sq, d, gauss)) continue;
                const double a = s.opacity * gauss;
                if (transmittance * a > best) {
                    best = transmittance * a;
                    best_index = int(s.index);
                }
                transmittance *= 1.0 - a;
            }
            if (1.0 - transmittance >= min_opacity) out(y, x) = best_index;
        }
    }
    return out;
}

} // namespace slidesplat
