// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace slidesplat {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Mat2 = Eigen::Matrix<Scalar, 2, 2>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar> using ShCoeffs = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

inline constexpr double kShC0 = 0.28209479177387814;
inline constexpr double kShC1 = 0.4886025119029199;

/// Number of SH coefficients per color channel for a given degree (0 or 1).
constexpr int sh_coeff_count(int degree) { return (degree + 1) * (degree + 1); }

template <typename Scalar> Scalar sigmoid(Scalar x) {
    using std::exp;
    return Scalar(1) / (Scalar(1) + exp(-x));
}

template <typename Scalar> Scalar logit(Scalar p) {
    using std::log;
    return log(p / (Scalar(1) - p));
}

/// Rotation matrix of the quaternion (w, x, y, z). The quaternion is normalized first, so any
/// non-zero 4-vector is accepted.
template <typename Scalar> Mat3<Scalar> rotation_from_quaternion(const Vec4<Scalar> &q_in) {
    const Vec4<Scalar> q = q_in / q_in.norm();
    const Scalar w = q[0], x = q[1], y = q[2], z = q[3];
    Mat3<Scalar> r;
    r << Scalar(1) - Scalar(2) * (y * y + z * z), Scalar(2) * (x * y - w * z),
        Scalar(2) * (x * z + w * y), //
        Scalar(2) * (x * y + w * z), Scalar(1) - Scalar(2) * (x * x + z * z),
        Scalar(2) * (y * z - w * x), //
        Scalar(2) * (x * z - w * y), Scalar(2) * (y * z + w * x),
        Scalar(1) - Scalar(2) * (x * x + y * y);
    return r;
}

/// Sigma = R S S^T R^T for a unit quaternion and positive per-axis extents.
template <typename Scalar>
Mat3<Scalar> build_covariance(const Vec4<Scalar> &rotation, const Vec3<Scalar> &scale) {
    const Mat3<Scalar> m = rotation_from_quaternion(rotation) * scale.asDiagonal();
    return m * m.transpose();
}

/// One 3D Gaussian in stored (optimizer) parameterization.
template <typename Scalar> struct GaussianT {
    Vec3<Scalar> mean = Vec3<Scalar>::Zero();
    Vec4<Scalar> rotation = Vec4<Scalar>(1, 0, 0, 0); // (w, x, y, z)
    Vec3<Scalar> log_scale = Vec3<Scalar>::Zero();
    Scalar opacity_logit = Scalar(0);
    ShCoeffs<Scalar> sh = ShCoeffs<Scalar>::Zero(1, 3); // K x 3, row k = basis k

    Vec3<Scalar> scale() const { return log_scale.array().exp().matrix(); }
    Scalar opacity() const { return sigmoid(opacity_logit); }
    int sh_degree() const { return sh.rows() == 1 ? 0 : 1; }
    Mat3<Scalar> covariance() const { return build_covariance<Scalar>(rotation, scale()); }
};

using Gaussian = GaussianT<double>;

/// Unnormalized Gaussian falloff exp(-1/2 d^T Sigma^-1 d) with d = x - mean.
template <typename Scalar>
Scalar evaluate_gaussian(const GaussianT<Scalar> &g, const Vec3<Scalar> &x) {
    using std::exp;
    const Mat3<Scalar> r = rotation_from_quaternion(g.rotation);
    const Vec3<Scalar> local =
        (r.transpose() * (x - g.mean)).cwiseQuotient(g.scale());
    return exp(Scalar(-0.5) * local.squaredNorm());
}

/// Real SH basis values for degree 0 or 1. Sign convention matches the common 3DGS layout.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sh_basis(int degree, const Vec3<Scalar> &dir) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> b(sh_coeff_count(degree));
    b[0] = Scalar(kShC0);
    if (degree >= 1) {
        b[1] = -Scalar(kShC1) * dir.y();
        b[2] = Scalar(kShC1) * dir.z();
        b[3] = -Scalar(kShC1) * dir.x();
    }
    return b;
}

/// View-dependent color, clamped below at zero.
template <typename Scalar>
Vec3<Scalar> evaluate_color(const GaussianT<Scalar> &g, const Vec3<Scalar> &view_dir) {
    const auto basis = sh_basis<Scalar>(g.sh_degree(), view_dir);
    Vec3<Scalar> rgb = g.sh.transpose() * basis;
    return rgb.cwiseMax(Scalar(0));
}

/// Stored DC coefficient that reproduces a view-independent color.
template <typename Scalar> Scalar sh_dc_from_color(Scalar c) { return c / Scalar(kShC0); }

} // namespace slidesplat
