// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/camera.hpp"
#include "slidesplat/error.hpp"

#include <cmath>
#include <random>

namespace slidesplat {

/// Rotations closer to pi than this are rejected by se3_log.
inline constexpr double kLogGuardBand = 1e-3;

template <typename Scalar> Mat3<Scalar> hat(const Vec3<Scalar> &w) {
    Mat3<Scalar> m;
    m << Scalar(0), -w.z(), w.y(), //
        w.z(), Scalar(0), -w.x(),  //
        -w.y(), w.x(), Scalar(0);
    return m;
}

template <typename Scalar> Vec3<Scalar> vee(const Mat3<Scalar> &m) {
    return Vec3<Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

/// Matrix logarithm of a rigid transform in closed form (angle-axis plus V^-1), returned as the
/// 4x4 Lie-algebra matrix [hat(w) rho; 0 0]. Throws NearPiRotation inside the guard band.
template <typename Scalar> Mat4<Scalar> se3_log(const Mat4<Scalar> &pose) {
    using std::atan2;
    using std::cos;
    using std::sin;
    const Mat3<Scalar> r = pose.template topLeftCorner<3, 3>();
    const Vec3<Scalar> t = pose.template topRightCorner<3, 1>();
    const Vec3<Scalar> axis_sin = Scalar(0.5) * vee<Scalar>(r - r.transpose());
    const Scalar s = axis_sin.norm();
    const Scalar c = Scalar(0.5) * (r.trace() - Scalar(1));
    const Scalar theta = atan2(s, c);
    if (theta > Scalar(M_PI - kLogGuardBand))
        throw Error(ErrorKind::NearPiRotation, "rotation angle too close to pi for the matrix log");

    Vec3<Scalar> omega;
    Scalar coef; // (1 - theta sin / (2 (1 - cos))) / theta^2
    const Scalar theta2 = theta * theta;
    if (theta < Scalar(1e-4))
        omega = axis_sin * (Scalar(1) + theta2 / Scalar(6));
    else
        omega = axis_sin * (theta / s);
    // The closed form cancels badly for small angles; the series is exact to double precision
    // below 1e-2.
    if (theta < Scalar(1e-2)) {
        coef = Scalar(1) / Scalar(12) +
               theta2 * (Scalar(1) / Scalar(720) + theta2 * (Scalar(1) / Scalar(30240) + theta2 / Scalar(1209600)));
    } else {
        const Scalar half_sin = sin(Scalar(0.5) * theta);
        coef = (Scalar(1) - theta * sin(theta) / (Scalar(4) * half_sin * half_sin)) / theta2;
    }
    const Mat3<Scalar> w = hat<Scalar>(omega);
    const Mat3<Scalar> v_inv = Mat3<Scalar>::Identity() - Scalar(0.5) * w + coef * w * w;
    Mat4<Scalar> out = Mat4<Scalar>::Zero();
    out.template topLeftCorner<3, 3>() = w;
    out.template topRightCorner<3, 1>() = v_inv * t;
    return out;
}

/// Matrix exponential of a 4x4 se(3) element (only the rotation generator and translation
/// column are read).
template <typename Scalar> Mat4<Scalar> se3_exp(const Mat4<Scalar> &xi) {
    using std::cos;
    using std::sin;
    const Vec3<Scalar> omega = vee<Scalar>(xi.template topLeftCorner<3, 3>());
    const Vec3<Scalar> rho = xi.template topRightCorner<3, 1>();
    const Scalar theta = omega.norm();
    const Scalar theta2 = theta * theta;
    Scalar a, b, c; // sin/theta, (1-cos)/theta^2, (theta - sin)/theta^3
    if (theta < Scalar(1e-2)) {
        a = Scalar(1) - theta2 * (Scalar(1) / Scalar(6) - theta2 * (Scalar(1) / Scalar(120) - theta2 / Scalar(5040)));
        b = Scalar(0.5) - theta2 * (Scalar(1) / Scalar(24) - theta2 * (Scalar(1) / Scalar(720) - theta2 / Scalar(40320)));
        c = Scalar(1) / Scalar(6) -
            theta2 * (Scalar(1) / Scalar(120) - theta2 * (Scalar(1) / Scalar(5040) - theta2 / Scalar(362880)));
    } else {
        const Scalar half_sin = sin(Scalar(0.5) * theta);
        a = sin(theta) / theta;
        b = Scalar(2) * half_sin * half_sin / theta2;
        c = (theta - sin(theta)) / (theta2 * theta);
    }
    const Mat3<Scalar> w = hat<Scalar>(omega);
    const Mat3<Scalar> i = Mat3<Scalar>::Identity();
    Mat4<Scalar> out = Mat4<Scalar>::Identity();
    out.template topLeftCorner<3, 3>() = i + a * w + b * w * w;
    out.template topRightCorner<3, 1>() = (i + b * w + c * w * w) * rho;
    return out;
}

template <typename Scalar> Mat4<Scalar> rigid_inverse(const Mat4<Scalar> &pose) {
    const Mat3<Scalar> rt = pose.template topLeftCorner<3, 3>().transpose();
    Mat4<Scalar> out = Mat4<Scalar>::Identity();
    out.template topLeftCorner<3, 3>() = rt;
    out.template topRightCorner<3, 1>() = -(rt * pose.template topRightCorner<3, 1>());
    return out;
}

/// exp(sum_j beta_j log(P_ref^-1 P_j)) anchored at the reference pose P_ref = poses[0], so the
/// guard band applies to rotations relative to the reference.
Mat4<double> interpolate_poses(const std::vector<Mat4<double>> &poses, const Eigen::VectorXd &beta);

/// Draws novel cameras by rigidly blending the rig's poses with simplex weights.
class PoseSampler {
public:
    explicit PoseSampler(CameraRig rig);

    std::size_t dimension() const { return rig_.size(); }
    /// Uniform simplex weights from normalized exponential draws.
    Eigen::VectorXd sample_weights(std::mt19937_64 &rng) const;
    Camera camera_for(const Eigen::VectorXd &beta) const;
    /// Samples weights and re-draws (up to a bounded number of attempts) on NearPiRotation.
    Camera sample(std::mt19937_64 &rng) const;

private:
    CameraRig rig_;
    std::vector<Mat4<double>> poses_;
};

} // namespace slidesplat
