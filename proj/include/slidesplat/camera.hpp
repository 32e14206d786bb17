// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/error.hpp"
#include "slidesplat/gaussian.hpp"

#include <optional>
#include <string>
#include <vector>

namespace slidesplat {

inline constexpr double kNearPlane = 0.01;
inline constexpr double kScreenCovarianceFloor = 0.3; // px^2, added to the 2D covariance diagonal

template <typename Scalar> struct IntrinsicsT {
    Scalar fx = Scalar(1), fy = Scalar(1), cx = Scalar(0), cy = Scalar(0);
};

/// Pinhole camera. `pose` maps world to camera coordinates; pixel centers sit at integer
/// coordinates, x to the right and y down, camera looking along +z.
template <typename Scalar> struct CameraT {
    Mat4<Scalar> pose = Mat4<Scalar>::Identity();
    IntrinsicsT<Scalar> intrinsics;
    int width = 0;
    int height = 0;

    Mat3<Scalar> rotation() const { return pose.template topLeftCorner<3, 3>(); }
    Vec3<Scalar> translation() const { return pose.template topRightCorner<3, 1>(); }
    /// Camera center in world coordinates.
    Vec3<Scalar> center() const { return -(rotation().transpose() * translation()); }

    Vec3<Scalar> to_camera(const Vec3<Scalar> &world) const {
        return rotation() * world + translation();
    }
};

using Intrinsics = IntrinsicsT<double>;
using Camera = CameraT<double>;

/// True when the rotation block is orthonormal with det +1 and the bottom row is exact.
template <typename Scalar> bool is_valid_pose(const Mat4<Scalar> &pose, Scalar tol = Scalar(1e-6)) {
    const Mat3<Scalar> r = pose.template topLeftCorner<3, 3>();
    const bool bottom = pose(3, 0) == Scalar(0) && pose(3, 1) == Scalar(0) &&
                        pose(3, 2) == Scalar(0) && pose(3, 3) == Scalar(1);
    return bottom && (r.transpose() * r - Mat3<Scalar>::Identity()).norm() < tol &&
           std::abs(r.determinant() - Scalar(1)) < tol;
}

/// World-to-camera pose of a camera at `eye` looking at `target`; `up` is the world up hint
/// (image y points against it).
template <typename Scalar>
Mat4<Scalar> look_at(const Vec3<Scalar> &eye, const Vec3<Scalar> &target, const Vec3<Scalar> &up) {
    const Vec3<Scalar> z = (target - eye).normalized();
    const Vec3<Scalar> x = (-up).cross(z).normalized();
    const Vec3<Scalar> y = z.cross(x);
    Mat3<Scalar> r;
    r.row(0) = x.transpose();
    r.row(1) = y.transpose();
    r.row(2) = z.transpose();
    Mat4<Scalar> pose = Mat4<Scalar>::Identity();
    pose.template topLeftCorner<3, 3>() = r;
    pose.template topRightCorner<3, 1>() = -(r * eye);
    return pose;
}

template <typename Scalar> struct ProjectionT {
    Vec2<Scalar> center;
    Mat2<Scalar> covariance; // includes the screen-space floor
    Scalar depth;
};

using Projection = ProjectionT<double>;

/// Pixel position of a world point; nullopt when it lies at or behind the near plane.
template <typename Scalar>
std::optional<Vec2<Scalar>> project_point(const CameraT<Scalar> &cam, const Vec3<Scalar> &world) {
    const Vec3<Scalar> p = cam.to_camera(world);
    if (p.z() <= Scalar(kNearPlane)) return std::nullopt;
    return Vec2<Scalar>(cam.intrinsics.fx * p.x() / p.z() + cam.intrinsics.cx,
                        cam.intrinsics.fy * p.y() / p.z() + cam.intrinsics.cy);
}

/// First-order (EWA) projection of a Gaussian to a 2D splat. Returns nullopt when the mean is
/// at or behind the near plane; such Gaussians must be culled for this view.
template <typename Scalar>
std::optional<ProjectionT<Scalar>> project_gaussian(const GaussianT<Scalar> &g,
                                                     const CameraT<Scalar> &cam) {
    const Vec3<Scalar> p = cam.to_camera(g.mean);
    if (p.z() <= Scalar(kNearPlane)) return std::nullopt;
    const auto &k = cam.intrinsics;
    const Scalar iz = Scalar(1) / p.z();
    Eigen::Matrix<Scalar, 2, 3> jac;
    jac << k.fx * iz, Scalar(0), -k.fx * p.x() * iz * iz, //
        Scalar(0), k.fy * iz, -k.fy * p.y() * iz * iz;
    const Eigen::Matrix<Scalar, 2, 3> t = jac * cam.rotation();
    ProjectionT<Scalar> out;
    out.center = Vec2<Scalar>(k.fx * p.x() * iz + k.cx, k.fy * p.y() * iz + k.cy);
    out.covariance = t * g.covariance() * t.transpose();
    out.covariance(0, 0) += Scalar(kScreenCovarianceFloor);
    out.covariance(1, 1) += Scalar(kScreenCovarianceFloor);
    out.depth = p.z();
    return out;
}

/// A set of calibrated cameras with unique string ids.
struct CameraRig {
    std::vector<Camera> cameras;
    std::vector<std::string> ids;

    std::size_t size() const { return cameras.size(); }
    /// Throws ConfigError when empty, ids mismatch or duplicate, or a pose is not rigid.
    void validate() const;
    std::size_t index_of(const std::string &id) const;
};

} // namespace slidesplat
