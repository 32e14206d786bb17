// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/synthetic.hpp"

#include "slidesplat/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace slidesplat {

const char *to_string(MotionType m) {
    switch (m) {
    case MotionType::None: return "none";
    case MotionType::Translation: return "translation";
    case MotionType::Burst: return "burst";
    }
    return "?";
}

MotionType motion_type_from_string(const std::string &name) {
    if (name == "none") return MotionType::None;
    if (name == "translation") return MotionType::Translation;
    if (name == "burst") return MotionType::Burst;
    throw Error(ErrorKind::ConfigError, "unknown motion type '" + name + "'");
}

void SyntheticSpec::validate() const {
    require(views >= 1 && width >= 4 && height >= 4 && frames >= 1, ErrorKind::ConfigError,
            "synthetic views, resolution and frame count");
    require(gaussians >= 1 && moving >= 0 && moving <= gaussians, ErrorKind::ConfigError,
            "synthetic Gaussian counts");
    require(camera_distance > 0.0 && focal > 0.0, ErrorKind::ConfigError, "synthetic camera geometry");
    require(seed_points_per_gaussian >= 1 && seed_noise >= 0.0, ErrorKind::ConfigError, "synthetic seed points");
    require(burst_start <= burst_end, ErrorKind::ConfigError, "burst range");
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Camera orbit_camera(const SyntheticSpec &spec, double azimuth_deg, double elevation_deg) {
    const double az = azimuth_deg * kDeg, el = elevation_deg * kDeg;
    // World y points down, so positive elevation raises the eye along -y.
    const Vec3<double> eye(spec.camera_distance * std::sin(az) * std::cos(el),
                           -spec.camera_distance * std::sin(el),
                           -spec.camera_distance * std::cos(az) * std::cos(el));
    Camera cam;
    cam.pose = look_at<double>(eye, Vec3<double>::Zero(), Vec3<double>(0, -1, 0));
    cam.intrinsics = {spec.focal, spec.focal, 0.5 * (spec.width - 1), 0.5 * (spec.height - 1)};
    cam.width = spec.width;
    cam.height = spec.height;
    return cam;
}

// Offset of a moving Gaussian at `frame` in units of its velocity.
double motion_steps(const SyntheticSpec &spec, int frame) {
    switch (spec.motion) {
    case MotionType::None: return 0.0;
    case MotionType::Translation: return double(frame);
    case MotionType::Burst: return double(std::clamp(frame, spec.burst_start, spec.burst_end) - spec.burst_start);
    }
    return 0.0;
}

} // namespace

CameraRig synthetic_rig(const SyntheticSpec &spec) {
    CameraRig rig;
    for (int v = 0; v < spec.views; ++v) {
        const double az = spec.views == 1 ? 0.0 : -30.0 + 60.0 * v / double(spec.views - 1);
        const double el = v % 2 == 0 ? 10.0 : -10.0;
        rig.cameras.push_back(orbit_camera(spec, az, el));
        rig.ids.push_back("cam" + std::to_string(v));
    }
    return rig;
}

Camera synthetic_held_out_camera(const SyntheticSpec &spec) { return orbit_camera(spec, 0.0, 0.0); }

FlowField analytic_flow(const GaussianSet &a, const GaussianSet &b, const Camera &cam) {
    require(a.size() == b.size(), ErrorKind::ShapeMismatch, "trajectory frames differ in size");
    const Eigen::ArrayXXi owner = dominant_splat(a, cam);
    FlowField flow(cam.width, cam.height, 2);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            const int k = owner(y, x);
            if (k < 0) continue;
            const auto pa = project_point(cam, Vec3<double>(a.means.row(k).transpose()));
            const auto pb = project_point(cam, Vec3<double>(b.means.row(k).transpose()));
            if (!pa || !pb) continue;
            const Vec2<double> d = *pb - *pa;
            flow.at(x, y, 0) = d.x();
            flow.at(x, y, 1) = d.y();
        }
    return flow;
}

SyntheticScene generate_synthetic_scene(const SyntheticSpec &spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    SyntheticScene scene;
    scene.spec = spec;

    GaussianSet base(spec.gaussians, 0, 1);
    std::vector<Vec3<double>> velocity(std::size_t(spec.gaussians), Vec3<double>::Zero());
    scene.moving.assign(std::size_t(spec.gaussians), false);
    for (int i = 0; i < spec.gaussians; ++i) {
        base.means.row(i) << 0.7 * u(rng), 0.7 * u(rng), 0.4 * u(rng);
        base.rotations.row(i) << 1.0, 0.3 * u(rng), 0.3 * u(rng), 0.3 * u(rng);
        base.log_scales.row(i) << std::log(0.18 + 0.06 * u(rng)), std::log(0.14 + 0.04 * u(rng)),
            std::log(0.12 + 0.04 * u(rng));
        base.opacity_logits[i] = logit(0.9 + 0.05 * u(rng));
        for (int c = 0; c < 3; ++c) base.sh(i, c) = sh_dc_from_color(0.55 + 0.4 * u(rng));
        if (i < spec.moving) {
            scene.moving[std::size_t(i)] = true;
            const double angle = std::numbers::pi * u(rng);
            velocity[std::size_t(i)] = spec.speed * Vec3<double>(std::cos(angle), std::sin(angle), 0.0);
        }
    }
    base.normalize_rotations();

    for (int f = 0; f < spec.frames; ++f) {
        GaussianSet g = base;
        const double steps = motion_steps(spec, f);
        for (int i = 0; i < spec.gaussians; ++i)
            g.means.row(i) += steps * velocity[std::size_t(i)].transpose();
        scene.trajectory.push_back(std::move(g));
    }

    scene.train.rig = synthetic_rig(spec);
    scene.held_out.rig.cameras = {synthetic_held_out_camera(spec)};
    scene.held_out.rig.ids = {"held_out"};
    auto render_all = [&](MultiViewSequence &seq) {
        seq.images.assign(seq.rig.size(), {});
        for (std::size_t v = 0; v < seq.rig.size(); ++v)
            for (const GaussianSet &g : scene.trajectory)
                seq.images[v].push_back(render(g, seq.rig.cameras[v], scene.background).rgb);
    };
    render_all(scene.train);
    render_all(scene.held_out);

    scene.flows.assign(scene.train.rig.size(), {});
    for (std::size_t v = 0; v < scene.train.rig.size(); ++v)
        for (int f = 0; f + 1 < spec.frames; ++f)
            scene.flows[v].push_back(analytic_flow(scene.trajectory[std::size_t(f)],
                                                   scene.trajectory[std::size_t(f + 1)],
                                                   scene.train.rig.cameras[v]));

    std::normal_distribution<double> normal(0.0, 1.0);
    for (const GaussianSet &g : scene.trajectory) {
        PointCloud cloud;
        const Eigen::Index n = g.size() * spec.seed_points_per_gaussian;
        cloud.positions.resize(n, 3);
        cloud.colors.resize(n, 3);
        Eigen::Index row = 0;
        for (Eigen::Index i = 0; i < g.size(); ++i) {
            const Gaussian gi = g.gaussian(i);
            const Mat3<double> r = rotation_from_quaternion(gi.rotation);
            for (int k = 0; k < spec.seed_points_per_gaussian; ++k, ++row) {
                const Vec3<double> local(normal(rng), normal(rng), normal(rng));
                const Vec3<double> offset = 0.5 * (r * (gi.scale().array() * local.array()).matrix());
                const Vec3<double> noise(normal(rng), normal(rng), normal(rng));
                cloud.positions.row(row) = (gi.mean + offset + spec.seed_noise * noise).transpose();
                cloud.colors.row(row) = (gi.sh.row(0) * kShC0).cwiseMax(0.0).cwiseMin(1.0);
            }
        }
        scene.seeds.push_back(std::move(cloud));
    }
    return scene;
}

} // namespace slidesplat
