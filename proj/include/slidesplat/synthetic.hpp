// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/trainer.hpp"
#include "slidesplat/window_sampler.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace slidesplat {

enum class MotionType { None, Translation, Burst };

const char *to_string(MotionType m);
MotionType motion_type_from_string(const std::string &name);

struct SyntheticSpec {
    int views = 4;
    int width = 32;
    int height = 32;
    int frames = 8;
    int gaussians = 6;
    int moving = 2;
    MotionType motion = MotionType::Translation;
    /// World units per frame for translation; per burst transition for bursts.
    double speed = 0.08;
    int burst_start = 3; // bursts move only between burst_start and burst_end
    int burst_end = 5;
    double camera_distance = 4.0;
    double focal = 32.0;
    int seed_points_per_gaussian = 4;
    double seed_noise = 0.02;
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticScene {
    SyntheticSpec spec;
    MultiViewSequence train; // training rig and images
    MultiViewSequence held_out; // one camera between the training views
    std::vector<GaussianSet> trajectory; // ground truth per frame
    std::vector<bool> moving;            // per ground-truth Gaussian
    std::vector<std::vector<FlowField>> flows; // [view][transition], training rig
    std::vector<PointCloud> seeds;              // per frame, sampled around the ground truth
    Vec3<double> background = Vec3<double>::Zero();
};

/// Training cameras at azimuths of -30, -10, 10, 30 degrees (more are spread evenly) with
/// alternating +-10 degree elevation, all facing the origin; the held-out camera sits at
/// azimuth 0, elevation 0.
CameraRig synthetic_rig(const SyntheticSpec &spec);
Camera synthetic_held_out_camera(const SyntheticSpec &spec);

/// Deterministic for a fixed spec (seed included).
SyntheticScene generate_synthetic_scene(const SyntheticSpec &spec);

/// Flow from frame `a` to `b` of a known trajectory: each pixel takes the image-plane motion of
/// the splat that dominates it, zero where the background dominates or the splat is static.
FlowField analytic_flow(const GaussianSet &a, const GaussianSet &b, const Camera &cam);

} // namespace slidesplat
