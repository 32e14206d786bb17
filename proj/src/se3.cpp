// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/se3.hpp"

namespace slidesplat {

Mat4<double> interpolate_poses(const std::vector<Mat4<double>> &poses, const Eigen::VectorXd &beta) {
    require(!poses.empty() && Eigen::Index(poses.size()) == beta.size(), ErrorKind::ShapeMismatch,
            "one weight per pose required");
    const Mat4<double> ref = poses.front();
    const Mat4<double> ref_inv = rigid_inverse(ref);
    Mat4<double> acc = Mat4<double>::Zero();
    for (std::size_t j = 0; j < poses.size(); ++j) {
        if (beta[Eigen::Index(j)] == 0.0) continue;
        acc += beta[Eigen::Index(j)] * se3_log<double>(ref_inv * poses[j]);
    }
    Mat4<double> out = ref * se3_exp<double>(acc);
    out.row(3) << 0.0, 0.0, 0.0, 1.0;
    return out;
}

PoseSampler::PoseSampler(CameraRig rig) : rig_(std::move(rig)) {
    rig_.validate();
    for (const auto &c : rig_.cameras) poses_.push_back(c.pose);
}

Eigen::VectorXd PoseSampler::sample_weights(std::mt19937_64 &rng) const {
    std::exponential_distribution<double> draw(1.0);
    Eigen::VectorXd beta(Eigen::Index(poses_.size()));
    for (Eigen::Index j = 0; j < beta.size(); ++j) beta[j] = draw(rng);
    return beta / beta.sum();
}

Camera PoseSampler::camera_for(const Eigen::VectorXd &beta) const {
    Camera cam = rig_.cameras.front();
    cam.pose = interpolate_poses(poses_, beta);
    return cam;
}

Camera PoseSampler::sample(std::mt19937_64 &rng) const {
    constexpr int kAttempts = 16;
    for (int attempt = 1;; ++attempt) {
        try {
            return camera_for(sample_weights(rng));
        } catch (const Error &e) {
            if (e.kind() != ErrorKind::NearPiRotation || attempt == kAttempts) throw;
        }
    }
}

} // namespace slidesplat
