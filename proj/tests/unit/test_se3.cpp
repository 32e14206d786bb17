// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/se3.hpp"
#include "slidesplat/synthetic.hpp"

#include <Eigen/Geometry>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include <random>

using namespace slidesplat;

namespace {

Mat4<double> random_pose(std::mt19937_64 &rng, double max_angle) {
    std::uniform_real_distribution<double> angle(0.0, max_angle), u(-1.0, 1.0);
    std::normal_distribution<double> n(0.0, 1.0);
    const Vec3<double> axis = Vec3<double>(n(rng), n(rng), n(rng)).normalized();
    Mat4<double> p = Mat4<double>::Identity();
    p.topLeftCorner<3, 3>() = Eigen::AngleAxisd(angle(rng), axis).toRotationMatrix();
    p.topRightCorner<3, 1>() = 3.0 * Vec3<double>(u(rng), u(rng), u(rng));
    return p;
}

} // namespace

TEST(Se3, ExpOfLogRoundTripsTenThousandPoses) {
    std::mt19937_64 rng(1);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Mat4<double> p = random_pose(rng, M_PI - kLogGuardBand);
        worst = std::max(worst, (se3_exp<double>(se3_log<double>(p)) - p).norm());
    }
    EXPECT_LT(worst, 1e-8);
}

TEST(Se3, LogMatchesGeneralMatrixLogarithm) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const Mat4<double> p = random_pose(rng, 3.0);
        const Eigen::Matrix4d reference = p.log();
        EXPECT_LT((se3_log<double>(p) - reference).norm(), 1e-8) << "pose " << i;
    }
}

TEST(Se3, ExpMatchesGeneralMatrixExponential) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
        Mat4<double> xi = Mat4<double>::Zero();
        xi.topLeftCorner<3, 3>() = hat<double>(Vec3<double>(u(rng), u(rng), u(rng)));
        xi.topRightCorner<3, 1>() = Vec3<double>(u(rng), u(rng), u(rng));
        const Eigen::Matrix4d reference = xi.exp();
        EXPECT_LT((se3_exp<double>(xi) - reference).norm(), 1e-10);
    }
}

TEST(Se3, SmallAngleBranchIsContinuous) {
    for (double theta : {0.0, 1e-9, 5e-5, 1e-4, 2e-4}) {
        Mat4<double> p = Mat4<double>::Identity();
        p.topLeftCorner<3, 3>() = Eigen::AngleAxisd(theta, Vec3<double>(0, 0, 1)).toRotationMatrix();
        p.topRightCorner<3, 1>() = Vec3<double>(0.3, -0.2, 1.0);
        const Mat4<double> l = se3_log<double>(p);
        EXPECT_NEAR(l(1, 0), theta, 1e-12);
        EXPECT_LT((se3_exp<double>(l) - p).norm(), 1e-12);
    }
}

TEST(Se3, NearPiRotationIsRejected) {
    Mat4<double> p = Mat4<double>::Identity();
    p.topLeftCorner<3, 3>() = Eigen::AngleAxisd(M_PI - 1e-4, Vec3<double>(1, 0, 0)).toRotationMatrix();
    try {
        se3_log<double>(p);
        FAIL() << "expected NearPiRotation";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::NearPiRotation);
    }
}

TEST(Se3, OneHotWeightsReproduceEveryRigPose) {
    const CameraRig rig = synthetic_rig(SyntheticSpec{});
    std::vector<Mat4<double>> poses;
    for (const auto &c : rig.cameras) poses.push_back(c.pose);
    for (std::size_t j = 0; j < poses.size(); ++j) {
        const Eigen::VectorXd beta = Eigen::VectorXd::Unit(Eigen::Index(poses.size()), Eigen::Index(j));
        EXPECT_LT((interpolate_poses(poses, beta) - poses[j]).norm(), 1e-8);
    }
}

TEST(Se3, PureTranslationInterpolationIsConvex) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    std::exponential_distribution<double> e(1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Mat4<double>> poses(4, Mat4<double>::Identity());
        Eigen::VectorXd beta(4);
        Vec3<double> expected = Vec3<double>::Zero();
        for (int j = 0; j < 4; ++j) beta[j] = e(rng);
        beta /= beta.sum();
        for (int j = 0; j < 4; ++j) {
            poses[std::size_t(j)].topRightCorner<3, 1>() = Vec3<double>(u(rng), u(rng), u(rng));
            expected += beta[j] * poses[std::size_t(j)].topRightCorner<3, 1>();
        }
        const Mat4<double> p = interpolate_poses(poses, beta);
        EXPECT_LT((p.topRightCorner<3, 1>() - expected).norm(), 1e-12);
        EXPECT_LT((p.topLeftCorner<3, 3>() - Mat3<double>::Identity()).norm(), 1e-15);
    }
}

TEST(Se3, TwoPoseMidpointHalvesRelativeMotion) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const Mat4<double> a = random_pose(rng, 2.5), b = random_pose(rng, 2.5);
        const Mat4<double> rel = rigid_inverse(a) * b;
        if (std::acos(std::clamp(0.5 * (rel.topLeftCorner<3, 3>().trace() - 1.0), -1.0, 1.0)) > 3.0) continue;
        const Mat4<double> mid = interpolate_poses({a, b}, Eigen::Vector2d(0.5, 0.5));
        // Applying the half step twice must land on b.
        const Mat4<double> half = rigid_inverse(a) * mid;
        EXPECT_LT((a * half * half - b).norm(), 1e-9);
    }
}

TEST(Se3, SampledWeightsLieOnTheSimplex) {
    const PoseSampler sampler(synthetic_rig(SyntheticSpec{}));
    std::mt19937_64 rng(6);
    for (int i = 0; i < 1000; ++i) {
        const Eigen::VectorXd beta = sampler.sample_weights(rng);
        EXPECT_GE(beta.minCoeff(), 0.0);
        EXPECT_NEAR(beta.sum(), 1.0, 1e-9);
    }
}

TEST(Se3, SampledNovelPosesAreRigid) {
    const PoseSampler sampler(synthetic_rig(SyntheticSpec{}));
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const Camera cam = sampler.sample(rng);
        const Mat3<double> r = cam.rotation();
        worst = std::max(worst, (r.transpose() * r - Mat3<double>::Identity()).norm());
        ASSERT_GT(r.determinant(), 0.0);
        ASSERT_TRUE(is_valid_pose(cam.pose));
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Se3, HatAndVeeAreInverse) {
    const Vec3<double> w(0.3, -1.2, 2.5);
    EXPECT_EQ(vee<double>(hat<double>(w)), w);
    EXPECT_LT((hat<double>(w) + hat<double>(w).transpose()).norm(), 1e-15);
}
