// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/dynamic_mlp.hpp"
#include "slidesplat/error.hpp"

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace slidesplat;
using namespace slidesplat::oracles;

TEST(Encoder, LayoutAndDimensions) {
    FrequencyEncoder pos{6, 3}, time{6, 1};
    EXPECT_EQ(pos.output_dim(), 39);
    EXPECT_EQ(time.output_dim(), 13);
    const Eigen::VectorXd x = Eigen::Vector3d(0.1, -0.4, 0.25);
    const Eigen::VectorXd e = pos.encode(x);
    EXPECT_EQ(e.head(3), x);
    for (int k = 0; k < 6; ++k)
        for (int d = 0; d < 3; ++d) {
            const double arg = std::pow(2.0, k) * M_PI * x[d];
            EXPECT_NEAR(e[3 + 6 * k + d], std::sin(arg), 1e-12);
            EXPECT_NEAR(e[6 + 6 * k + d], std::cos(arg), 1e-12);
        }
}

TEST(Encoder, BackwardMatchesFiniteDifferences) {
    FrequencyEncoder pos{6, 3};
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-1, 1);
    Eigen::MatrixXd x(4, 3), w(4, 39);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = u(rng);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
    const Eigen::MatrixXd g = pos.backward(x, w);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::MatrixXd p = x, m = x;
        p.data()[i] += 1e-6;
        m.data()[i] -= 1e-6;
        const double numeric = ((pos.encode(p).array() - pos.encode(m).array()) * w.array()).sum() / 2e-6;
        EXPECT_LT(fixtures::relative_error(g.data()[i], numeric), 1e-6);
    }
}

TEST(DynamicMlp, ArchitectureShapes) {
    std::mt19937_64 rng(1);
    DynamicMlp mlp(MlpConfig{}, rng);
    ASSERT_EQ(mlp.layers.size(), 5u);
    EXPECT_EQ(mlp.encoded_dim(), 52);
    EXPECT_EQ(mlp.layers[0].in_features(), 52);
    EXPECT_EQ(mlp.layers[1].in_features(), 16);
    EXPECT_EQ(mlp.layers[2].in_features(), 68);
    EXPECT_EQ(mlp.layers[3].in_features(), 68);
    EXPECT_EQ(mlp.layers[4].in_features(), 16);
    EXPECT_EQ(mlp.layers[4].out_features(), 10);
    for (const auto &l : mlp.layers) EXPECT_EQ(l.modes(), 2);
    const double bound = 1.0 / std::sqrt(52.0);
    EXPECT_LE(mlp.layers[0].weights[0].cwiseAbs().maxCoeff(), bound);
    EXPECT_EQ(mlp.layers[0].biases.cwiseAbs().maxCoeff(), 0.0);
}

TEST(DynamicMlp, ZeroHeadGivesIdentityDeformation) {
    std::mt19937_64 rng(3);
    DynamicMlp mlp(MlpConfig{}, rng);
    GaussianSet set = fixtures::random_scene(7, 1, 2, rng);
    const Deformation d = deform(mlp, set.means, 0.4, set.alpha);
    EXPECT_EQ(as_matrix(d).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DynamicMlp, ZeroAlphaRowGivesZeroDeformation) {
    std::mt19937_64 rng(4);
    DynamicMlp mlp = random_mlp(2, rng);
    GaussianSet set = fixtures::random_scene(4, 1, 2, rng);
    set.alpha.row(2).setZero();
    const Eigen::MatrixXd d = as_matrix(deform(mlp, set.means, 0.7, set.alpha));
    EXPECT_EQ(d.row(2).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT(d.row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST(DynamicMlp, BatchedMatchesNaivePerRow) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int modes = 1; modes <= 3; ++modes) {
        DynamicMlp mlp = random_mlp(modes, rng);
        for (int n : {1, 5, 32}) {
            RowMatrix3 pos(n, 3);
            Eigen::MatrixXd alpha(n, modes);
            for (Eigen::Index i = 0; i < pos.size(); ++i) pos.data()[i] = u(rng);
            for (Eigen::Index i = 0; i < alpha.size(); ++i) alpha.data()[i] = u(rng);
            const double t = 0.5 * (u(rng) + 1.0);
            const Eigen::MatrixXd batched = as_matrix(deform(mlp, pos, t, alpha));
            EXPECT_LT((batched - naive_network(mlp, pos, t, alpha)).cwiseAbs().maxCoeff(), 1e-6);
        }
    }
}

TEST(DynamicMlp, OneHotAlphaSelectsSingleWeightSet) {
    std::mt19937_64 rng(6);
    DynamicMlp mlp = random_mlp(3, rng);
    RowMatrix3 pos(6, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (Eigen::Index i = 0; i < pos.size(); ++i) pos.data()[i] = u(rng);
    for (int m = 0; m < 3; ++m) {
        // Plain network holding only weight set m.
        DynamicMlp plain = mlp;
        for (auto &l : plain.layers) {
            l.weights = {l.weights[std::size_t(m)]};
            const Eigen::RowVectorXd bias = l.biases.row(m);
            l.biases = bias;
        }
        plain.config.modes = 1;
        Eigen::MatrixXd one_hot = Eigen::MatrixXd::Zero(6, 3);
        one_hot.col(m).setOnes();
        const Eigen::MatrixXd a = as_matrix(deform(mlp, pos, 0.3, one_hot));
        const Eigen::MatrixXd b = as_matrix(deform(plain, pos, 0.3, Eigen::MatrixXd::Ones(6, 1)));
        EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(DynamicMlp, ParameterPackingRoundTrip) {
    std::mt19937_64 rng(7);
    DynamicMlp mlp = random_mlp(2, rng);
    const Eigen::VectorXd p = mlp.parameters();
    EXPECT_EQ(p.size(), mlp.parameter_count());
    DynamicMlp other(MlpConfig{}, rng);
    other.set_parameters(p);
    EXPECT_EQ(other.checksum(), mlp.checksum());
    EXPECT_THROW(other.set_parameters(Eigen::VectorXd::Zero(3)), Error);
}

TEST(DynamicMlp, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 rng(8);
    DynamicMlp mlp = random_mlp(2, rng);
    GaussianSet set = fixtures::random_scene(5, 1, 2, rng);
    set.means *= 0.2;
    const double t = 0.6;
    Deformation up;
    {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        up = Deformation::zeros(5);
        for (Eigen::Index i = 0; i < 15; ++i) up.dx.data()[i] = u(rng), up.ds.data()[i] = u(rng);
        for (Eigen::Index i = 0; i < 20; ++i) up.dr.data()[i] = u(rng);
    }
    const Eigen::MatrixXd w = as_matrix(up);
    auto objective = [&](const DynamicMlp &m, const RowMatrix3 &pos, const Eigen::MatrixXd &alpha) {
        return (as_matrix(deform(m, pos, t, alpha)).array() * w.array()).sum();
    };
    DeformCache cache;
    deform(mlp, set.means, t, set.alpha, &cache);
    const DeformGradients g = deform_backward(mlp, cache, up);
    const Eigen::VectorXd p = mlp.parameters();
    const double h = 1e-6;
    int worst_index = -1;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < p.size(); i += 3) {
        DynamicMlp a = mlp, b = mlp;
        Eigen::VectorXd pp = p, pm = p;
        pp[i] += h;
        pm[i] -= h;
        a.set_parameters(pp);
        b.set_parameters(pm);
        const double numeric = (objective(a, set.means, set.alpha) - objective(b, set.means, set.alpha)) / (2 * h);
        const double err = fixtures::relative_error(g.parameters[i], numeric);
        if (err > worst) worst = err, worst_index = int(i);
    }
    EXPECT_LT(worst, 1e-3) << "parameter " << worst_index;
    for (Eigen::Index i = 0; i < set.alpha.size(); ++i) {
        Eigen::MatrixXd ap = set.alpha, am = set.alpha;
        ap.data()[i] += h;
        am.data()[i] -= h;
        const double numeric = (objective(mlp, set.means, ap) - objective(mlp, set.means, am)) / (2 * h);
        EXPECT_LT(fixtures::relative_error(g.alpha.data()[i], numeric), 1e-3);
    }
    for (Eigen::Index i = 0; i < set.means.size(); ++i) {
        RowMatrix3 xp = set.means, xm = set.means;
        xp.data()[i] += h;
        xm.data()[i] -= h;
        const double numeric = (objective(mlp, xp, set.alpha) - objective(mlp, xm, set.alpha)) / (2 * h);
        EXPECT_LT(fixtures::relative_error(g.positions.data()[i], numeric), 1e-3);
    }
}

TEST(DynamicMlp, ApplyDeformationRenormalizesRotations) {
    std::mt19937_64 rng(9);
    GaussianSet set = fixtures::random_scene(3, 1, 2, rng);
    set.normalize_rotations();
    Deformation d = Deformation::zeros(3);
    d.dx(0, 1) = 0.5;
    d.dr(1, 2) = 0.3;
    d.ds(2, 0) = -0.2;
    const GaussianSet out = apply_deformation(set, d);
    EXPECT_DOUBLE_EQ(out.means(0, 1), set.means(0, 1) + 0.5);
    EXPECT_NEAR(out.rotations.row(1).norm(), 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(out.log_scales(2, 0), set.log_scales(2, 0) - 0.2);
    EXPECT_EQ(out.alpha, set.alpha);
}
