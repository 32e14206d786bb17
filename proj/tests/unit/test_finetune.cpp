// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/error.hpp"
#include "slidesplat/finetune.hpp"

#include "support/scenes.hpp"

#include <gtest/gtest.h>

using namespace slidesplat;

namespace {

const SyntheticScene &scene() {
    static const SyntheticScene s = generate_synthetic_scene(fixtures::tiny_spec(MotionType::Translation, 5));
    return s;
}

const std::pair<WindowModel, WindowModel> &trained_pair() {
    static const std::pair<WindowModel, WindowModel> p = [] {
        const TrainConfig cfg = fixtures::quick_train(30, 12);
        return std::make_pair(train_window(scene().seeds[1], scene().train, {0, 2}, cfg),
                              train_window(scene().seeds[3], scene().train, {2, 4}, cfg));
    }();
    return p;
}

} // namespace

TEST(ConsistencySchedule, ThreeQuartersRepeatsThreeConsistencyStepsThenOneTrainingStep) {
    std::string pattern;
    for (int k = 0; k < 12; ++k) pattern += is_consistency_step(k, 0.75) ? 'C' : 'T';
    EXPECT_EQ(pattern, "CCCTCCCTCCCT");
}

TEST(ConsistencySchedule, RealizedFractionTracksTheTarget) {
    for (double f : {0.0, 0.1, 0.25, 0.5, 0.6, 0.75, 0.9, 1.0}) {
        for (int n : {1, 7, 100, 1001}) {
            int c = 0;
            for (int k = 0; k < n; ++k) c += is_consistency_step(k, f);
            EXPECT_LE(std::abs(c - f * n), 1.0) << "fraction " << f << " steps " << n;
        }
    }
}

TEST(Finetune, OnlyCanonicalGaussiansOfTheCurrentWindowChange) {
    const auto &[prev, cur] = trained_pair();
    const std::uint64_t mlp = cur.mlp.checksum(), alpha = cur.canonical.alpha_checksum();
    const std::uint64_t prev_all = prev.canonical.checksum(), prev_mlp = prev.mlp.checksum();
    std::string pattern;
    const WindowModel out = finetune_window(cur, prev, scene().train, fixtures::quick_finetune(8),
                                            [&](const FinetuneIterationInfo &info) {
                                                pattern += info.consistency ? 'C' : 'T';
                                                EXPECT_EQ(info.current->mlp.checksum(), mlp);
                                                EXPECT_EQ(info.current->canonical.alpha_checksum(), alpha);
                                                EXPECT_EQ(info.previous->canonical.checksum(), prev_all);
                                                EXPECT_EQ(info.previous->mlp.checksum(), prev_mlp);
                                                EXPECT_EQ(info.current->canonical.size(), cur.canonical.size());
                                            });
    EXPECT_EQ(pattern, "CCCTCCCT");
    EXPECT_NE(out.canonical.checksum(), cur.canonical.checksum());
    EXPECT_EQ(out.mlp.checksum(), mlp);
    EXPECT_EQ(out.window, cur.window);
}

TEST(Finetune, AgreeingModelsHaveZeroConsistencyLoss) {
    // Zero-initialized output heads leave the canonical Gaussians undeformed at every time.
    const auto &[prev, cur] = trained_pair();
    WindowModel a = cur, b = cur;
    std::mt19937_64 rng(1);
    a.mlp = DynamicMlp(cur.mlp.config, rng);
    b.mlp = a.mlp;
    b.window = {0, 2};
    int checked = 0;
    finetune_window(a, b, scene().train, fixtures::quick_finetune(1), [&](const FinetuneIterationInfo &info) {
        ASSERT_TRUE(info.consistency);
        EXPECT_EQ(info.loss, 0.0);
        ++checked;
    });
    EXPECT_EQ(checked, 1);
    EXPECT_EQ(measure_overlap(a, b, scene().train.rig, 4, 3).mean, 0.0);
}

TEST(Finetune, NonAdjacentWindowsAreRejected) {
    const auto &[prev, cur] = trained_pair();
    WindowModel shifted = cur;
    shifted.window = {3, 4};
    for (auto call : {0, 1}) {
        try {
            if (call == 0)
                finetune_window(shifted, prev, scene().train, fixtures::quick_finetune(1));
            else
                measure_overlap(shifted, prev, scene().train.rig, 2, 0);
            FAIL();
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::OverlapMismatch);
        }
    }
}

TEST(Finetune, ZeroFractionOnlyTakesTrainingSteps) {
    const auto &[prev, cur] = trained_pair();
    FinetuneConfig cfg = fixtures::quick_finetune(6);
    cfg.consistency_fraction = 0.0;
    int consistency = 0;
    finetune_window(cur, prev, scene().train, cfg,
                    [&](const FinetuneIterationInfo &info) { consistency += info.consistency; });
    EXPECT_EQ(consistency, 0);
}

TEST(Finetune, IsDeterministicForAFixedSeed) {
    const auto &[prev, cur] = trained_pair();
    const WindowModel a = finetune_window(cur, prev, scene().train, fixtures::quick_finetune(6));
    const WindowModel b = finetune_window(cur, prev, scene().train, fixtures::quick_finetune(6));
    EXPECT_EQ(a.canonical.checksum(), b.canonical.checksum());
}

TEST(Finetune, OverlapReportAveragesPerPoseL1) {
    const auto &[prev, cur] = trained_pair();
    const OverlapReport r = measure_overlap(cur, prev, scene().train.rig, 5, 11);
    ASSERT_EQ(r.per_pose_l1.size(), 5u);
    double sum = 0;
    for (double v : r.per_pose_l1) sum += v;
    EXPECT_NEAR(r.mean, sum / 5.0, 1e-15);
    EXPECT_EQ(measure_overlap(cur, prev, scene().train.rig, 5, 11).per_pose_l1, r.per_pose_l1);
}

TEST(Finetune, InvalidFractionIsAConfigError) {
    FinetuneConfig cfg;
    cfg.consistency_fraction = 1.5;
    EXPECT_THROW(cfg.validate(), Error);
}
