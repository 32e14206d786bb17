// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/finetune.hpp"
#include "slidesplat/synthetic.hpp"
#include "slidesplat/trainer.hpp"

namespace slidesplat::fixtures {

inline SyntheticSpec tiny_spec(MotionType motion = MotionType::Translation, int frames = 4) {
    SyntheticSpec s;
    s.views = 2;
    s.width = 16;
    s.height = 16;
    s.focal = 16.0;
    s.frames = frames;
    s.gaussians = 4;
    s.moving = 1;
    s.motion = motion;
    s.seed = 21;
    return s;
}

/// A schedule short enough for unit tests that still crosses every phase boundary.
inline TrainConfig quick_train(int iters = 40, int warmup = 16) {
    TrainConfig c = TrainConfig::desk();
    c.total_iters = iters;
    c.warmup_iters = warmup;
    c.densify_from = warmup;
    c.densify_until = iters - 4;
    c.densify_interval = 6;
    c.density.grad_threshold = 1e-6;
    c.log_interval = 10;
    c.seed = 5;
    return c;
}

inline FinetuneConfig quick_finetune(int iters = 12) {
    FinetuneConfig c = FinetuneConfig::desk();
    c.iters = iters;
    c.seed = 6;
    return c;
}

} // namespace slidesplat::fixtures
