// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/optimizer.hpp"

#include "slidesplat/error.hpp"

#include <algorithm>
#include <cmath>

namespace slidesplat {

void AdamState::reset(Eigen::Index rows, Eigen::Index cols) {
    m = Eigen::MatrixXd::Zero(rows, cols);
    v = Eigen::MatrixXd::Zero(rows, cols);
    step = 0;
}

void adam_step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::Ref<const Eigen::MatrixXd> &grad,
               AdamState &state, double lr, const AdamHyper &hyper) {
    require(param.rows() == grad.rows() && param.cols() == grad.cols(), ErrorKind::ShapeMismatch,
            "parameter and gradient shapes differ");
    if (state.m.rows() != param.rows() || state.m.cols() != param.cols())
        state.reset(param.rows(), param.cols());
    ++state.step;
    state.m = hyper.beta1 * state.m + (1.0 - hyper.beta1) * grad;
    state.v = hyper.beta2 * state.v + (1.0 - hyper.beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(hyper.beta1, double(state.step));
    const double c2 = 1.0 - std::pow(hyper.beta2, double(state.step));
    param.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + hyper.eps);
}

double exponential_decay(double lr, double factor, double iter, double horizon) {
    return lr * std::pow(factor, iter / horizon);
}

double log_linear(double initial, double final_value, double iter, double steps) {
    const double t = std::clamp(iter / std::max(1.0, steps), 0.0, 1.0);
    return std::exp(std::log(initial) * (1.0 - t) + std::log(final_value) * t);
}

bool RowEdit::empty() const {
    return appended_from.empty() && std::all_of(keep.begin(), keep.end(), [](bool k) { return k; });
}

void GaussianOptimizerState::reset(const GaussianSet &set) {
    const Eigen::Index n = set.size();
    means.reset(n, 3);
    rotations.reset(n, 4);
    log_scales.reset(n, 3);
    opacity_logits.reset(n, 1);
    sh_dc.reset(n, 3);
    sh_rest.reset(n, set.sh.cols() - 3);
    alpha.reset(n, set.modes());
}

void GaussianOptimizerState::apply(const RowEdit &edit) {
    for (AdamState *s : {&means, &rotations, &log_scales, &opacity_logits, &sh_dc, &sh_rest, &alpha}) {
        apply_row_edit(s->m, edit, true);
        apply_row_edit(s->v, edit, true);
    }
}

bool GaussianOptimizerState::rows_match(Eigen::Index rows) const {
    for (const AdamState *s : {&means, &rotations, &log_scales, &opacity_logits, &sh_dc, &sh_rest, &alpha})
        if (s->m.rows() != rows || s->v.rows() != rows) return false;
    return true;
}

} // namespace slidesplat
