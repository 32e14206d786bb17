// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/gaussian_set.hpp"

#include <Eigen/Dense>

#include <vector>

namespace slidesplat {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-15;
};

/// First/second moment buffers for one parameter array.
struct AdamState {
    Eigen::MatrixXd m;
    Eigen::MatrixXd v;
    long step = 0;

    Eigen::Index rows() const { return m.rows(); }
    void reset(Eigen::Index rows, Eigen::Index cols);
};

/// One bias-corrected Adam update in place.
void adam_step(Eigen::Ref<Eigen::MatrixXd> param, const Eigen::Ref<const Eigen::MatrixXd> &grad,
               AdamState &state, double lr, const AdamHyper &hyper = {});

/// lr * factor^(iter / horizon).
double exponential_decay(double lr, double factor, double iter, double horizon);
/// Log-linear interpolation from `initial` to `final` over `steps`, constant afterwards.
double log_linear(double initial, double final_value, double iter, double steps);

/// Describes a row-level edit of every per-Gaussian array: first rows are appended as copies of
/// `appended_from` sources, then rows with keep[i] == false are dropped.
struct RowEdit {
    std::vector<Eigen::Index> appended_from;
    std::vector<bool> keep; // length = old rows + appended rows

    bool empty() const;
};

/// Applies `edit` to a row-indexed matrix; appended rows copy their source unless
/// `zero_new_rows` is set (optimizer moments start at zero for new Gaussians).
template <typename Derived>
void apply_row_edit(Derived &m, const RowEdit &edit, bool zero_new_rows) {
    const Eigen::Index old_rows = m.rows();
    const Eigen::Index added = Eigen::Index(edit.appended_from.size());
    if (added > 0) {
        m.conservativeResize(old_rows + added, Eigen::NoChange);
        for (Eigen::Index k = 0; k < added; ++k) {
            if (zero_new_rows)
                m.row(old_rows + k).setZero();
            else
                m.row(old_rows + k) = m.row(edit.appended_from[std::size_t(k)]);
        }
    }
    if (!edit.keep.empty()) m = keep_matrix_rows(m, edit.keep);
}

/// Adam state for every per-Gaussian parameter group plus alpha.
struct GaussianOptimizerState {
    AdamState means, rotations, log_scales, opacity_logits, sh_dc, sh_rest, alpha;

    void reset(const GaussianSet &set);
    void apply(const RowEdit &edit);
    /// True when every moment buffer has exactly `rows` rows.
    bool rows_match(Eigen::Index rows) const;
};

} // namespace slidesplat
