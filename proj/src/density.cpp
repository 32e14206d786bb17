// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/density.hpp"

#include "slidesplat/error.hpp"

#include <cmath>

namespace slidesplat {

void DensityStats::reset(Eigen::Index rows) {
    grad_accum = Eigen::VectorXd::Zero(rows);
    visible_count = Eigen::VectorXd::Zero(rows);
}

void DensityStats::accumulate(const RenderGradients &grads, int width, int height) {
    require(grads.screen_means.rows() == rows(), ErrorKind::ShapeMismatch, "density stats rows");
    for (Eigen::Index i = 0; i < rows(); ++i) {
        if (!grads.visible[std::size_t(i)]) continue;
        const double gx = grads.screen_means(i, 0) * 0.5 * width;
        const double gy = grads.screen_means(i, 1) * 0.5 * height;
        grad_accum[i] += std::hypot(gx, gy);
        visible_count[i] += 1.0;
    }
}

Eigen::VectorXd DensityStats::mean_grad() const {
    return (visible_count.array() > 0.0).select(grad_accum.array() / visible_count.array().max(1.0), 0.0);
}

void DensityStats::apply(const RowEdit &edit) {
    apply_row_edit(grad_accum, edit, true);
    apply_row_edit(visible_count, edit, true);
}

namespace {

void replay(GaussianSet &set, const RowEdit &edit) {
    apply_row_edit(set.means, edit, false);
    apply_row_edit(set.rotations, edit, false);
    apply_row_edit(set.log_scales, edit, false);
    apply_row_edit(set.opacity_logits, edit, false);
    apply_row_edit(set.sh, edit, false);
    apply_row_edit(set.alpha, edit, false);
}

} // namespace

DensityReport adaptive_density_control(GaussianSet &set, const DensityStats &stats,
                                       const DensityThresholds &th, std::mt19937_64 &rng) {
    require(stats.rows() == set.size(), ErrorKind::ShapeMismatch, "density stats rows");
    require(th.split_children >= 1 && th.split_scale_divisor > 0.0, ErrorKind::ConfigError,
            "split settings");
    const Eigen::Index n = set.size();
    const Eigen::VectorXd grad = stats.mean_grad();
    const double size_limit = th.percent_dense * th.extent;

    DensityReport report;
    std::vector<Eigen::Index> split_parents;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(grad[i] >= th.grad_threshold)) continue;
        if (set.log_scales.row(i).array().exp().maxCoeff() <= size_limit) {
            report.edit.appended_from.push_back(i);
            ++report.cloned;
        } else {
            split_parents.push_back(i);
        }
    }
    for (Eigen::Index p : split_parents)
        for (int c = 0; c < th.split_children; ++c) report.edit.appended_from.push_back(p);
    report.split = int(split_parents.size());

    const Eigen::Index total = n + Eigen::Index(report.edit.appended_from.size());
    report.edit.keep.assign(std::size_t(total), true);
    for (Eigen::Index p : split_parents) report.edit.keep[std::size_t(p)] = false;

    RowEdit append_only{report.edit.appended_from, {}};
    replay(set, append_only);

    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Index first_child = n + report.cloned;
    for (Eigen::Index k = first_child; k < total; ++k) {
        const Gaussian parent = set.gaussian(k);
        const Vec3<double> local(normal(rng), normal(rng), normal(rng));
        const Vec3<double> offset =
            rotation_from_quaternion(parent.rotation) * (parent.scale().array() * local.array()).matrix();
        set.means.row(k) += offset.transpose();
        set.log_scales.row(k).array() -= std::log(th.split_scale_divisor);
    }

    for (Eigen::Index i = 0; i < total; ++i) {
        if (!report.edit.keep[std::size_t(i)]) continue;
        if (sigmoid(set.opacity_logits[i]) < th.min_opacity) {
            report.edit.keep[std::size_t(i)] = false;
            ++report.pruned;
        }
    }
    set.keep_rows(report.edit.keep);
    return report;
}

DensityReport prune_transparent(GaussianSet &set, double min_opacity) {
    DensityReport report;
    report.edit.keep.assign(std::size_t(set.size()), true);
    for (Eigen::Index i = 0; i < set.size(); ++i)
        if (sigmoid(set.opacity_logits[i]) < min_opacity) {
            report.edit.keep[std::size_t(i)] = false;
            ++report.pruned;
        }
    set.keep_rows(report.edit.keep);
    return report;
}

void reset_opacity(GaussianSet &set, double ceiling) {
    const double cap = logit(ceiling);
    set.opacity_logits = set.opacity_logits.cwiseMin(cap);
}

} // namespace slidesplat
