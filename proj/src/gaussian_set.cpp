// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/gaussian_set.hpp"

#include "slidesplat/error.hpp"

namespace slidesplat {

GaussianSet::GaussianSet(Eigen::Index count, int degree, int modes)
    : sh_degree(degree), means(RowMatrix3::Zero(count, 3)), rotations(RowMatrix4::Zero(count, 4)),
      log_scales(RowMatrix3::Zero(count, 3)), opacity_logits(Eigen::VectorXd::Zero(count)),
      sh(Eigen::MatrixXd::Zero(count, 3 * sh_coeff_count(degree))),
      alpha(Eigen::MatrixXd::Zero(count, modes)) {
    rotations.col(0).setOnes();
}

Gaussian GaussianSet::gaussian(Eigen::Index i) const {
    Gaussian g;
    g.mean = means.row(i).transpose();
    g.rotation = rotations.row(i).transpose();
    g.log_scale = log_scales.row(i).transpose();
    g.opacity_logit = opacity_logits[i];
    const int k = sh_coeffs();
    g.sh.resize(k, 3);
    for (int b = 0; b < k; ++b)
        for (int c = 0; c < 3; ++c) g.sh(b, c) = sh(i, b * 3 + c);
    return g;
}

void GaussianSet::set_gaussian(Eigen::Index i, const Gaussian &g) {
    require(g.sh.rows() == sh_coeffs(), ErrorKind::ShapeMismatch, "SH degree mismatch");
    means.row(i) = g.mean.transpose();
    rotations.row(i) = g.rotation.transpose();
    log_scales.row(i) = g.log_scale.transpose();
    opacity_logits[i] = g.opacity_logit;
    for (int b = 0; b < sh_coeffs(); ++b)
        for (int c = 0; c < 3; ++c) sh(i, b * 3 + c) = g.sh(b, c);
}

void GaussianSet::append(const Gaussian &g, const Eigen::RowVectorXd &alpha_row) {
    require(alpha_row.size() == alpha.cols(), ErrorKind::ShapeMismatch, "alpha row width");
    const Eigen::Index n = size();
    means.conservativeResize(n + 1, Eigen::NoChange);
    rotations.conservativeResize(n + 1, Eigen::NoChange);
    log_scales.conservativeResize(n + 1, Eigen::NoChange);
    opacity_logits.conservativeResize(n + 1);
    sh.conservativeResize(n + 1, Eigen::NoChange);
    alpha.conservativeResize(n + 1, Eigen::NoChange);
    alpha.row(n) = alpha_row;
    set_gaussian(n, g);
}

Eigen::Index GaussianSet::duplicate_row(Eigen::Index src) {
    append(gaussian(src), alpha.row(src));
    return size() - 1;
}

void GaussianSet::keep_rows(const std::vector<bool> &keep) {
    require(static_cast<Eigen::Index>(keep.size()) == size(), ErrorKind::ShapeMismatch,
            "keep mask length");
    means = keep_matrix_rows(means, keep);
    rotations = keep_matrix_rows(rotations, keep);
    log_scales = keep_matrix_rows(log_scales, keep);
    opacity_logits = keep_matrix_rows(opacity_logits, keep);
    sh = keep_matrix_rows(sh, keep);
    alpha = keep_matrix_rows(alpha, keep);
}

void GaussianSet::normalize_rotations() { rotations.rowwise().normalize(); }

void GaussianSet::validate() const {
    const Eigen::Index n = size();
    require(rotations.rows() == n && log_scales.rows() == n && opacity_logits.size() == n &&
                sh.rows() == n && alpha.rows() == n,
            ErrorKind::ShapeMismatch, "per-Gaussian arrays disagree on row count");
    require(sh.cols() == 3 * sh_coeffs(), ErrorKind::ShapeMismatch, "SH column count");
    require(sh_degree == 0 || sh_degree == 1, ErrorKind::ShapeMismatch, "SH degree must be 0 or 1");
}

bool GaussianSet::all_finite() const {
    return means.allFinite() && rotations.allFinite() && log_scales.allFinite() &&
           opacity_logits.allFinite() && sh.allFinite() && alpha.allFinite();
}

std::uint64_t fnv1a(const void *data, std::size_t bytes, std::uint64_t seed) {
    const auto *p = static_cast<const unsigned char *>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t GaussianSet::checksum() const {
    std::uint64_t h = checksum_of(means);
    h = checksum_of(rotations, h);
    h = checksum_of(log_scales, h);
    h = checksum_of(opacity_logits, h);
    h = checksum_of(sh, h);
    return checksum_of(alpha, h);
}

std::uint64_t GaussianSet::alpha_checksum() const { return checksum_of(alpha); }

} // namespace slidesplat
