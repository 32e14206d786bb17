// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/gaussian.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace slidesplat {

using RowMatrix3 = Eigen::Matrix<double, Eigen::Dynamic, 3>;
using RowMatrix4 = Eigen::Matrix<double, Eigen::Dynamic, 4>;

/// Structure-of-arrays Gaussian collection. Row i of every array is Gaussian i; that index is
/// the identity used by alpha and by optimizer state, so reordering only happens through
/// `keep_rows` and appends.
struct GaussianSet {
    int sh_degree = 1;
    RowMatrix3 means;
    RowMatrix4 rotations;  // (w, x, y, z) per row
    RowMatrix3 log_scales;
    Eigen::VectorXd opacity_logits;
    Eigen::MatrixXd sh;    // N x 3K, column k*3 + c holds basis k of channel c
    Eigen::MatrixXd alpha; // N x M blending weights

    GaussianSet() = default;
    GaussianSet(Eigen::Index count, int sh_degree, int modes);

    Eigen::Index size() const { return means.rows(); }
    int modes() const { return static_cast<int>(alpha.cols()); }
    int sh_coeffs() const { return sh_coeff_count(sh_degree); }

    Gaussian gaussian(Eigen::Index i) const;
    void set_gaussian(Eigen::Index i, const Gaussian &g);
    void append(const Gaussian &g, const Eigen::RowVectorXd &alpha_row);
    /// Appends a copy of row `src` (alpha included) and returns the new index.
    Eigen::Index duplicate_row(Eigen::Index src);
    void keep_rows(const std::vector<bool> &keep);

    void normalize_rotations();
    /// Throws ShapeMismatch when array shapes disagree.
    void validate() const;
    bool all_finite() const;
    /// FNV-1a over every parameter byte, alpha included.
    std::uint64_t checksum() const;
    std::uint64_t alpha_checksum() const;
};

/// Row selection helper shared by density control and optimizer state.
template <typename Derived>
typename Derived::PlainObject keep_matrix_rows(const Eigen::MatrixBase<Derived> &m,
                                               const std::vector<bool> &keep) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < keep.size(); ++i)
        if (keep[i]) rows.push_back(static_cast<Eigen::Index>(i));
    return m(rows, Eigen::all);
}

std::uint64_t fnv1a(const void *data, std::size_t bytes, std::uint64_t seed = 14695981039346656037ull);

template <typename Derived>
std::uint64_t checksum_of(const Eigen::DenseBase<Derived> &m, std::uint64_t seed = 14695981039346656037ull) {
    const typename Derived::PlainObject plain = m;
    return fnv1a(plain.data(), sizeof(typename Derived::Scalar) * std::size_t(plain.size()), seed);
}

} // namespace slidesplat
