// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/gaussian_set.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace slidesplat {

/// Sinusoidal encoding (x, sin(2^k pi x), cos(2^k pi x)) for k = 0..m-1, applied per input
/// dimension. Output columns: the d raw inputs, then for each k the d sines followed by the d
/// cosines.
struct FrequencyEncoder {
    int frequencies = 6;
    int input_dim = 3;

    int output_dim() const { return input_dim * (1 + 2 * frequencies); }
    Eigen::MatrixXd encode(const Eigen::MatrixXd &x) const;
    Eigen::VectorXd encode(const Eigen::VectorXd &x) const;
    /// Gradient with respect to x given the gradient on the encoding.
    Eigen::MatrixXd backward(const Eigen::MatrixXd &x, const Eigen::MatrixXd &grad_out) const;
};

enum class Activation { Relu, Linear };

/// Linear layer with M weight sets; row i of the input is mapped with the blend of the M sets
/// weighted by alpha row i.
struct TunableLayer {
    std::vector<Eigen::MatrixXd> weights; // M entries of f_in x f_out
    Eigen::MatrixXd biases;               // M x f_out
    Activation activation = Activation::Relu;

    int modes() const { return int(weights.size()); }
    int in_features() const { return weights.empty() ? 0 : int(weights[0].rows()); }
    int out_features() const { return weights.empty() ? 0 : int(weights[0].cols()); }

    /// Weights uniform in +-1/sqrt(f_in), biases zero.
    static TunableLayer uniform(int modes, int f_in, int f_out, Activation act, std::mt19937_64 &rng);
    static TunableLayer zeros(int modes, int f_in, int f_out, Activation act);
};

struct LayerCache {
    Eigen::MatrixXd blended_input; // N x (M * f_in + M): [alpha_m * x ..., alpha]
    Eigen::MatrixXd pre_activation;
};

struct LayerGradients {
    std::vector<Eigen::MatrixXd> weights;
    Eigen::MatrixXd biases;
};

/// y_i = phi(sum_m alpha_im (W_m^T x_i + b_m)), evaluated as a single matrix product of the
/// alpha-scaled inputs with the stacked weight sets.
Eigen::MatrixXd dynamic_layer_forward(const TunableLayer &layer, const Eigen::MatrixXd &inputs,
                                      const Eigen::MatrixXd &alpha, LayerCache *cache = nullptr);

/// Accumulates parameter and alpha gradients; returns the gradient on the layer input.
Eigen::MatrixXd dynamic_layer_backward(const TunableLayer &layer, const LayerCache &cache,
                                       const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &alpha,
                                       const Eigen::MatrixXd &grad_out, LayerGradients &grads,
                                       Eigen::MatrixXd &grad_alpha);

struct MlpConfig {
    int modes = 2;
    int frequencies = 6;
    int depth = 4;
    int width = 16;
    /// 1-based hidden layer counts after which the encoded input is concatenated again.
    std::vector<int> skip_after = {2, 3};
};

/// Deformation network: hidden tunable layers with skip connections and one zero-initialized
/// linear head whose 10 outputs are (dx, dr, ds).
struct DynamicMlp {
    MlpConfig config;
    FrequencyEncoder position_encoder;
    FrequencyEncoder time_encoder;
    std::vector<TunableLayer> layers; // depth hidden layers, then the head

    static constexpr int kHeadOutputs = 10;

    DynamicMlp() = default;
    DynamicMlp(const MlpConfig &cfg, std::mt19937_64 &rng);

    int encoded_dim() const { return position_encoder.output_dim() + time_encoder.output_dim(); }
    bool has_skip_before(int layer) const;

    Eigen::Index parameter_count() const;
    Eigen::VectorXd parameters() const;
    void set_parameters(const Eigen::VectorXd &p);
    std::uint64_t checksum() const;
};

struct Deformation {
    RowMatrix3 dx;
    RowMatrix4 dr;
    RowMatrix3 ds;

    static Deformation zeros(Eigen::Index n);
};

struct DeformCache {
    Eigen::MatrixXd positions;
    Eigen::MatrixXd alpha;
    Eigen::MatrixXd encoded;
    std::vector<Eigen::MatrixXd> layer_inputs;
    std::vector<LayerCache> layers;
};

Deformation deform(const DynamicMlp &mlp, const RowMatrix3 &positions, double t,
                   const Eigen::MatrixXd &alpha, DeformCache *cache = nullptr);

struct DeformGradients {
    Eigen::VectorXd parameters; // packed like DynamicMlp::parameters()
    Eigen::MatrixXd alpha;
    RowMatrix3 positions;
};

DeformGradients deform_backward(const DynamicMlp &mlp, const DeformCache &cache,
                                const Deformation &upstream);

/// Per-frame Gaussians: mean + dx, quaternion + dr (renormalized), log-scale + ds.
GaussianSet apply_deformation(const GaussianSet &canonical, const Deformation &d);

} // namespace slidesplat
