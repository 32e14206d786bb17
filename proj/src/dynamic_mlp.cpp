// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/dynamic_mlp.hpp"

#include "slidesplat/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slidesplat {

Eigen::MatrixXd FrequencyEncoder::encode(const Eigen::MatrixXd &x) const {
    require(x.cols() == input_dim, ErrorKind::ShapeMismatch, "encoder input width");
    Eigen::MatrixXd out(x.rows(), output_dim());
    out.leftCols(input_dim) = x;
    for (int k = 0; k < frequencies; ++k) {
        const double freq = std::ldexp(std::numbers::pi, k);
        const Eigen::ArrayXXd arg = freq * x.array();
        out.middleCols(input_dim * (1 + 2 * k), input_dim) = arg.sin().matrix();
        out.middleCols(input_dim * (2 + 2 * k), input_dim) = arg.cos().matrix();
    }
    return out;
}

Eigen::VectorXd FrequencyEncoder::encode(const Eigen::VectorXd &x) const {
    return encode(Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

Eigen::MatrixXd FrequencyEncoder::backward(const Eigen::MatrixXd &x,
                                           const Eigen::MatrixXd &grad_out) const {
    Eigen::MatrixXd g = grad_out.leftCols(input_dim);
    for (int k = 0; k < frequencies; ++k) {
        const double freq = std::ldexp(std::numbers::pi, k);
        const Eigen::ArrayXXd arg = freq * x.array();
        g.array() += freq * (grad_out.middleCols(input_dim * (1 + 2 * k), input_dim).array() * arg.cos() -
                             grad_out.middleCols(input_dim * (2 + 2 * k), input_dim).array() * arg.sin());
    }
    return g;
}

TunableLayer TunableLayer::uniform(int modes, int f_in, int f_out, Activation act,
                                   std::mt19937_64 &rng) {
    TunableLayer l = zeros(modes, f_in, f_out, act);
    const double bound = 1.0 / std::sqrt(double(f_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto &w : l.weights)
        for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = dist(rng);
    return l;
}

TunableLayer TunableLayer::zeros(int modes, int f_in, int f_out, Activation act) {
    TunableLayer l;
    l.weights.assign(std::size_t(modes), Eigen::MatrixXd::Zero(f_in, f_out));
    l.biases = Eigen::MatrixXd::Zero(modes, f_out);
    l.activation = act;
    return l;
}

namespace {

Eigen::MatrixXd stacked_weights(const TunableLayer &layer) {
    const int m = layer.modes(), f_in = layer.in_features();
    Eigen::MatrixXd w(m * f_in + m, layer.out_features());
    for (int k = 0; k < m; ++k) w.middleRows(k * f_in, f_in) = layer.weights[std::size_t(k)];
    w.bottomRows(m) = layer.biases;
    return w;
}

} // namespace

Eigen::MatrixXd dynamic_layer_forward(const TunableLayer &layer, const Eigen::MatrixXd &inputs,
                                      const Eigen::MatrixXd &alpha, LayerCache *cache) {
    const int m = layer.modes(), f_in = layer.in_features();
    require(inputs.cols() == f_in, ErrorKind::ShapeMismatch, "layer input width");
    require(alpha.rows() == inputs.rows() && alpha.cols() == m, ErrorKind::ShapeMismatch,
            "alpha must be N x M");
    require(layer.biases.rows() == m && layer.biases.cols() == layer.out_features(),
            ErrorKind::ShapeMismatch, "bias shape");
    Eigen::MatrixXd blended(inputs.rows(), m * f_in + m);
    for (int k = 0; k < m; ++k)
        blended.middleCols(k * f_in, f_in) = alpha.col(k).asDiagonal() * inputs;
    blended.rightCols(m) = alpha;
    Eigen::MatrixXd pre = blended * stacked_weights(layer);
    Eigen::MatrixXd out = layer.activation == Activation::Relu ? Eigen::MatrixXd(pre.cwiseMax(0.0)) : pre;
    if (cache) {
        cache->blended_input = std::move(blended);
        cache->pre_activation = std::move(pre);
    }
    return out;
}

Eigen::MatrixXd dynamic_layer_backward(const TunableLayer &layer, const LayerCache &cache,
                                       const Eigen::MatrixXd &inputs, const Eigen::MatrixXd &alpha,
                                       const Eigen::MatrixXd &grad_out, LayerGradients &grads,
                                       Eigen::MatrixXd &grad_alpha) {
    const int m = layer.modes(), f_in = layer.in_features();
    Eigen::MatrixXd g_pre = grad_out;
    if (layer.activation == Activation::Relu)
        g_pre = (cache.pre_activation.array() > 0.0).select(grad_out.array(), 0.0).matrix();
    const Eigen::MatrixXd g_w = cache.blended_input.transpose() * g_pre;
    if (grads.weights.empty()) {
        grads.weights.assign(std::size_t(m), Eigen::MatrixXd::Zero(f_in, layer.out_features()));
        grads.biases = Eigen::MatrixXd::Zero(m, layer.out_features());
    }
    for (int k = 0; k < m; ++k) grads.weights[std::size_t(k)] += g_w.middleRows(k * f_in, f_in);
    grads.biases += g_w.bottomRows(m);

    const Eigen::MatrixXd g_blended = g_pre * stacked_weights(layer).transpose();
    Eigen::MatrixXd g_in = Eigen::MatrixXd::Zero(inputs.rows(), f_in);
    for (int k = 0; k < m; ++k) {
        const auto block = g_blended.middleCols(k * f_in, f_in);
        g_in += alpha.col(k).asDiagonal() * block;
        grad_alpha.col(k) += (block.array() * inputs.array()).rowwise().sum().matrix();
    }
    grad_alpha += g_blended.rightCols(m);
    return g_in;
}

DynamicMlp::DynamicMlp(const MlpConfig &cfg, std::mt19937_64 &rng) : config(cfg) {
    require(cfg.modes >= 1 && cfg.depth >= 1 && cfg.width >= 1, ErrorKind::ConfigError,
            "MLP shape must be positive");
    position_encoder = FrequencyEncoder{cfg.frequencies, 3};
    time_encoder = FrequencyEncoder{cfg.frequencies, 1};
    const int enc = encoded_dim();
    for (int l = 0; l < cfg.depth; ++l) {
        int f_in = l == 0 ? enc : cfg.width;
        if (has_skip_before(l)) f_in += enc;
        layers.push_back(TunableLayer::uniform(cfg.modes, f_in, cfg.width, Activation::Relu, rng));
    }
    layers.push_back(TunableLayer::zeros(cfg.modes, cfg.width, kHeadOutputs, Activation::Linear));
}

bool DynamicMlp::has_skip_before(int layer) const {
    return layer > 0 && layer < config.depth &&
           std::find(config.skip_after.begin(), config.skip_after.end(), layer) !=
               config.skip_after.end();
}

Eigen::Index DynamicMlp::parameter_count() const {
    Eigen::Index n = 0;
    for (const auto &l : layers) n += Eigen::Index(l.modes()) * (l.in_features() + 1) * l.out_features();
    return n;
}

Eigen::VectorXd DynamicMlp::parameters() const {
    Eigen::VectorXd p(parameter_count());
    Eigen::Index at = 0;
    for (const auto &l : layers) {
        for (const auto &w : l.weights) {
            p.segment(at, w.size()) = w.reshaped();
            at += w.size();
        }
        p.segment(at, l.biases.size()) = l.biases.reshaped();
        at += l.biases.size();
    }
    return p;
}

void DynamicMlp::set_parameters(const Eigen::VectorXd &p) {
    require(p.size() == parameter_count(), ErrorKind::ShapeMismatch, "MLP parameter vector length");
    Eigen::Index at = 0;
    for (auto &l : layers) {
        for (auto &w : l.weights) {
            w.reshaped() = p.segment(at, w.size());
            at += w.size();
        }
        l.biases.reshaped() = p.segment(at, l.biases.size());
        at += l.biases.size();
    }
}

std::uint64_t DynamicMlp::checksum() const { return checksum_of(parameters()); }

Deformation Deformation::zeros(Eigen::Index n) {
    return {RowMatrix3::Zero(n, 3), RowMatrix4::Zero(n, 4), RowMatrix3::Zero(n, 3)};
}

Deformation deform(const DynamicMlp &mlp, const RowMatrix3 &positions, double t,
                   const Eigen::MatrixXd &alpha, DeformCache *cache) {
    const Eigen::Index n = positions.rows();
    Eigen::MatrixXd encoded(n, mlp.encoded_dim());
    const int pos_dim = mlp.position_encoder.output_dim();
    encoded.leftCols(pos_dim) = mlp.position_encoder.encode(Eigen::MatrixXd(positions));
    const Eigen::RowVectorXd t_enc = mlp.time_encoder.encode(Eigen::VectorXd(Eigen::VectorXd::Constant(1, t))).transpose();
    encoded.rightCols(mlp.time_encoder.output_dim()) = t_enc.replicate(n, 1);

    std::vector<Eigen::MatrixXd> inputs;
    std::vector<LayerCache> caches(mlp.layers.size());
    Eigen::MatrixXd h = encoded;
    for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
        Eigen::MatrixXd in = h;
        if (mlp.has_skip_before(int(l))) {
            in.resize(n, h.cols() + encoded.cols());
            in << h, encoded;
        }
        h = dynamic_layer_forward(mlp.layers[l], in, alpha, cache ? &caches[l] : nullptr);
        if (cache) inputs.push_back(std::move(in));
    }
    if (cache) {
        cache->positions = positions;
        cache->alpha = alpha;
        cache->encoded = std::move(encoded);
        cache->layer_inputs = std::move(inputs);
        cache->layers = std::move(caches);
    }
    return {h.leftCols(3), h.middleCols(3, 4), h.rightCols(3)};
}

DeformGradients deform_backward(const DynamicMlp &mlp, const DeformCache &cache,
                                const Deformation &upstream) {
    const Eigen::Index n = cache.positions.rows();
    Eigen::MatrixXd g(n, DynamicMlp::kHeadOutputs);
    g << upstream.dx, upstream.dr, upstream.ds;

    std::vector<LayerGradients> layer_grads(mlp.layers.size());
    Eigen::MatrixXd g_alpha = Eigen::MatrixXd::Zero(n, mlp.config.modes);
    Eigen::MatrixXd g_encoded = Eigen::MatrixXd::Zero(n, mlp.encoded_dim());
    for (int l = int(mlp.layers.size()) - 1; l >= 0; --l) {
        const std::size_t li = std::size_t(l);
        Eigen::MatrixXd g_in = dynamic_layer_backward(mlp.layers[li], cache.layers[li],
                                                      cache.layer_inputs[li], cache.alpha, g,
                                                      layer_grads[li], g_alpha);
        if (l == 0) {
            g_encoded += g_in;
        } else if (mlp.has_skip_before(l)) {
            g = g_in.leftCols(mlp.config.width);
            g_encoded += g_in.rightCols(mlp.encoded_dim());
        } else {
            g = std::move(g_in);
        }
    }

    DeformGradients out;
    out.parameters.resize(mlp.parameter_count());
    Eigen::Index at = 0;
    for (const auto &lg : layer_grads) {
        for (const auto &w : lg.weights) {
            out.parameters.segment(at, w.size()) = w.reshaped();
            at += w.size();
        }
        out.parameters.segment(at, lg.biases.size()) = lg.biases.reshaped();
        at += lg.biases.size();
    }
    out.alpha = std::move(g_alpha);
    const int pos_dim = mlp.position_encoder.output_dim();
    out.positions = mlp.position_encoder.backward(cache.positions, g_encoded.leftCols(pos_dim));
    return out;
}

GaussianSet apply_deformation(const GaussianSet &canonical, const Deformation &d) {
    require(d.dx.rows() == canonical.size(), ErrorKind::ShapeMismatch, "deformation row count");
    GaussianSet out = canonical;
    out.means += d.dx;
    out.rotations += d.dr;
    out.rotations.rowwise().normalize();
    out.log_scales += d.ds;
    return out;
}

} // namespace slidesplat
