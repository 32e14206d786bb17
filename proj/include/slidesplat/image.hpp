// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include <filesystem>

namespace slidesplat {

/// Interleaved H x W x C image of doubles; element (x, y, c) lives at (y * W + x) * C + c.
struct Image {
    int width = 0;
    int height = 0;
    int channels = 0;
    Eigen::ArrayXd data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(Eigen::ArrayXd::Constant(Eigen::Index(w) * h * c, fill)) {}

    Eigen::Index index(int x, int y, int c) const {
        return (Eigen::Index(y) * width + x) * channels + c;
    }
    double &at(int x, int y, int c) { return data[index(x, y, c)]; }
    double at(int x, int y, int c) const { return data[index(x, y, c)]; }

    bool same_shape(const Image &o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
    Eigen::Index size() const { return data.size(); }
};

/// Writes an 8-bit PNG (values clamped to [0,1]). Channels must be 1 or 3.
void write_png(const std::filesystem::path &path, const Image &img);
/// Reads an 8-bit gray/RGB(A) PNG into [0,1] values with 3 channels (alpha dropped).
Image read_png(const std::filesystem::path &path);
/// Writes a float32 NPY array of shape (H, W, C).
void write_npy(const std::filesystem::path &path, const Image &img);
Image read_npy(const std::filesystem::path &path);

} // namespace slidesplat
