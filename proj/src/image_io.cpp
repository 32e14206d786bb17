// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/image.hpp"

#include "slidesplat/error.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace slidesplat {

namespace {

struct FileCloser {
    void operator()(std::FILE *f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) {
    throw Error(ErrorKind::DataError, std::string("png: ") + msg);
}
void png_warning_fn(png_structp, png_const_charp) {}

} // namespace

void write_png(const std::filesystem::path &path, const Image &img) {
    require(img.channels == 1 || img.channels == 3, ErrorKind::ShapeMismatch,
            "PNG output needs 1 or 3 channels");
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    require(bool(fp), ErrorKind::DataError, "cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    std::vector<png_byte> bytes(std::size_t(img.size()));
    for (Eigen::Index i = 0; i < img.size(); ++i)
        bytes[std::size_t(i)] = png_byte(std::lround(std::clamp(img.data[i], 0.0, 1.0) * 255.0));
    try {
        png_init_io(png, fp.get());
        png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
                     img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                     PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int y = 0; y < img.height; ++y)
            png_write_row(png, bytes.data() + std::size_t(y) * std::size_t(img.width * img.channels));
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path &path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw Error(ErrorKind::MissingImage, path.string());
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
    png_infop info = png_create_info_struct(png);
    Image out;
    try {
        png_init_io(png, fp.get());
        png_read_info(png, info);
        const int w = int(png_get_image_width(png, info));
        const int h = int(png_get_image_height(png, info));
        const int color = png_get_color_type(png, info);
        const int depth = png_get_bit_depth(png, info);
        if (depth == 16) png_set_strip_16(png);
        if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
        png_set_strip_alpha(png);
        png_read_update_info(png, info);
        const std::size_t stride = png_get_rowbytes(png, info);
        require(stride == std::size_t(w) * 3, ErrorKind::DataError, "unexpected PNG layout");
        std::vector<png_byte> bytes(stride * std::size_t(h));
        std::vector<png_bytep> rows(static_cast<std::size_t>(h));
        for (int y = 0; y < h; ++y) rows[std::size_t(y)] = bytes.data() + stride * std::size_t(y);
        png_read_image(png, rows.data());
        out = Image(w, h, 3);
        for (std::size_t i = 0; i < bytes.size(); ++i) out.data[Eigen::Index(i)] = bytes[i] / 255.0;
    } catch (...) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

void write_npy(const std::filesystem::path &path, const Image &img) {
    std::ofstream os(path, std::ios::binary);
    require(bool(os), ErrorKind::DataError, "cannot write " + path.string());
    std::string header = "{'descr': '<f4', 'fortran_order': False, 'shape': (" + std::to_string(img.height) +
                         ", " + std::to_string(img.width) + ", " + std::to_string(img.channels) + "), }";
    const std::size_t unpadded = 10 + header.size() + 1;
    header.append((64 - unpadded % 64) % 64, ' ');
    header.push_back('\n');
    const char magic[] = "\x93NUMPY\x01\x00";
    os.write(magic, 8);
    const std::uint16_t len = std::uint16_t(header.size());
    os.write(reinterpret_cast<const char *>(&len), 2);
    os.write(header.data(), std::streamsize(header.size()));
    const Eigen::ArrayXf data = img.data.cast<float>();
    os.write(reinterpret_cast<const char *>(data.data()), std::streamsize(data.size() * 4));
}

Image read_npy(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::MissingImage, path.string());
    char magic[8];
    is.read(magic, 8);
    require(bool(is) && std::memcmp(magic, "\x93NUMPY", 6) == 0, ErrorKind::DataError,
            "not an NPY file: " + path.string());
    std::uint16_t len = 0;
    is.read(reinterpret_cast<char *>(&len), 2);
    std::string header(len, '\0');
    is.read(header.data(), len);
    require(header.find("'<f4'") != std::string::npos && header.find("False") != std::string::npos,
            ErrorKind::DataError, "NPY must be little-endian float32, C order");
    const auto open = header.find('('), close = header.find(')');
    require(open != std::string::npos && close != std::string::npos, ErrorKind::ParseError, "NPY shape");
    std::string dims = header.substr(open + 1, close - open - 1);
    std::replace(dims.begin(), dims.end(), ',', ' ');
    std::istringstream ds(dims);
    std::vector<int> shape;
    for (int d; ds >> d;) shape.push_back(d);
    require(shape.size() == 2 || shape.size() == 3, ErrorKind::ShapeMismatch, "NPY must be HxW or HxWxC");
    Image img(shape[1], shape[0], shape.size() == 3 ? shape[2] : 1);
    Eigen::ArrayXf data(img.size());
    is.read(reinterpret_cast<char *>(data.data()), std::streamsize(data.size() * 4));
    require(bool(is), ErrorKind::DataError, "truncated NPY " + path.string());
    img.data = data.cast<double>();
    return img;
}

} // namespace slidesplat
