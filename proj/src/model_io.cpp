// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/model_io.hpp"

#include "slidesplat/error.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace slidesplat {
namespace {

static_assert(std::endian::native == std::endian::little, "blob IO assumes a little-endian host");

class Writer {
public:
    template <typename T> void put(T v) {
        const auto *p = reinterpret_cast<const std::uint8_t *>(&v);
        out.insert(out.end(), p, p + sizeof(T));
    }
    template <typename Derived> void floats(const Eigen::DenseBase<Derived> &m) {
        // Row-major traversal regardless of the source storage order.
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) put(float(m(r, c)));
    }
    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t> &b) : bytes(b) {}
    template <typename T> T get() {
        require(at + sizeof(T) <= bytes.size(), ErrorKind::ParseError, "model blob is truncated");
        T v;
        std::memcpy(&v, bytes.data() + at, sizeof(T));
        at += sizeof(T);
        return v;
    }
    template <typename Derived> void floats(Eigen::PlainObjectBase<Derived> &m, Eigen::Index rows, Eigen::Index cols) {
        m.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = double(get<float>());
    }
    std::uint32_t count(std::uint32_t limit, const char *what) {
        const auto v = get<std::uint32_t>();
        require(v <= limit, ErrorKind::ParseError, std::string("implausible ") + what + " in model blob");
        return v;
    }
    const std::vector<std::uint8_t> &bytes;
    std::size_t at = 0;
};

constexpr std::uint32_t kMaxGaussians = 1u << 26;
constexpr std::uint32_t kMaxSmall = 4096;

} // namespace

std::vector<std::uint8_t> encode_model(const WindowModel &model) {
    const GaussianSet &g = model.canonical;
    g.validate();
    Writer w;
    for (char c : kModelMagic) w.put(c);
    w.put(kModelVersion);
    w.put(std::uint32_t(g.size()));
    w.put(std::uint32_t(g.modes()));
    w.put(std::uint32_t(g.sh_degree));
    w.put(std::int32_t(model.window.start));
    w.put(std::int32_t(model.window.end));
    w.put(std::uint32_t(model.mode));
    w.put(std::uint64_t(model.seed));
    w.put(std::uint32_t(model.iterations));
    w.put(float(model.final_loss));
    w.floats(g.means);
    w.floats(g.rotations);
    w.floats(g.log_scales);
    w.floats(g.opacity_logits);
    w.floats(g.sh);
    w.floats(g.alpha);

    const MlpConfig &cfg = model.mlp.config;
    w.put(std::uint32_t(cfg.modes));
    w.put(std::uint32_t(cfg.frequencies));
    w.put(std::uint32_t(cfg.depth));
    w.put(std::uint32_t(cfg.width));
    w.put(std::uint32_t(cfg.skip_after.size()));
    for (int s : cfg.skip_after) w.put(std::uint32_t(s));
    w.put(std::uint32_t(model.mlp.layers.size()));
    for (const TunableLayer &l : model.mlp.layers) {
        w.put(std::uint32_t(l.in_features()));
        w.put(std::uint32_t(l.out_features()));
        w.put(std::uint32_t(l.activation == Activation::Relu ? 0 : 1));
        for (const auto &m : l.weights) w.floats(m);
        w.floats(l.biases);
    }
    w.floats(model.norm.mean.transpose());
    w.floats(model.norm.stddev.transpose());
    return std::move(w.out);
}

WindowModel decode_model(const std::vector<std::uint8_t> &bytes) {
    Reader r(bytes);
    for (char c : kModelMagic) require(r.get<char>() == c, ErrorKind::ParseError, "bad model blob magic");
    const auto version = r.get<std::uint32_t>();
    require(version == kModelVersion, ErrorKind::ParseError,
            "unsupported model blob version " + std::to_string(version));
    WindowModel model;
    const Eigen::Index n = r.count(kMaxGaussians, "Gaussian count");
    const int modes = int(r.count(kMaxSmall, "mode count"));
    const int degree = int(r.count(1, "SH degree"));
    require(modes >= 1, ErrorKind::ParseError, "model blob has no alpha modes");
    model.window.start = r.get<std::int32_t>();
    model.window.end = r.get<std::int32_t>();
    require(model.window.start >= 0 && model.window.end >= model.window.start, ErrorKind::ParseError,
            "model blob frame range is invalid");
    const auto mode = r.count(2, "deformation mode");
    model.mode = DeformationMode(mode);
    model.seed = r.get<std::uint64_t>();
    model.iterations = int(r.get<std::uint32_t>());
    model.final_loss = double(r.get<float>());

    GaussianSet &g = model.canonical;
    g.sh_degree = degree;
    r.floats(g.means, n, 3);
    r.floats(g.rotations, n, 4);
    r.floats(g.log_scales, n, 3);
    r.floats(g.opacity_logits, n, 1);
    r.floats(g.sh, n, 3 * sh_coeff_count(degree));
    r.floats(g.alpha, n, modes);

    MlpConfig cfg;
    cfg.modes = int(r.count(kMaxSmall, "MLP mode count"));
    cfg.frequencies = int(r.count(64, "frequency count"));
    cfg.depth = int(r.count(kMaxSmall, "MLP depth"));
    cfg.width = int(r.count(kMaxSmall, "MLP width"));
    cfg.skip_after.resize(r.count(kMaxSmall, "skip count"));
    for (int &s : cfg.skip_after) s = int(r.get<std::uint32_t>());
    require(cfg.modes == modes, ErrorKind::ParseError, "MLP and alpha disagree on the mode count");
    std::mt19937_64 rng(0);
    model.mlp = DynamicMlp(cfg, rng);
    const auto layers = r.count(kMaxSmall, "layer count");
    require(layers == model.mlp.layers.size(), ErrorKind::ParseError, "MLP layer count does not match its config");
    for (TunableLayer &l : model.mlp.layers) {
        const int f_in = int(r.get<std::uint32_t>()), f_out = int(r.get<std::uint32_t>());
        const auto act = r.count(1, "activation");
        require(f_in == l.in_features() && f_out == l.out_features(), ErrorKind::ParseError,
                "MLP layer shape does not match its config");
        l.activation = act == 0 ? Activation::Relu : Activation::Linear;
        for (auto &m : l.weights) r.floats(m, f_in, f_out);
        r.floats(l.biases, modes, f_out);
    }
    Eigen::MatrixXd stats;
    r.floats(stats, 2, 3);
    model.norm.mean = stats.row(0).transpose();
    model.norm.stddev = stats.row(1).transpose();
    require(r.at == bytes.size(), ErrorKind::ParseError, "trailing bytes after model blob");
    g.validate();
    return model;
}

std::uint32_t crc32_of(const std::vector<std::uint8_t> &bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    crc = crc32(crc, bytes.data(), uInt(bytes.size()));
    return std::uint32_t(crc);
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::DataError, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path &path, const std::vector<std::uint8_t> &bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    // Write to a sibling and rename so an interrupted run never leaves a torn checkpoint.
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        require(bool(os), ErrorKind::DataError, "cannot write " + tmp.string());
        os.write(reinterpret_cast<const char *>(bytes.data()), std::streamsize(bytes.size()));
        require(bool(os), ErrorKind::DataError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::uint32_t save_model(const std::filesystem::path &path, const WindowModel &model) {
    const auto bytes = encode_model(model);
    write_file_bytes(path, bytes);
    return crc32_of(bytes);
}

WindowModel load_model(const std::filesystem::path &path, const std::uint32_t *expected_crc) {
    const auto bytes = read_file_bytes(path);
    if (expected_crc && crc32_of(bytes) != *expected_crc)
        throw Error(ErrorKind::DataError, "checksum mismatch for " + path.string());
    try {
        return decode_model(bytes);
    } catch (const Error &e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

} // namespace slidesplat
