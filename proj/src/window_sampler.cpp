// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/window_sampler.hpp"

#include "slidesplat/error.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>

namespace slidesplat {

static_assert(std::endian::native == std::endian::little, "flow IO assumes a little-endian host");

double FlowSummary::total() const {
    return std::accumulate(per_transition.begin(), per_transition.end(), 0.0);
}

int WindowPlan::owner_of(int frame) const {
    for (int w = int(windows.size()) - 1; w >= 0; --w)
        if (windows[std::size_t(w)].contains(frame)) return w;
    throw Error(ErrorKind::DataError, "frame " + std::to_string(frame) + " is outside the plan");
}

FlowSummary summarize_flow(const std::vector<std::vector<FlowField>> &flows) {
    require(!flows.empty(), ErrorKind::MissingFlow, "no views supplied");
    std::size_t transitions = 0;
    for (const auto &v : flows) transitions = std::max(transitions, v.size());
    FlowSummary out;
    out.per_transition.assign(transitions, 0.0);
    for (std::size_t view = 0; view < flows.size(); ++view) {
        for (std::size_t i = 0; i < transitions; ++i) {
            if (i >= flows[view].size() || flows[view][i].size() == 0)
                throw Error(ErrorKind::MissingFlow,
                            "view " + std::to_string(view) + ", frame " + std::to_string(i));
            const FlowField &f = flows[view][i];
            require(f.channels == 2, ErrorKind::ShapeMismatch, "flow fields need 2 channels");
            out.per_transition[i] += f.data.square().sum() / double(f.width * f.height);
        }
    }
    for (auto &v : out.per_transition) v /= double(flows.size());
    return out;
}

WindowPlan plan_windows(const FlowSummary &flow, double threshold) {
    require(threshold > 0.0, ErrorKind::ConfigError, "window threshold must be positive");
    WindowPlan plan;
    plan.threshold = threshold;
    const int transitions = int(flow.per_transition.size());
    int start = 0;
    double acc = 0.0;
    for (int i = 0; i < transitions; ++i) {
        const double v = flow.per_transition[std::size_t(i)];
        if (i > start && acc + v > threshold) {
            plan.windows.push_back({start, i});
            start = i;
            acc = 0.0;
        }
        acc += v;
    }
    plan.windows.push_back({start, transitions});
    return plan;
}

double window_flow(const FlowSummary &flow, const FrameWindow &w) {
    double acc = 0.0;
    for (int i = w.start; i < w.end; ++i) acc += flow.per_transition[std::size_t(i)];
    return acc;
}

FlowField naive_block_flow(const Image &a, const Image &b, int block, int radius) {
    require(a.same_shape(b), ErrorKind::ShapeMismatch, "block flow frames differ in shape");
    require(block > 0 && radius >= 0, ErrorKind::ConfigError, "block size and radius");
    const int w = a.width, h = a.height;
    auto gray = [](const Image &img) {
        Eigen::ArrayXXd g(img.height, img.width);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                double s = 0.0;
                for (int c = 0; c < img.channels; ++c) s += img.at(x, y, c);
                g(y, x) = s / img.channels;
            }
        return g;
    };
    const Eigen::ArrayXXd ga = gray(a), gb = gray(b);
    FlowField out(w, h, 2);
    for (int by = 0; by < h; by += block) {
        for (int bx = 0; bx < w; bx += block) {
            const int bw = std::min(block, w - bx), bh = std::min(block, h - by);
            double best = std::numeric_limits<double>::infinity();
            int best_dx = 0, best_dy = 0, best_norm = 0;
            for (int dy = -radius; dy <= radius; ++dy) {
                for (int dx = -radius; dx <= radius; ++dx) {
                    if (bx + dx < 0 || by + dy < 0 || bx + dx + bw > w || by + dy + bh > h) continue;
                    const double sad =
                        (ga.block(by, bx, bh, bw) - gb.block(by + dy, bx + dx, bh, bw)).abs().sum();
                    const int norm = dx * dx + dy * dy;
                    if (sad < best || (sad == best && norm < best_norm)) {
                        best = sad;
                        best_dx = dx;
                        best_dy = dy;
                        best_norm = norm;
                    }
                }
            }
            for (int y = by; y < by + bh; ++y)
                for (int x = bx; x < bx + bw; ++x) {
                    out.at(x, y, 0) = best_dx;
                    out.at(x, y, 1) = best_dy;
                }
        }
    }
    return out;
}

namespace {
constexpr float kFloMagic = 202021.25f;
}

void write_flo(const std::filesystem::path &path, const FlowField &flow) {
    require(flow.channels == 2, ErrorKind::ShapeMismatch, "flow fields need 2 channels");
    std::ofstream os(path, std::ios::binary);
    require(bool(os), ErrorKind::DataError, "cannot write " + path.string());
    const std::int32_t w = flow.width, h = flow.height;
    os.write(reinterpret_cast<const char *>(&kFloMagic), 4);
    os.write(reinterpret_cast<const char *>(&w), 4);
    os.write(reinterpret_cast<const char *>(&h), 4);
    const Eigen::ArrayXf data = flow.data.cast<float>();
    os.write(reinterpret_cast<const char *>(data.data()), std::streamsize(data.size() * 4));
}

FlowField read_flo(const std::filesystem::path &path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorKind::MissingFlow, path.string());
    float magic = 0;
    std::int32_t w = 0, h = 0;
    is.read(reinterpret_cast<char *>(&magic), 4);
    is.read(reinterpret_cast<char *>(&w), 4);
    is.read(reinterpret_cast<char *>(&h), 4);
    require(bool(is) && magic == kFloMagic && w > 0 && h > 0, ErrorKind::DataError,
            "bad .flo header in " + path.string());
    Eigen::ArrayXf data(Eigen::Index(w) * h * 2);
    is.read(reinterpret_cast<char *>(data.data()), std::streamsize(data.size() * 4));
    require(bool(is), ErrorKind::DataError, "truncated .flo " + path.string());
    FlowField f(w, h, 2);
    f.data = data.cast<double>();
    return f;
}

} // namespace slidesplat
