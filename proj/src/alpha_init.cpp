// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/alpha_init.hpp"

#include "slidesplat/error.hpp"

#include <cmath>
#include <limits>

namespace slidesplat {

Eigen::MatrixXd DynamicMask::alpha(int modes) const {
    const Eigen::Index n = Eigen::Index(labels.size());
    if (modes == 1) return Eigen::MatrixXd::Ones(n, 1);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, modes);
    for (Eigen::Index i = 0; i < n; ++i) a(i, labels[std::size_t(i)] ? 1 : 0) = 1.0;
    return a;
}

namespace {

double sample(const Image &img, int x, int y, int c, bool neighborhood) {
    if (!neighborhood) return img.at(x, y, c);
    double sum = 0.0;
    int count = 0;
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            const int xx = x + dx, yy = y + dy;
            if (xx < 0 || yy < 0 || xx >= img.width || yy >= img.height) continue;
            sum += img.at(xx, yy, c);
            ++count;
        }
    return sum / count;
}

} // namespace

DynamicMask init_alpha(const GaussianSet &set, const CameraRig &rig,
                       const std::vector<std::vector<Image>> &frames, int central_frame,
                       const AlphaInitOptions &opts) {
    require(frames.size() == rig.size(), ErrorKind::ShapeMismatch, "one frame list per camera");
    for (const auto &view : frames)
        require(!view.empty(), ErrorKind::EmptyWindow, "window has no frames");
    DynamicMask mask;
    mask.labels.assign(std::size_t(set.size()), 0);
    mask.votes.assign(std::size_t(set.size()), std::numeric_limits<double>::quiet_NaN());
    for (Eigen::Index i = 0; i < set.size(); ++i) {
        const Vec3<double> mean = set.means.row(i).transpose();
        int votes = 0, dynamic = 0;
        for (std::size_t v = 0; v < rig.size(); ++v) {
            const auto px = project_point(rig.cameras[v], mean);
            if (!px) continue;
            const int x = int(std::lround(px->x())), y = int(std::lround(px->y()));
            const Image &center = frames[v][std::size_t(central_frame)];
            if (x < 0 || y < 0 || x >= center.width || y >= center.height) continue;
            for (std::size_t f = 0; f < frames[v].size(); ++f) {
                if (int(f) == central_frame) continue;
                double diff = 0.0;
                for (int c = 0; c < center.channels; ++c)
                    diff += std::abs(sample(frames[v][f], x, y, c, opts.neighborhood) -
                                     sample(center, x, y, c, opts.neighborhood));
                ++votes;
                if (diff > opts.pixel_threshold) ++dynamic;
            }
        }
        if (votes == 0) continue;
        const double avg = double(dynamic) / votes;
        mask.votes[std::size_t(i)] = avg;
        mask.labels[std::size_t(i)] = avg > 0.5 ? 1 : 0;
    }
    return mask;
}

} // namespace slidesplat
