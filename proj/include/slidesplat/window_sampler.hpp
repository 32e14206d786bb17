// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/image.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace slidesplat {

/// Dense 2D flow field, per-pixel (dx, dy), stored as an H x W x 2 image.
using FlowField = Image;

/// Per-transition mean squared flow magnitude averaged over views; entry i covers frame i to
/// frame i + 1.
struct FlowSummary {
    std::vector<double> per_transition;

    int frame_count() const { return int(per_transition.size()) + 1; }
    double total() const;
};

struct FrameWindow {
    int start = 0;
    int end = 0; // inclusive

    int length() const { return end - start + 1; }
    bool contains(int frame) const { return frame >= start && frame <= end; }
    bool operator==(const FrameWindow &) const = default;
};

struct WindowPlan {
    std::vector<FrameWindow> windows;
    double threshold = 0.0;

    int frame_count() const { return windows.empty() ? 0 : windows.back().end + 1; }
    /// Index of the window owning `frame`; at an overlap frame the later window wins.
    int owner_of(int frame) const;
};

/// flows[view][i] holds the flow from frame i to i + 1 for that view. Every view must supply
/// the same number of transitions; throws MissingFlow(view, frame) otherwise.
FlowSummary summarize_flow(const std::vector<std::vector<FlowField>> &flows);

/// Greedy left-to-right partition. A window closes at frame i when adding transition i would
/// push its accumulated flow above `threshold`; every window keeps at least one transition and
/// shares its last frame with the next window.
WindowPlan plan_windows(const FlowSummary &flow, double threshold);

/// Accumulated flow over the transitions inside `w`.
double window_flow(const FlowSummary &flow, const FrameWindow &w);

/// Exhaustive block matching on grayscale intensities: each block gets the integer shift within
/// `radius` minimizing SAD, ties resolved toward the smallest displacement. Partial border
/// blocks are matched over their in-image pixels.
FlowField naive_block_flow(const Image &frame_a, const Image &frame_b, int block, int radius);

/// Middlebury-style .flo: float 202021.25, int32 width, int32 height, then H x W x 2 float32,
/// all little-endian.
void write_flo(const std::filesystem::path &path, const FlowField &flow);
FlowField read_flo(const std::filesystem::path &path);

} // namespace slidesplat
