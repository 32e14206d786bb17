// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "slidesplat/synthetic.hpp"
#include "slidesplat/trainer.hpp"
#include "slidesplat/window_sampler.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace slidesplat {

/// On-disk multi-view sequence described by `dataset.json`:
///
///   {
///     "frames": 8, "width": 32, "height": 32,
///     "cameras": [{"id": "cam0", "fx": 32, "fy": 32, "cx": 15.5, "cy": 15.5,
///                  "pose": [16 numbers, row-major world-to-camera]}],
///     "held_out": [ same camera records ],        optional
///     "images": "images",                         <images>/<camera id>/<frame:04>.png
///     "flow": "flow",                             optional, <flow>/<camera id>/<frame:04>.flo
///     "points": "points.txt",                     optional, one "x y z r g b" per line
///     "points_per_frame": "points"                optional, <dir>/<frame:04>.txt
///     "background": [0, 0, 0]                     optional
///   }
///
/// Paths are relative to the directory holding dataset.json.
struct SequenceDataset {
    std::filesystem::path root;
    int frames = 0;
    int width = 0;
    int height = 0;
    CameraRig rig;
    CameraRig held_out;
    std::string images_dir = "images";
    std::optional<std::string> flow_dir;
    std::optional<std::string> points_file;
    std::optional<std::string> points_dir;
    Vec3<double> background = Vec3<double>::Zero();

    /// Parses and validates dataset.json; throws ConfigError or ParseError.
    static SequenceDataset open(const std::filesystem::path &dataset_json);
    void save(const std::filesystem::path &dataset_json) const;

    std::filesystem::path image_path(const std::string &camera_id, int frame, bool held = false) const;
    std::filesystem::path flow_path(const std::string &camera_id, int frame) const;

    /// Loads every training image; throws MissingImage or DataError (wrong resolution).
    MultiViewSequence load_training() const;
    /// Held-out images, empty when the dataset defines none.
    MultiViewSequence load_held_out() const;
    /// Flow maps from disk, or block-matching flow computed from `images` when no flow
    /// directory is configured.
    std::vector<std::vector<FlowField>> load_flows(const MultiViewSequence &images) const;
    /// Seed cloud for a window: the per-frame cloud of `central_frame` when available, the
    /// global cloud otherwise. Throws EmptySeedCloud when neither exists or it is empty.
    PointCloud seed_points(int central_frame) const;
};

std::string frame_name(int frame, const char *extension);

PointCloud read_point_cloud(const std::filesystem::path &path);
void write_point_cloud(const std::filesystem::path &path, const PointCloud &cloud);

/// Writes a synthetic scene as a dataset directory (images, held-out images, analytic flow,
/// per-frame seed clouds) and returns the dataset description.
SequenceDataset write_synthetic_dataset(const SyntheticScene &scene, const std::filesystem::path &dir);

} // namespace slidesplat
