// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/dataset.hpp"

#include "slidesplat/error.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace slidesplat {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFallbackBlock = 4;
constexpr int kFallbackRadius = 3;

json camera_to_json(const Camera &cam, const std::string &id) {
    std::vector<double> pose;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) pose.push_back(cam.pose(r, c));
    return {{"id", id},
            {"fx", cam.intrinsics.fx},
            {"fy", cam.intrinsics.fy},
            {"cx", cam.intrinsics.cx},
            {"cy", cam.intrinsics.cy},
            {"pose", pose}};
}

CameraRig rig_from_json(const json &cams, int width, int height, const char *what) {
    require(cams.is_array(), ErrorKind::ConfigError, std::string(what) + " must be an array");
    CameraRig rig;
    for (const json &c : cams) {
        Camera cam;
        cam.width = width;
        cam.height = height;
        cam.intrinsics.fx = c.at("fx").get<double>();
        cam.intrinsics.fy = c.at("fy").get<double>();
        cam.intrinsics.cx = c.value("cx", (width - 1) / 2.0);
        cam.intrinsics.cy = c.value("cy", (height - 1) / 2.0);
        const auto pose = c.at("pose").get<std::vector<double>>();
        require(pose.size() == 16, ErrorKind::ConfigError, "camera pose needs 16 numbers");
        for (int r = 0; r < 4; ++r)
            for (int k = 0; k < 4; ++k) cam.pose(r, k) = pose[std::size_t(r * 4 + k)];
        rig.cameras.push_back(cam);
        rig.ids.push_back(c.at("id").get<std::string>());
    }
    return rig;
}

} // namespace

std::string frame_name(int frame, const char *extension) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d.%s", frame, extension);
    return buf;
}

SequenceDataset SequenceDataset::open(const fs::path &dataset_json) {
    std::ifstream is(dataset_json);
    if (!is) throw Error(ErrorKind::ConfigError, "cannot open dataset description " + dataset_json.string());
    SequenceDataset d;
    d.root = dataset_json.parent_path();
    try {
        const json j = json::parse(is);
        d.frames = j.at("frames").get<int>();
        d.width = j.at("width").get<int>();
        d.height = j.at("height").get<int>();
        require(d.frames >= 1 && d.width >= 1 && d.height >= 1, ErrorKind::ConfigError,
                "dataset frames and resolution must be positive");
        d.rig = rig_from_json(j.at("cameras"), d.width, d.height, "cameras");
        if (j.contains("held_out")) d.held_out = rig_from_json(j.at("held_out"), d.width, d.height, "held_out");
        d.images_dir = j.value("images", std::string("images"));
        if (j.contains("flow")) d.flow_dir = j.at("flow").get<std::string>();
        if (j.contains("points")) d.points_file = j.at("points").get<std::string>();
        if (j.contains("points_per_frame")) d.points_dir = j.at("points_per_frame").get<std::string>();
        if (j.contains("background")) {
            const auto bg = j.at("background").get<std::vector<double>>();
            require(bg.size() == 3, ErrorKind::ConfigError, "background needs 3 values");
            d.background = Vec3<double>(bg[0], bg[1], bg[2]);
        }
    } catch (const json::exception &e) {
        throw Error(ErrorKind::ConfigError, dataset_json.string() + ": " + e.what());
    }
    d.rig.validate();
    if (d.held_out.size() > 0) d.held_out.validate();
    return d;
}

void SequenceDataset::save(const fs::path &dataset_json) const {
    json j;
    j["frames"] = frames;
    j["width"] = width;
    j["height"] = height;
    j["cameras"] = json::array();
    for (std::size_t v = 0; v < rig.size(); ++v) j["cameras"].push_back(camera_to_json(rig.cameras[v], rig.ids[v]));
    if (held_out.size() > 0) {
        j["held_out"] = json::array();
        for (std::size_t v = 0; v < held_out.size(); ++v)
            j["held_out"].push_back(camera_to_json(held_out.cameras[v], held_out.ids[v]));
    }
    j["images"] = images_dir;
    if (flow_dir) j["flow"] = *flow_dir;
    if (points_file) j["points"] = *points_file;
    if (points_dir) j["points_per_frame"] = *points_dir;
    j["background"] = {background.x(), background.y(), background.z()};
    if (dataset_json.has_parent_path()) fs::create_directories(dataset_json.parent_path());
    std::ofstream os(dataset_json);
    require(bool(os), ErrorKind::DataError, "cannot write " + dataset_json.string());
    os << j.dump(2) << '\n';
}

fs::path SequenceDataset::image_path(const std::string &camera_id, int frame, bool held) const {
    return root / images_dir / (held ? "held_out" : "") / camera_id / frame_name(frame, "png");
}

fs::path SequenceDataset::flow_path(const std::string &camera_id, int frame) const {
    require(bool(flow_dir), ErrorKind::MissingFlow, "dataset has no flow directory");
    return root / *flow_dir / camera_id / frame_name(frame, "flo");
}

namespace {

MultiViewSequence load_images(const SequenceDataset &d, const CameraRig &rig, bool held) {
    MultiViewSequence seq;
    seq.rig = rig;
    seq.images.resize(rig.size());
    for (std::size_t v = 0; v < rig.size(); ++v)
        for (int f = 0; f < d.frames; ++f) {
            const fs::path p = d.image_path(rig.ids[v], f, held);
            Image img = read_png(p);
            if (img.width != d.width || img.height != d.height)
                throw Error(ErrorKind::DataError, p.string() + " is " + std::to_string(img.width) + "x" +
                                                      std::to_string(img.height) + ", expected " +
                                                      std::to_string(d.width) + "x" + std::to_string(d.height));
            seq.images[v].push_back(std::move(img));
        }
    return seq;
}

} // namespace

MultiViewSequence SequenceDataset::load_training() const { return load_images(*this, rig, false); }

MultiViewSequence SequenceDataset::load_held_out() const {
    if (held_out.size() == 0) return {};
    return load_images(*this, held_out, true);
}

std::vector<std::vector<FlowField>> SequenceDataset::load_flows(const MultiViewSequence &images) const {
    std::vector<std::vector<FlowField>> flows(rig.size());
    for (std::size_t v = 0; v < rig.size(); ++v)
        for (int f = 0; f + 1 < frames; ++f) {
            if (flow_dir) {
                const fs::path p = flow_path(rig.ids[v], f);
                if (!fs::exists(p))
                    throw Error(ErrorKind::MissingFlow,
                                "view " + rig.ids[v] + " frame " + std::to_string(f) + ": " + p.string());
                flows[v].push_back(read_flo(p));
            } else {
                flows[v].push_back(naive_block_flow(images.image(v, f), images.image(v, f + 1), kFallbackBlock,
                                                    kFallbackRadius));
            }
        }
    return flows;
}

PointCloud read_point_cloud(const fs::path &path) {
    std::ifstream is(path);
    if (!is) throw Error(ErrorKind::EmptySeedCloud, "cannot open seed points " + path.string());
    std::vector<double> vals;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        double x[6];
        for (double &v : x)
            if (!(ls >> v))
                throw Error(ErrorKind::ParseError, path.string() + ":" + std::to_string(line_no) +
                                                       ": expected \"x y z r g b\"");
        vals.insert(vals.end(), x, x + 6);
    }
    PointCloud cloud;
    const Eigen::Index n = Eigen::Index(vals.size() / 6);
    cloud.positions.resize(n, 3);
    cloud.colors.resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < 3; ++c) {
            cloud.positions(i, c) = vals[std::size_t(i * 6 + c)];
            cloud.colors(i, c) = vals[std::size_t(i * 6 + 3 + c)];
        }
    if (n == 0) throw Error(ErrorKind::EmptySeedCloud, path.string() + " holds no points");
    return cloud;
}

void write_point_cloud(const fs::path &path, const PointCloud &cloud) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    require(bool(os), ErrorKind::DataError, "cannot write " + path.string());
    os.precision(17);
    for (Eigen::Index i = 0; i < cloud.size(); ++i) {
        os << cloud.positions(i, 0) << ' ' << cloud.positions(i, 1) << ' ' << cloud.positions(i, 2) << ' '
           << cloud.colors(i, 0) << ' ' << cloud.colors(i, 1) << ' ' << cloud.colors(i, 2) << '\n';
    }
}

PointCloud SequenceDataset::seed_points(int central_frame) const {
    if (points_dir) {
        const fs::path p = root / *points_dir / frame_name(central_frame, "txt");
        if (fs::exists(p)) return read_point_cloud(p);
    }
    if (points_file) return read_point_cloud(root / *points_file);
    throw Error(ErrorKind::EmptySeedCloud, "dataset has no seed points for frame " + std::to_string(central_frame));
}

SequenceDataset write_synthetic_dataset(const SyntheticScene &scene, const fs::path &dir) {
    const SyntheticSpec &s = scene.spec;
    SequenceDataset d;
    d.root = dir;
    d.frames = s.frames;
    d.width = s.width;
    d.height = s.height;
    d.rig = scene.train.rig;
    d.held_out = scene.held_out.rig;
    d.flow_dir = "flow";
    d.points_dir = "points";
    d.points_file = "points.txt";
    d.background = scene.background;
    for (std::size_t v = 0; v < d.rig.size(); ++v) {
        fs::create_directories(d.image_path(d.rig.ids[v], 0).parent_path());
        for (int f = 0; f < d.frames; ++f) write_png(d.image_path(d.rig.ids[v], f), scene.train.image(v, f));
        fs::create_directories(d.flow_path(d.rig.ids[v], 0).parent_path());
        for (int f = 0; f + 1 < d.frames; ++f)
            write_flo(d.flow_path(d.rig.ids[v], f), scene.flows[v][std::size_t(f)]);
    }
    for (std::size_t v = 0; v < d.held_out.size(); ++v) {
        fs::create_directories(d.image_path(d.held_out.ids[v], 0, true).parent_path());
        for (int f = 0; f < d.frames; ++f)
            write_png(d.image_path(d.held_out.ids[v], f, true), scene.held_out.image(v, f));
    }
    for (int f = 0; f < d.frames; ++f)
        write_point_cloud(dir / *d.points_dir / frame_name(f, "txt"), scene.seeds[std::size_t(f)]);
    write_point_cloud(dir / *d.points_file, scene.seeds[std::size_t(d.frames / 2)]);
    d.save(dir / "dataset.json");
    return d;
}

} // namespace slidesplat
