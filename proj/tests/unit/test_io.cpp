// SPDX-License-Identifier: Apache-2.0
#include "slidesplat/dataset.hpp"
#include "slidesplat/error.hpp"
#include "slidesplat/loss.hpp"
#include "slidesplat/metrics.hpp"
#include "slidesplat/model_io.hpp"

#include "support/fixtures.hpp"
#include "support/scenes.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

using namespace slidesplat;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("slidesplat_io_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

WindowModel small_model() {
    static const WindowModel m = [] {
        const SyntheticScene s = generate_synthetic_scene(fixtures::tiny_spec());
        return train_window(s.seeds[1], s.train, {0, 3}, fixtures::quick_train(20, 8));
    }();
    return m;
}

template <typename A> double max_abs_diff(const A &a, const A &b) { return (a - b).cwiseAbs().maxCoeff(); }

} // namespace

TEST(ImageIo, PngRoundTripQuantizesToEightBits) {
    std::mt19937_64 rng(1);
    const Image img = fixtures::random_image(9, 7, 3, rng, 0.0, 1.0);
    const fs::path p = scratch("png") / "a.png";
    write_png(p, img);
    const Image back = read_png(p);
    ASSERT_EQ(back.width, 9);
    ASSERT_EQ(back.height, 7);
    ASSERT_EQ(back.channels, 3);
    EXPECT_LE((back.data - img.data).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
}

TEST(ImageIo, NpyRoundTripIsExactForFloat32Values) {
    std::mt19937_64 rng(2);
    Image img = fixtures::random_image(5, 4, 3, rng);
    img.data = img.data.cast<float>().cast<double>();
    const fs::path p = scratch("npy") / "a.npy";
    write_npy(p, img);
    const Image back = read_npy(p);
    EXPECT_TRUE((back.data == img.data).all());
}

TEST(ImageIo, MissingPngIsReported) {
    try {
        read_png(scratch("missing") / "nope.png");
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingImage);
    }
}

TEST(ModelIo, RoundTripPreservesEveryFieldAtFloatPrecision) {
    const WindowModel m = small_model();
    const WindowModel back = decode_model(encode_model(m));
    EXPECT_EQ(back.window, m.window);
    EXPECT_EQ(back.mode, m.mode);
    EXPECT_EQ(back.seed, m.seed);
    EXPECT_EQ(back.iterations, m.iterations);
    EXPECT_EQ(back.canonical.size(), m.canonical.size());
    EXPECT_EQ(back.canonical.sh_degree, m.canonical.sh_degree);
    EXPECT_LT(max_abs_diff(back.canonical.means, m.canonical.means), 1e-6);
    EXPECT_LT(max_abs_diff(back.canonical.sh, m.canonical.sh), 1e-5);
    EXPECT_LT(max_abs_diff(back.canonical.alpha, m.canonical.alpha), 1e-6);
    EXPECT_LT(max_abs_diff(back.mlp.parameters(), m.mlp.parameters()), 1e-6);
    EXPECT_EQ(back.mlp.config.skip_after, m.mlp.config.skip_after);
    EXPECT_LT(max_abs_diff(back.norm.stddev, m.norm.stddev), 1e-6);
    // A second pass is exact: the blob is already float32.
    EXPECT_EQ(encode_model(back), encode_model(m));
    EXPECT_LT(max_abs_diff(back.at_frame(2).means, m.at_frame(2).means), 1e-5);
}

TEST(ModelIo, CorruptBlobsAreRejected) {
    std::vector<std::uint8_t> bytes = encode_model(small_model());
    auto expect_parse_error = [](const std::vector<std::uint8_t> &b) {
        try {
            decode_model(b);
            FAIL();
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::ParseError);
        }
    };
    std::vector<std::uint8_t> bad = bytes;
    bad[0] = 'X';
    expect_parse_error(bad);
    bad = bytes;
    bad[4] = 9; // version
    expect_parse_error(bad);
    expect_parse_error({bytes.begin(), bytes.begin() + std::ptrdiff_t(bytes.size() / 2)});
    bad = bytes;
    bad.push_back(0);
    expect_parse_error(bad);
}

TEST(ModelIo, ChecksumMismatchIsADataError) {
    const fs::path p = scratch("blob") / "w.ssm";
    const std::uint32_t crc = save_model(p, small_model());
    EXPECT_EQ(crc, crc32_of(read_file_bytes(p)));
    EXPECT_NO_THROW(load_model(p, &crc));
    std::vector<std::uint8_t> bytes = read_file_bytes(p);
    bytes[bytes.size() - 3] ^= 0x5a;
    write_file_bytes(p, bytes);
    try {
        load_model(p, &crc);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::DataError);
    }
}

TEST(ModelIo, Crc32MatchesKnownVector) {
    const std::string s = "123456789";
    EXPECT_EQ(crc32_of({s.begin(), s.end()}), 0xCBF43926u);
}

TEST(Dataset, SyntheticRoundTripThroughDisk) {
    const SyntheticScene scene = generate_synthetic_scene(fixtures::tiny_spec());
    const fs::path dir = scratch("dataset");
    write_synthetic_dataset(scene, dir);
    const SequenceDataset d = SequenceDataset::open(dir / "dataset.json");
    EXPECT_EQ(d.frames, scene.spec.frames);
    ASSERT_EQ(d.rig.size(), scene.train.rig.size());
    EXPECT_LT((d.rig.cameras[1].pose - scene.train.rig.cameras[1].pose).norm(), 1e-12);
    const MultiViewSequence train = d.load_training();
    EXPECT_LE((train.image(1, 2).data - scene.train.image(1, 2).data).cwiseAbs().maxCoeff(), 0.5 / 255.0 + 1e-12);
    EXPECT_EQ(d.load_held_out().rig.size(), 1u);
    const auto flows = d.load_flows(train);
    EXPECT_LT((flows[0][1].data - scene.flows[0][1].data).cwiseAbs().maxCoeff(), 1e-5);
    const PointCloud pc = d.seed_points(2);
    EXPECT_EQ(pc.size(), scene.seeds[2].size());
    EXPECT_LT((pc.positions - scene.seeds[2].positions).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Dataset, MissingImageNamesTheFile) {
    const SyntheticScene scene = generate_synthetic_scene(fixtures::tiny_spec());
    const fs::path dir = scratch("dataset_missing");
    const SequenceDataset d = write_synthetic_dataset(scene, dir);
    fs::remove(d.image_path(d.rig.ids[1], 2));
    try {
        d.load_training();
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingImage);
        EXPECT_NE(std::string(e.what()).find("0002.png"), std::string::npos) << e.what();
    }
}

TEST(Dataset, NoFlowDirectoryFallsBackToBlockMatching) {
    const SyntheticScene scene = generate_synthetic_scene(fixtures::tiny_spec());
    const fs::path dir = scratch("dataset_noflow");
    SequenceDataset d = write_synthetic_dataset(scene, dir);
    d.flow_dir.reset();
    const MultiViewSequence train = d.load_training();
    const auto flows = d.load_flows(train);
    ASSERT_EQ(flows.size(), d.rig.size());
    EXPECT_EQ(flows[0].size(), std::size_t(d.frames - 1));
    EXPECT_TRUE((flows[0][0].data == naive_block_flow(train.image(0, 0), train.image(0, 1), 4, 3).data).all());
}

TEST(Dataset, MalformedDescriptionsAreConfigErrors) {
    const fs::path dir = scratch("dataset_bad");
    for (const char *text : {R"({"frames": 2})", R"({"frames": -1, "width": 4, "height": 4, "cameras": []})",
                             R"({"frames": 2, "width": 4, "height": 4, "cameras": [{"id": "a"}]})"}) {
        std::ofstream(dir / "dataset.json") << text;
        EXPECT_THROW(SequenceDataset::open(dir / "dataset.json"), Error) << text;
    }
    std::ofstream(dir / "dataset.json") << "{ not json";
    EXPECT_THROW(SequenceDataset::open(dir / "dataset.json"), Error);
}

TEST(Dataset, PointCloudTextRoundTrip) {
    PointCloud pc;
    pc.positions.resize(2, 3);
    pc.positions << 0.5, -1.25, 3, 1e-3, 2, 7;
    pc.colors.resize(2, 3);
    pc.colors << 0, 0.5, 1, 0.25, 0.75, 0.125;
    const fs::path p = scratch("points") / "p.txt";
    write_point_cloud(p, pc);
    const PointCloud back = read_point_cloud(p);
    EXPECT_LT((back.positions - pc.positions).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((back.colors - pc.colors).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(frame_name(7, "png"), "0007.png");
}

TEST(Metrics, IdenticalImagesHitTheCap) {
    std::mt19937_64 rng(3);
    const Image a = fixtures::random_image(12, 12, 3, rng, 0.0, 1.0);
    const MetricsReport r = compute_metrics({a, a}, {a, a});
    EXPECT_EQ(r.frames[0].psnr, kPsnrCap);
    EXPECT_NEAR(r.frames[0].ssim, 1.0, 1e-12);
    ASSERT_EQ(r.neighbor_l1.size(), 1u);
    EXPECT_EQ(r.neighbor_l1[0], 0.0);
}

TEST(Metrics, KnownMseGivesKnownPsnr) {
    Image a(8, 8, 3, 0.5), b(8, 8, 3, 0.6); // MSE 0.01
    const MetricsReport r = compute_metrics({a}, {b});
    EXPECT_NEAR(r.frames[0].psnr, 20.0, 1e-9);
    EXPECT_NEAR(r.mean_psnr, 20.0, 1e-9);
}

TEST(Metrics, NeighborL1FollowsRenderOrder) {
    Image a(4, 4, 3, 0.0), b(4, 4, 3, 0.25), c(4, 4, 3, 1.0);
    const MetricsReport r = compute_metrics({a, b, c}, {a, b, c});
    ASSERT_EQ(r.neighbor_l1.size(), 2u);
    EXPECT_NEAR(r.neighbor_l1[0], 0.25, 1e-15);
    EXPECT_NEAR(r.neighbor_l1[1], 0.75, 1e-15);
}

TEST(Metrics, CheckerboardAgainstItsInverseHasNegativeSsim) {
    Image a(16, 16, 1), b(16, 16, 1);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            a.at(x, y, 0) = (x + y) % 2;
            b.at(x, y, 0) = 1.0 - a.at(x, y, 0);
        }
    const double s = compute_metrics({a}, {b}).frames[0].ssim;
    EXPECT_LT(s, 0.0);
    EXPECT_NEAR(s, ssim(a, b), 1e-15);
}

TEST(Metrics, LengthMismatchThrows) {
    Image a(4, 4, 3);
    EXPECT_THROW(compute_metrics({a, a}, {a}), Error);
    EXPECT_THROW(compute_metrics({a}, {Image(5, 4, 3)}), Error);
}
