#include <gtest/gtest.h>

#include <filesystem>

#include "support.hpp"

using namespace clutchshape;
using Eigen::Vector3d;

namespace fs = std::filesystem;

TEST(Rmse, SelfIsZeroAndSinglePairIsDistance) {
    std::mt19937_64 rng(1);
    const PointCloud c = testsupport::dome_cloud(30, rng);
    EXPECT_EQ(rmse(c, c), 0.0);

    const PointCloud a{{Vector3d(0.1, 0.2, 0.3)}};
    const PointCloud b{{Vector3d(0.1, 0.2, 0.3 + 0.0042)}};
    EXPECT_NEAR(rmse(a, b), 0.0042, 1e-15);
    EXPECT_THROW(rmse(PointCloud{}, b), InvalidInput);
}

TEST(BestFit, RecoversExactCorrespondences) {
    std::mt19937_64 rng(2);
    const PointCloud c = testsupport::dome_cloud(10, rng);
    RigidTransform t;
    t.rotation = testsupport::random_rotation(rng, kPi);
    t.translation = Vector3d(0.3, -0.2, 0.1);
    const auto fit = best_fit_transform(c.points, t.apply(c).points);
    EXPECT_LT((fit.rotation - t.rotation).norm(), 1e-12);
    EXPECT_LT((fit.translation - t.translation).norm(), 1e-12);
}

TEST(BestFit, CollinearPointsRejected) {
    std::vector<Vector3d> line;
    for (int i = 0; i < 5; ++i) line.emplace_back(i, 2.0 * i, 0.0);
    EXPECT_THROW(best_fit_transform(line, line), InvalidInput);
}

TEST(Icp, RecoversRandomRigidTransforms) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> tr(-0.02, 0.02);
    const PointCloud target = testsupport::dome_cloud(40, rng);
    for (int trial = 0; trial < 10; ++trial) {
        RigidTransform t;
        t.rotation = testsupport::random_rotation(rng, kPi / 6.0);
        t.translation = Vector3d(tr(rng), tr(rng), tr(rng));
        const PointCloud source = t.inverse().apply(target);
        const IcpResult r = icp_align(source, target, 200, 1e-12);
        EXPECT_LT((r.transform.rotation - t.rotation).norm(), 1e-6) << trial;
        EXPECT_LT((r.transform.translation - t.translation).norm(), 1e-6) << trial;
        EXPECT_LT(r.rmse, 1e-6);
    }
}

TEST(Icp, NoisyCloudRmseTracksNoise) {
    std::mt19937_64 rng(4);
    const PointCloud reference = testsupport::dome_cloud(200, rng);
    const double sigma = 0.002;
    std::normal_distribution<double> noise(0.0, sigma);
    std::uniform_real_distribution<double> u(-0.06, 0.06);
    PointCloud noisy;
    for (int i = 0; i < 2000; ++i) {
        const double x = u(rng), y = u(rng);
        noisy.points.push_back(Vector3d(x, y, testsupport::dome_z(x, y)) + noise(rng) * testsupport::dome_normal(x, y));
    }
    const double e = icp_align(noisy, reference).rmse;
    EXPECT_GT(e, 0.75 * sigma);
    EXPECT_LT(e, 1.25 * sigma);
}

TEST(Filters, OutlierRemovalDropsFarPoints) {
    std::mt19937_64 rng(5);
    PointCloud c = testsupport::dome_cloud(30, rng);
    const std::size_t n = c.size();
    c.points.emplace_back(0.5, 0.5, 0.5);
    c.points.emplace_back(-0.4, 0.3, -0.6);
    const PointCloud kept = statistical_outlier_removal(c, 8, 1.0);
    EXPECT_LE(kept.size(), n);
    for (const auto& p : kept.points) EXPECT_LT(p.norm(), 0.2);
}

TEST(Filters, GridLosesOnlyItsCorners) {
    PointCloud grid;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) grid.points.emplace_back(0.01 * i, 0.01 * j, 0.0);
    // Mean 4-NN distance: interior 10 mm, edges 11.04 mm, corners 13.54 mm.
    // Population mean + 3 sd is 12.83 mm, so only the corners go.
    const PointCloud kept = statistical_outlier_removal(grid, 4, 3.0);
    ASSERT_EQ(kept.size(), 96u);
    for (const auto& p : kept.points) {
        const bool corner = (p.x() < 0.005 || p.x() > 0.085) && (p.y() < 0.005 || p.y() > 0.085);
        EXPECT_FALSE(corner);
    }
}

TEST(Filters, KnnFilterSmoothsNoiseAndKeepsPlanes) {
    PointCloud plane;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) plane.points.emplace_back(0.01 * i, 0.01 * j, 0.02);
    for (const auto& p : knn_noise_filter(plane, 6).points) EXPECT_NEAR(p.z(), 0.02, 1e-15);
    EXPECT_THROW(knn_noise_filter(plane, 0), InvalidInput);
    EXPECT_THROW(knn_noise_filter(PointCloud{{Vector3d::Zero()}}, 3), InvalidInput);
}

TEST(CloudIo, RoundTripPlyCsvAndGzip) {
    std::mt19937_64 rng(6);
    const PointCloud c = testsupport::dome_cloud(12, rng);
    const fs::path dir = fs::temp_directory_path() / "clutchshape_cloud_io";
    fs::create_directories(dir);
    for (const char* name : {"a.ply", "a.csv", "a.ply.gz", "a.csv.gz"}) {
        const std::string p = (dir / name).string();
        write_point_cloud(p, c);
        const PointCloud back = read_point_cloud(p);
        ASSERT_EQ(back.size(), c.size()) << name;
        for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(back.points[i], c.points[i]) << name;
    }
    EXPECT_THROW(write_point_cloud((dir / "a.xyz").string(), c), InvalidInput);
    EXPECT_THROW(read_point_cloud((dir / "missing.ply").string()), InvalidInput);
    fs::remove_all(dir);
}

TEST(CloudIo, RejectsBinaryPly) {
    const fs::path p = fs::temp_directory_path() / "clutchshape_binary.ply";
    std::ofstream(p) << "ply\nformat binary_little_endian 1.0\nelement vertex 1\nproperty float x\nend_header\n";
    EXPECT_THROW(read_point_cloud(p.string()), InvalidInput);
    fs::remove(p);
}
