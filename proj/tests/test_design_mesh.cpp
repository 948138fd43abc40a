#include <gtest/gtest.h>

#include <sstream>

#include "clutchshape/mesh.hpp"

using namespace clutchshape;

TEST(Design, DefaultLayoutAlternatesAndCloses) {
    const MembraneDesign d = build_default_design();
    ASSERT_EQ(d.rings.size(), 7u);
    EXPECT_EQ(d.soft_ring_count(), 3);
    for (std::size_t i = 0; i < d.rings.size(); ++i) {
        EXPECT_EQ(d.rings[i].material, i % 2 == 0 ? Material::Stabilized : Material::Soft) << i;
    }
    EXPECT_DOUBLE_EQ(d.rings.back().outer, d.radius);
    EXPECT_EQ(d.clutch_footprints.size(), 5u);
}

TEST(Design, RejectsGapBetweenRings) {
    MembraneDesign d = build_default_design();
    d.rings[2].inner += 0.001;
    EXPECT_THROW(validate(d), InvalidInput);
}

TEST(Design, RejectsFootprintThatMissesSoftRing) {
    MembraneDesign d = build_default_design();
    d.clutch_footprints[0].r_outer = d.rings[1].inner + 1e-4;
    EXPECT_THROW(validate(d), InvalidInput);
}

TEST(Design, JsonRoundTrip) {
    const MembraneDesign d = build_default_design();
    const MembraneDesign back = design_from_json(design_to_json(d));
    EXPECT_EQ(design_to_json(back), design_to_json(d));
}

TEST(Design, RegionLookup) {
    const MembraneDesign d = build_default_design();
    EXPECT_EQ(region_lookup(d, Vec2(0.0, 0.0)).material, Material::Stabilized);
    const double mid_soft = 0.5 * (d.rings[1].inner + d.rings[1].outer);
    const RegionTag t = region_lookup(d, Vec2(mid_soft, 0.0));
    EXPECT_EQ(t.material, Material::Soft);
    ASSERT_EQ(t.clutches.size(), 1u);
    EXPECT_EQ(t.clutches[0], ClutchId::Inboard);

    const double mid_outer = 0.5 * (d.rings[5].inner + d.rings[5].outer);
    EXPECT_EQ(region_lookup(d, Vec2(0.0, mid_outer)).clutches.front(), ClutchId::OutboardN);
    EXPECT_TRUE(region_lookup(d, Vec2(mid_outer * std::cos(0.25 * kPi), mid_outer * std::sin(0.25 * kPi)))
                    .clutches.empty());
    EXPECT_THROW(region_lookup(d, Vec2(0.1, 0.0)), InvalidInput);
}

TEST(Design, QuarterRotationRelabels) {
    const MembraneDesign d = rotate_footprints_quarter(build_default_design());
    const auto* n = d.footprint(ClutchId::OutboardN);
    ASSERT_NE(n, nullptr);
    EXPECT_NEAR(n->azimuth, 0.5 * kPi, 1e-12);
}

class MeshTest : public ::testing::TestWithParam<double> {};

TEST_P(MeshTest, BoundaryOnRimAndAreaMatchesDisk) {
    const MembraneDesign d = build_default_design();
    const Mesh m = generate_mesh(d, GetParam());
    for (int v : m.boundary_vertices) {
        EXPECT_NEAR(m.vertices[v].head<2>().norm(), d.radius, 1e-12);
    }
    // Inscribed polygon area converges to pi R^2 from below.
    const double disk = kPi * d.radius * d.radius;
    EXPECT_LT(m.total_area(), disk);
    EXPECT_GT(m.total_area(), disk * (1.0 - 0.01));
    for (std::size_t t = 0; t < m.triangle_count(); ++t) EXPECT_GT(m.triangle_area(t), 0.0);
}

TEST_P(MeshTest, InvariantUnderQuarterTurn) {
    const Mesh m = generate_mesh(build_default_design(), GetParam());
    // Every vertex rotated by 90 degrees lands on another vertex.
    for (const auto& v : m.vertices) {
        const Vec3 r(-v.y(), v.x(), 0.0);
        double best = 1.0;
        for (const auto& w : m.vertices) best = std::min(best, (w - r).norm());
        ASSERT_LT(best, 1e-12);
    }
}

INSTANTIATE_TEST_SUITE_P(EdgeLengths, MeshTest, ::testing::Values(0.005, 0.008, 0.012));

TEST(Mesh, DefaultResolutionStaysUnderFiveThousandTriangles) {
    const Mesh m = generate_mesh(build_default_design(), 0.005);
    EXPECT_LE(m.triangle_count(), 5000u);
}

TEST(Mesh, EveryClutchFootprintIsMeshed) {
    const Mesh m = generate_mesh(build_default_design(), 0.005);
    std::array<int, 5> count{};
    for (const auto& c : m.clutch_of_triangle) {
        if (c) ++count[index_of(*c)];
    }
    for (ClutchId id : kAllClutches) EXPECT_GT(count[index_of(id)], 0) << to_string(id);
}

TEST(Mesh, RejectsBadEdgeLength) {
    EXPECT_THROW(generate_mesh(build_default_design(), 0.0), InvalidInput);
    EXPECT_THROW(generate_mesh(build_default_design(), 0.05), InvalidInput);
}

TEST(Mesh, PlyHeaderCounts) {
    const Mesh m = generate_mesh(build_default_design(), 0.012);
    std::ostringstream os;
    write_ply(os, m);
    const std::string s = os.str();
    EXPECT_NE(s.find("element vertex " + std::to_string(m.vertex_count())), std::string::npos);
    EXPECT_NE(s.find("element face " + std::to_string(m.triangle_count())), std::string::npos);
}
