#include <gtest/gtest.h>

#include "clutchshape/actuation.hpp"

using namespace clutchshape;

namespace {

SolverConfig coarse() {
    SolverConfig c;
    c.mesh_edge_length = 0.012;
    c.pressure_steps = 8;
    return c;
}

}  // namespace

TEST(Directions, NamesIndicesAndParsing) {
    EXPECT_EQ(to_string(DoFDirection::BackRight), "Back-Right");
    EXPECT_EQ(parse_dof_direction("front-left"), DoFDirection::FrontLeft);
    EXPECT_EQ(parse_dof_direction("FRONTRIGHT"), DoFDirection::FrontRight);
    EXPECT_THROW(parse_dof_direction("sideways"), InvalidInput);
    EXPECT_EQ(dof_index(DoFDirection::BackRight), 1);
    EXPECT_EQ(dof_index(DoFDirection::FrontLeft), 1);
    EXPECT_EQ(dof_index(DoFDirection::Front), 3);
    EXPECT_EQ(dof_index(DoFDirection::Left), 4);
    EXPECT_EQ(dof_index(DoFDirection::Up), 5);
    for (DoFDirection d : kAllDirections) EXPECT_EQ(parse_dof_direction(to_string(d)), d);
}

TEST(Directions, ClutchesSitOnTheNamedSide) {
    const MembraneDesign design = build_default_design();
    for (DoFDirection d : kPlanarDirections) {
        const Vec3 want = direction_vector(d);
        Vec2 held = Vec2::Zero();
        for (ClutchId id : dof_outboard_clutches(d)) {
            const auto* fp = design.footprint(id);
            held += Vec2(std::cos(fp->azimuth), std::sin(fp->azimuth));
        }
        EXPECT_GT(held.normalized().dot(want.head<2>()), 0.99) << to_string(d);
    }
    EXPECT_TRUE(dof_outboard_clutches(DoFDirection::Up).empty());
}

TEST(Directions, PatternsIncludeInboardExceptUpWorkspace) {
    for (DoFDirection d : kPlanarDirections) EXPECT_TRUE(dof_pattern(d).active(ClutchId::Inboard));
    EXPECT_FALSE(dof_pattern(DoFDirection::Up).active(ClutchId::Inboard));
    EXPECT_TRUE(dof_pattern(DoFDirection::Up, true).active(ClutchId::Inboard));
    EXPECT_EQ(default_launch_pressure(DoFDirection::Up), 2800.0);
    EXPECT_EQ(default_launch_pressure(DoFDirection::Left), 2800.0);
    EXPECT_EQ(default_launch_pressure(DoFDirection::BackLeft), 1700.0);
}

TEST(SecondOrder, UnderdampedOvershootsOnce) {
    const double wn = 10.0, zeta = 0.2;
    bool crossed = false;
    for (double t = 0.0; t < 2.0; t += 1e-3) crossed |= second_order_step(1.0, wn, zeta, t) < 0.0;
    EXPECT_TRUE(crossed);
    EXPECT_DOUBLE_EQ(second_order_step(1.0, wn, zeta, 0.0), 1.0);
    EXPECT_LT(std::abs(second_order_step(1.0, wn, zeta, 5.0)), 1e-4);
}

TEST(SecondOrder, CriticalAndOverdampedAreMonotone) {
    for (double zeta : {1.0, 1.5, 4.0}) {
        double prev = second_order_step(1.0, 8.0, zeta, 0.0);
        EXPECT_DOUBLE_EQ(prev, 1.0);
        for (double t = 1e-3; t < 3.0; t += 1e-3) {
            const double e = second_order_step(1.0, 8.0, zeta, t);
            EXPECT_LE(e, prev + 1e-15) << zeta << " " << t;
            EXPECT_GE(e, 0.0);
            prev = e;
        }
    }
}

TEST(SecondOrder, SatisfiesTheOde) {
    // e'' + 2 zeta wn e' + wn^2 e = 0 by central differences.
    for (double zeta : {0.2, 1.0, 2.0}) {
        const double wn = 6.0, h = 1e-4;
        for (double t = 0.05; t < 1.0; t += 0.05) {
            const double em = second_order_step(1.0, wn, zeta, t - h), e0 = second_order_step(1.0, wn, zeta, t),
                         ep = second_order_step(1.0, wn, zeta, t + h);
            const double res = (ep - 2 * e0 + em) / (h * h) + 2 * zeta * wn * (ep - em) / (2 * h) + wn * wn * e0;
            EXPECT_NEAR(res, 0.0, 1e-3 * wn * wn);
        }
    }
}

TEST(ForceReport, AggregatesInTableOrder) {
    std::vector<ForceTrial> trials{{DoFDirection::Up, 1.0, Vec3::UnitZ()},
                                   {DoFDirection::Right, 0.5, Vec3(1, 0, 1).normalized()},
                                   {DoFDirection::Up, 2.0, Vec3::UnitZ()},
                                   {DoFDirection::Up, 3.0, Vec3::UnitZ()}};
    const auto r = build_force_report(trials);
    ASSERT_EQ(r.aggregates.size(), 2u);
    EXPECT_EQ(r.aggregates[0].direction, DoFDirection::Right);
    EXPECT_EQ(r.aggregates[1].direction, DoFDirection::Up);
    EXPECT_DOUBLE_EQ(r.aggregates[1].mean, 2.0);
    EXPECT_DOUBLE_EQ(r.aggregates[1].std_dev, 1.0);
    EXPECT_EQ(r.aggregates[1].consistency, 100.0);
    EXPECT_EQ(r.aggregates[0].std_dev, 0.0);

    const std::string table = render_force_table(r);
    EXPECT_NE(table.find("Consistency (%)"), std::string::npos);
    EXPECT_NE(table.find("DoF 5"), std::string::npos);
    EXPECT_NE(table.find("2.00"), std::string::npos);
    EXPECT_EQ(force_report_to_json(r)["aggregates"].size(), 2u);
}

TEST(Payload, ContactPatchIsCentral) {
    const Mesh m = generate_mesh(build_default_design(), 0.005);
    const auto patch = contact_patch(m, Payload{});
    EXPECT_GT(patch.size(), 1u);
    for (int v : patch) EXPECT_LE(m.vertices[v].head<2>().norm(), 0.01 + 1e-12);
}

TEST(Workspace, ZeroPressureRejectedAndUpIsCentred) {
    EXPECT_THROW(mode1_workspace(build_default_design(), 0.0, {DoFDirection::Up}, coarse()), InvalidInput);
    const auto w = mode1_workspace(build_default_design(), 1000.0, {DoFDirection::Up}, coarse());
    const auto& e = w.at(DoFDirection::Up);
    EXPECT_FALSE(e.flagged);
    EXPECT_LT(e.lateral, 1e-3);
    EXPECT_GT(e.vertical, 0.0);
}

TEST(Workspace, MirrorDirectionsAreMirrored) {
    const auto w = mode1_workspace(build_default_design(), 1700.0, {DoFDirection::Left, DoFDirection::Right},
                                   coarse());
    const Vec3 l = w.at(DoFDirection::Left).displacement, r = w.at(DoFDirection::Right).displacement;
    const double tol = 2.0 * coarse().mesh_edge_length * 0.05;
    EXPECT_NEAR(l.x(), -r.x(), tol);
    EXPECT_NEAR(l.y(), r.y(), tol);
    EXPECT_NEAR(l.z(), r.z(), tol);
    EXPECT_GT(r.x(), 0.0);
}

TEST(Launch, ZeroPressureNeverReleases) {
    LaunchOptions opt;
    opt.transient_duration = 0.02;
    const auto r = mode1_launch(build_default_design(), DoFDirection::Up, 0.0, Payload{}, coarse(), opt);
    EXPECT_FALSE(r.released);
    ASSERT_GE(r.record.samples.size(), 5u);
    for (const auto& s : r.record.samples) EXPECT_NEAR(s.position.z(), 0.02, 1e-12);
    EXPECT_THROW(mode1_launch(build_default_design(), DoFDirection::Up, 100.0, Payload{0.2, 0.04}, coarse()),
                 InvalidInput);
}

TEST(Launch, LeftLaunchLeavesToTheLeft) {
    const auto r = mode1_launch(build_default_design(), DoFDirection::Left, 2800.0, Payload{}, coarse());
    ASSERT_TRUE(r.released);
    EXPECT_GT(r.release_velocity.head<2>().dot(direction_vector(DoFDirection::Left).head<2>()), 0.0);
    EXPECT_LT(r.record.samples.back().position.x(), r.release_position.x());
}

TEST(Launch, FlightIsAGravityParabola) {
    const auto r = mode1_launch(build_default_design(), DoFDirection::Up, 2800.0, Payload{}, coarse());
    ASSERT_TRUE(r.released);
    const auto& s = r.record.samples;
    ASSERT_GE(s.size(), r.first_ballistic_sample + 5);
    // Least-squares z = c0 + c1 t + c2 t^2 over the ballistic samples.
    const long n = static_cast<long>(s.size() - r.first_ballistic_sample);
    Eigen::MatrixXd A(n, 3);
    Eigen::VectorXd z(n);
    for (long i = 0; i < n; ++i) {
        const auto& q = s[r.first_ballistic_sample + static_cast<std::size_t>(i)];
        A.row(i) << 1.0, q.t, q.t * q.t;
        z(i) = q.position.z();
    }
    const Eigen::Vector3d c = A.colPivHouseholderQr().solve(z);
    EXPECT_NEAR(2.0 * c(2), -kGravity, 0.01 * kGravity);
}

TEST(Mode2, FlatMembraneGivesNoRoll) {
    PressureProfile zero{[](double) { return 0.0; }, 1.0, 2};
    const auto r = mode2_tilt(build_default_design(), ClutchPattern::with_active({ClutchId::OutboardE}), zero, Plate{},
                              coarse());
    for (double roll : r.roll_deg) EXPECT_NEAR(roll, 0.0, 1e-6);
}

TEST(Mode2, RejectsLightPlateAndBadProfile) {
    const auto pattern = ClutchPattern::with_active({ClutchId::OutboardE});
    EXPECT_THROW(mode2_tilt(build_default_design(), pattern, PressureProfile::ramp(3100), Plate{0.05, 0.1}),
                 InvalidInput);
    PressureProfile negative{[](double) { return -1.0; }, 1.0, 1};
    EXPECT_THROW(mode2_tilt(build_default_design(), pattern, negative, Plate{}, coarse()), InvalidInput);
}

TEST(Mode2, RollReferenceFollowsActiveClutch) {
    const MembraneDesign d = build_default_design();
    EXPECT_TRUE(roll_reference(d, ClutchPattern::with_active({ClutchId::OutboardN})).isApprox(Vec2(0, 1)));
    EXPECT_TRUE(roll_reference(d, ClutchPattern{}).isApprox(Vec2(1, 0)));
    PlatePose p;
    p.slope = Vec2(-std::tan(5.0 * kPi / 180.0), 0.0);
    EXPECT_NEAR(roll_degrees(p, Vec2(1, 0)), 5.0, 1e-12);
}

TEST(Mode2, ReleaseOfSymmetricTiltStaysLevel) {
    SolverConfig cfg = coarse();
    const auto tilt = mode2_tilt(build_default_design(), ClutchPattern::plateau(), PressureProfile::ramp(1500, 1.0, 4),
                                 Plate{}, cfg);
    for (double roll : tilt.roll_deg) EXPECT_LT(std::abs(roll), 0.5);
    const auto rel = mode2_release(tilt, {}, cfg);
    for (double roll : rel.roll_deg) EXPECT_LT(std::abs(roll), 0.5);
}
