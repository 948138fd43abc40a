#include <gtest/gtest.h>

#include <random>

#include "clutchshape/solver.hpp"

using namespace clutchshape;

namespace {

SolverConfig coarse() {
    SolverConfig c;
    c.mesh_edge_length = 0.012;
    c.pressure_steps = 10;
    return c;
}

double polygon_area(const Mesh& m) { return m.total_area(); }

Vec3 sum(const std::vector<Vec3>& f) {
    Vec3 s = Vec3::Zero();
    for (const auto& v : f) s += v;
    return s;
}

}  // namespace

TEST(Pressure, FlatResultantMatchesDisk) {
    const auto model = make_model(build_default_design(), SolverConfig{});
    const std::vector<Vec3> zero(model->vertex_count(), Vec3::Zero());
    const Vec3 total = sum(pressure_forces(model->mesh(), zero, 3100.0));
    const double disk = 3100.0 * kPi * 0.075 * 0.075;
    EXPECT_NEAR(total.z(), disk, 0.005 * disk);
    EXPECT_LT(total.head<2>().norm(), 1e-9);
}

TEST(Pressure, ZeroPressureGivesZeroForce) {
    const auto model = make_model(build_default_design(), coarse());
    std::vector<Vec3> u(model->vertex_count(), Vec3(0.001, 0.0, 0.002));
    for (const auto& f : pressure_forces(model->mesh(), u, 0.0)) EXPECT_EQ(f, Vec3::Zero());
}

TEST(Pressure, CapResultantIndependentOfHeight) {
    const auto model = make_model(build_default_design(), SolverConfig{});
    const Mesh& mesh = model->mesh();
    const double p = 2500.0;
    const double projected = p * polygon_area(mesh);
    for (double h : {0.01, 0.04, 0.075}) {
        // Spherical cap through the clamped rim with apex height h.
        const double R = 0.075;
        const double rho = (R * R + h * h) / (2.0 * h);
        std::vector<Vec3> u(mesh.vertex_count(), Vec3::Zero());
        for (std::size_t v = 0; v < u.size(); ++v) {
            const double r = mesh.vertices[v].head<2>().norm();
            if (model->fixed()[v]) continue;
            u[v].z() = std::sqrt(rho * rho - r * r) - (rho - h);
        }
        const Vec3 total = sum(pressure_forces(mesh, u, p));
        EXPECT_NEAR(total.z(), projected, 1e-9 * projected) << h;
        EXPECT_LT(total.head<2>().norm(), 1e-9 * projected) << h;
    }
    EXPECT_THROW(pressure_forces(mesh, std::vector<Vec3>(mesh.vertex_count(), Vec3::Zero()), -1.0), InvalidInput);
}

TEST(ClutchShear, UniformStretchMatchesEdgeTraction) {
    const MembraneDesign d = build_default_design();
    const auto model = make_model(d, SolverConfig{});
    DeformedState s = DeformedState::rest(model, ClutchPattern::round());
    const double e = 0.05;
    for (std::size_t v = 0; v < s.displacement.size(); ++v) s.displacement[v] = e * model->mesh().vertices[v];

    const auto cf = clutch_constraint_forces(s, Wrinkle{0.01});
    ASSERT_EQ(cf.shear.count(ClutchId::Inboard), 1u);
    EXPECT_EQ(cf.shear.size(), 1u);

    // Equibiaxial plane stress in the laminate; the interior cancels and the
    // two bonded edges carry traction sigma * t along their length.
    const auto& lam = d.clutch;
    const auto* fp = d.footprint(ClutchId::Inboard);
    const double sigma = lam.youngs_modulus * e / (1.0 - lam.poisson_ratio);
    const double perimeter = 2.0 * kPi * (fp->r_inner + fp->r_outer);
    const double expected = 0.5 * sigma * d.clutch_thickness * perimeter / model->clutch_area(ClutchId::Inboard);
    EXPECT_NEAR(cf.shear.at(ClutchId::Inboard), expected, 0.02 * expected);
}

TEST(Solver, ZeroPressureStaysAtRest) {
    for (const auto& pattern : {ClutchPattern::pyramid(), ClutchPattern::round(), ClutchPattern::plateau()}) {
        const auto s = solve_equilibrium(build_default_design(), pattern, 0.0, coarse());
        for (const auto& u : s.displacement) EXPECT_EQ(u, Vec3::Zero());
    }
}

TEST(Solver, ConvergesWithFixedBoundaryAndMonotoneHeight) {
    const SolverConfig cfg = coarse();
    const auto model = make_model(build_default_design(), cfg);
    double prev = 0.0;
    DeformedState s = DeformedState::rest(model, ClutchPattern::round());
    for (double p : {600.0, 1200.0, 1900.0, 2500.0, 3100.0}) {
        s = solve_equilibrium(std::move(s), p, cfg);
        EXPECT_LE(s.residual_norm, cfg.residual_tol);
        const double h = apex(s).height;
        EXPECT_GE(h, prev) << p;
        prev = h;
        for (std::size_t v = 0; v < s.displacement.size(); ++v) {
            if (model->fixed()[v]) EXPECT_EQ(s.displacement[v], Vec3::Zero());
        }
    }
}

TEST(Solver, RejectsNegativePressureAndBadConfig) {
    EXPECT_THROW(solve_equilibrium(build_default_design(), {}, -5.0, coarse()), InvalidInput);
    SolverConfig bad = coarse();
    bad.pressure_steps = 0;
    EXPECT_THROW(solve_equilibrium(build_default_design(), {}, 100.0, bad), InvalidInput);
    bad = coarse();
    bad.relaxation_safety = 0.5;
    EXPECT_THROW(bad.validate(), InvalidInput);
}

TEST(Solver, ConfigJsonRoundTrip) {
    SolverConfig c;
    c.mesh_edge_length = 0.007;
    c.relaxation_safety = 3.0;
    EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}

TEST(Solver, OutboardClutchPushesApexAway) {
    const auto s = solve_equilibrium(build_default_design(),
                                     ClutchPattern::with_active({ClutchId::Inboard, ClutchId::OutboardE}), 1700.0,
                                     coarse());
    EXPECT_LT(apex(s).point.x(), 0.0);
}

TEST(Solver, Deterministic) {
    const auto a = solve_equilibrium(build_default_design(), ClutchPattern::plateau(), 1500.0, coarse());
    const auto b = solve_equilibrium(build_default_design(), ClutchPattern::plateau(), 1500.0, coarse());
    ASSERT_EQ(a.displacement.size(), b.displacement.size());
    EXPECT_EQ(0, std::memcmp(a.displacement.data(), b.displacement.data(), a.displacement.size() * sizeof(Vec3)));
}

TEST(Transient, EnergyBalanceAfterRelease) {
    SolverConfig cfg = coarse();
    const auto start = solve_equilibrium(build_default_design(), ClutchPattern::round(), 2000.0, cfg);
    const auto frames =
        dynamic_transient(start, ClutchEvent{0.0, ClutchId::Inboard, Transition::Deactivate}, 0.05, cfg);
    ASSERT_EQ(frames.size(), 51u);
    EXPECT_FALSE(frames.front().state.pattern.active(ClutchId::Inboard));
    const double u0 = frames.front().strain_energy;
    double peak_ke = 0.0;
    for (const auto& f : frames) {
        // Strain + kinetic energy changes only through pressure work and damping.
        const double lhs = f.strain_energy - u0 + f.kinetic_energy;
        const double rhs = f.pressure_work - f.dissipated;
        EXPECT_NEAR(lhs, rhs, 0.02 * std::max({std::abs(f.pressure_work), f.dissipated, 1e-6}));
        peak_ke = std::max(peak_ke, f.kinetic_energy);
        for (std::size_t v = 0; v < f.state.displacement.size(); ++v) {
            if (start.model->fixed()[v]) ASSERT_EQ(f.state.displacement[v], Vec3::Zero());
        }
    }
    EXPECT_GT(peak_ke, 0.0);
    EXPECT_GT(apex(frames.back().state).height, apex(start).height);
}

TEST(Transient, ZeroDurationReturnsInput) {
    const auto start = solve_equilibrium(build_default_design(), ClutchPattern::round(), 500.0, coarse());
    const auto frames = dynamic_transient(start, std::nullopt, 0.0, coarse());
    ASSERT_EQ(frames.size(), 1u);
    EXPECT_EQ(frames[0].state.displacement, start.displacement);
    EXPECT_THROW(dynamic_transient(start, std::nullopt, -1.0, coarse()), InvalidInput);
}

TEST(Transient, IllegalEventRejected) {
    const auto start = solve_equilibrium(build_default_design(), ClutchPattern::pyramid(), 500.0, coarse());
    EXPECT_THROW(dynamic_transient(start, ClutchEvent{0.0, ClutchId::Inboard, Transition::Deactivate}, 0.01, coarse()),
                 IllegalTransition);
}
