#include <gtest/gtest.h>

#include <random>

#include "clutchshape/element.hpp"

using namespace clutchshape;

namespace {

const RestTriangle kRest = make_rest_triangle(Vec2(0.0, 0.0), Vec2(0.01, 0.0), Vec2(0.003, 0.008));
constexpr double kThick = 0.001;

std::array<Vec3, 3> deform(const Eigen::Matrix<double, 3, 2>& f) {
    const std::array<Vec2, 3> p{Vec2(0.0, 0.0), Vec2(0.01, 0.0), Vec2(0.003, 0.008)};
    std::array<Vec3, 3> x;
    for (int i = 0; i < 3; ++i) x[i] = f * p[i];
    return x;
}

double ogden_w(const MaterialModel& m, double l1, double l2) {
    double w = 0.0;
    const double l3 = 1.0 / (l1 * l2);
    for (const auto& t : m.ogden) {
        w += t.mu / t.alpha * (std::pow(l1, t.alpha) + std::pow(l2, t.alpha) + std::pow(l3, t.alpha) - 3.0);
    }
    return w;
}

}  // namespace

TEST(Element, EquibiaxialOgdenEnergy) {
    const MaterialModel m = ecoflex_0030();
    for (double l : {1.0, 1.1, 1.5, 2.3}) {
        Eigen::Matrix<double, 3, 2> f = Eigen::Matrix<double, 3, 2>::Zero();
        f(0, 0) = l;
        f(1, 1) = l;
        const auto r = element_energy_and_forces(kRest, deform(f), m, kThick, Wrinkle{0.01});
        EXPECT_NEAR(r.energy, ogden_w(m, l, l) * kRest.area * kThick, 1e-12 * std::max(1.0, r.energy)) << l;
        EXPECT_NEAR(r.stretch1, l, 1e-12);
        EXPECT_NEAR(r.stretch2, l, 1e-12);
    }
}

TEST(Element, InPlaneUniaxialOgdenEnergyUnderRotation) {
    const MaterialModel m = ecoflex_0030();
    // Stretch along x, rotate the deformed triangle out of plane; energy is frame-independent.
    Eigen::Matrix<double, 3, 2> f = Eigen::Matrix<double, 3, 2>::Zero();
    f(0, 0) = 1.8;
    f(1, 1) = 1.0;
    const Eigen::Matrix3d q = Eigen::AngleAxisd(0.7, Vec3(1.0, 2.0, -0.5).normalized()).toRotationMatrix();
    const auto r = element_energy_and_forces(kRest, deform(q * f), m, kThick, Wrinkle{1.0});
    EXPECT_NEAR(r.energy, ogden_w(m, 1.8, 1.0) * kRest.area * kThick, 1e-12);
}

TEST(Element, OgdenSmallStrainShearModulus) {
    const MaterialModel m = ecoflex_0030();
    // Plane-stress incompressible: d2W/dl2 along an equibiaxial path at l = 1 is 12 G.
    const double h = 1e-4;
    const double d2 = (ogden_w(m, 1 + h, 1 + h) - 2.0 * ogden_w(m, 1, 1) + ogden_w(m, 1 - h, 1 - h)) / (h * h);
    EXPECT_NEAR(d2, 12.0 * m.shear_modulus(), 1e-4 * 12.0 * m.shear_modulus());
}

TEST(Element, LinearEquibiaxialEnergy) {
    const MaterialModel m = stabilized_fabric();
    const double e = 0.01;
    Eigen::Matrix<double, 3, 2> f = Eigen::Matrix<double, 3, 2>::Zero();
    f(0, 0) = 1.0 + e;
    f(1, 1) = 1.0 + e;
    const auto r = element_energy_and_forces(kRest, deform(f), m, kThick, Wrinkle{0.01});
    const double w = m.youngs_modulus * e * e / (1.0 - m.poisson_ratio);
    EXPECT_NEAR(r.energy, w * kRest.area * kThick, 1e-9 * r.energy);
}

TEST(Element, RigidMotionIsStressFree) {
    const Eigen::Matrix3d q = Eigen::AngleAxisd(1.1, Vec3(0.3, -1.0, 0.2).normalized()).toRotationMatrix();
    auto x = deform(q.leftCols<2>());
    for (auto& p : x) p += Vec3(0.2, -0.1, 0.05);
    for (const MaterialModel& m : {ecoflex_0030(), stabilized_fabric()}) {
        const auto r = element_energy_and_forces(kRest, x, m, kThick, Wrinkle{0.01});
        EXPECT_NEAR(r.energy, 0.0, 1e-15);
        for (const auto& fi : r.forces) EXPECT_LT(fi.norm(), 1e-9);
    }
}

TEST(Element, ForcesAreMinusEnergyGradient) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3);
    for (const MaterialModel& m : {ecoflex_0030(), stabilized_fabric()}) {
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::Matrix<double, 3, 2> f;
            f << 1.2 + jitter(rng), jitter(rng), jitter(rng), 1.1 + jitter(rng), jitter(rng), jitter(rng);
            auto x = deform(f);
            const Wrinkle w{0.01};
            const auto r = element_energy_and_forces(kRest, x, m, kThick, w);
            if (r.degenerate) continue;
            const double h = 1e-8;
            for (int i = 0; i < 3; ++i) {
                for (int c = 0; c < 3; ++c) {
                    auto xp = x, xm = x;
                    xp[i][c] += h;
                    xm[i][c] -= h;
                    const double g = (element_energy(kRest, xp, m, kThick, w) -
                                      element_energy(kRest, xm, m, kThick, w)) / (2.0 * h);
                    const double scale = std::max(1e-6, r.forces[i].norm());
                    EXPECT_NEAR(-g, r.forces[i][c], 1e-5 * scale);
                }
            }
        }
    }
}

TEST(Element, WrinklingSoftensCompression) {
    const MaterialModel m = stabilized_fabric();
    Eigen::Matrix<double, 3, 2> f = Eigen::Matrix<double, 3, 2>::Zero();
    f(0, 0) = 0.9;
    f(1, 1) = 1.0;
    const double taut = element_energy(kRest, deform(f), m, kThick, Wrinkle{1.0});
    const double slack = element_energy(kRest, deform(f), m, kThick, Wrinkle{0.01});
    EXPECT_GT(taut, 0.0);
    EXPECT_LT(slack, 0.05 * taut);
}

TEST(Element, WrinkleMapIsContinuousWithSlope) {
    const Wrinkle w{0.01};
    double s = 0.0;
    for (double l = 0.5; l < 1.1; l += 1e-3) {
        const double h = 1e-7;
        double sp = 0.0, sm = 0.0;
        const double fd = (w.map(l + h, sp) - w.map(l - h, sm)) / (2.0 * h);
        w.map(l, s);
        EXPECT_NEAR(fd, s, 1e-5) << l;
    }
}

TEST(Element, DegenerateRestTriangleRejected) {
    EXPECT_THROW(make_rest_triangle(Vec2(0, 0), Vec2(1, 0), Vec2(2, 0)), InvalidInput);
}
