#pragma once

// Constant-strain membrane triangle.
//
// The rest configuration is flat. For a deformed triangle the in-plane
// deformation gradient F (3x2) gives the right Cauchy-Green tensor C = F^T F
// whose eigenvalues are the squared principal stretches. Energies are
// written in principal stretches so one code path serves the Ogden and the
// small-strain materials.
//
// Wrinkling: stretches below one are passed through a C1 map whose slope
// falls from 1 to sqrt(k) over a short band, so compressive stiffness is
// scaled by k while the energy stays differentiable.

#include <array>
#include <cmath>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "clutchshape/design.hpp"

namespace clutchshape {

using Mat2 = Eigen::Matrix2d;
using Mat32 = Eigen::Matrix<double, 3, 2>;

struct RestTriangle {
    Mat2 dm_inv = Mat2::Identity();  // inverse of the rest edge matrix
    double area = 0.0;
};

inline RestTriangle make_rest_triangle(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
    Mat2 dm;
    dm.col(0) = p1 - p0;
    dm.col(1) = p2 - p0;
    const double det = dm.determinant();
    if (!(std::abs(det) > 0.0)) throw InvalidInput("degenerate rest triangle");
    return {dm.inverse(), 0.5 * std::abs(det)};
}

// Wrinkle map g(lambda) and its slope.
struct Wrinkle {
    static constexpr double kBand = 0.02;

    double factor = 1.0;

    double map(double lambda, double& slope) const {
        if (lambda >= 1.0 || factor >= 1.0) {
            slope = 1.0;
            return lambda;
        }
        const double c = std::sqrt(factor);
        const double s = 1.0 - lambda;
        if (s <= kBand) {
            slope = 1.0 - (1.0 - c) * s / kBand;
            return 1.0 - (s - (1.0 - c) * s * s / (2.0 * kBand));
        }
        slope = c;
        return 1.0 - kBand * (1.0 + c) / 2.0 - c * (s - kBand);
    }
};

struct PrincipalResponse {
    double energy = 0.0;  // per unit rest volume
    double d1 = 0.0;      // dW/dl1
    double d2 = 0.0;      // dW/dl2
};

// Incompressible plane-stress Ogden: l3 = 1 / (l1 l2).
inline PrincipalResponse ogden_response(const MaterialModel& m, double l1, double l2) {
    PrincipalResponse r;
    const double log1 = std::log(l1);
    const double log2 = std::log(l2);
    for (const auto& t : m.ogden) {
        const double a1 = std::exp(t.alpha * log1);
        const double a2 = std::exp(t.alpha * log2);
        const double a3 = std::exp(-t.alpha * (log1 + log2));
        r.energy += t.mu / t.alpha * (a1 + a2 + a3 - 3.0);
        r.d1 += t.mu * (a1 - a3);
        r.d2 += t.mu * (a2 - a3);
    }
    r.d1 /= l1;
    r.d2 /= l2;
    return r;
}

// Plane-stress small-strain energy in principal (Biot) strains.
inline PrincipalResponse linear_response(const MaterialModel& m, double l1, double l2) {
    const double e1 = l1 - 1.0;
    const double e2 = l2 - 1.0;
    const double nu = m.poisson_ratio;
    const double k = m.youngs_modulus / (1.0 - nu * nu);
    return {0.5 * k * (e1 * e1 + e2 * e2 + 2.0 * nu * e1 * e2), k * (e1 + nu * e2), k * (e2 + nu * e1)};
}

inline PrincipalResponse principal_response(const MaterialModel& m, double l1, double l2) {
    return m.kind == MaterialModel::Kind::Ogden3 ? ogden_response(m, l1, l2) : linear_response(m, l1, l2);
}

struct ElementResult {
    double energy = 0.0;               // J
    std::array<Vec3, 3> forces{};      // N, minus the energy gradient
    double stretch1 = 1.0;             // principal stretches, stretch1 >= stretch2
    double stretch2 = 1.0;
    bool degenerate = false;           // collapsed element; forces zeroed
};

// Energy and nodal forces of one triangle with the given thickness.
inline ElementResult element_energy_and_forces(const RestTriangle& rest, const std::array<Vec3, 3>& x,
                                               const MaterialModel& material, double thickness,
                                               const Wrinkle& wrinkle) {
    ElementResult out;
    Mat32 ds;
    ds.col(0) = x[1] - x[0];
    ds.col(1) = x[2] - x[0];
    const Mat32 f = ds * rest.dm_inv;
    const Mat2 c = f.transpose() * f;

    const double tr = c(0, 0) + c(1, 1);
    const double det = c(0, 0) * c(1, 1) - c(0, 1) * c(0, 1);
    const double disc = std::sqrt(std::max(0.0, 0.25 * (c(0, 0) - c(1, 1)) * (c(0, 0) - c(1, 1)) + c(0, 1) * c(0, 1)));
    const double ev1 = 0.5 * tr + disc;
    const double ev2 = ev1 > 0.0 ? std::max(0.0, det / ev1) : 0.0;
    const double l1 = std::sqrt(ev1);
    const double l2 = std::sqrt(ev2);
    out.stretch1 = l1;
    out.stretch2 = l2;
    if (!(l1 * l2 > 1e-6)) {
        out.degenerate = true;
        return out;
    }

    double s1 = 1.0;
    double s2 = 1.0;
    const double g1 = wrinkle.map(l1, s1);
    const double g2 = wrinkle.map(l2, s2);
    const PrincipalResponse w = principal_response(material, g1, g2);
    const double volume = rest.area * thickness;
    out.energy = volume * w.energy;

    // dW/dC = sum_a (dW/dl_a) / (2 l_a) n_a n_a^T
    const double phi = 0.5 * std::atan2(2.0 * c(0, 1), c(0, 0) - c(1, 1));
    const Vec2 n1(std::cos(phi), std::sin(phi));
    const Vec2 n2(-n1.y(), n1.x());
    const double k1 = w.d1 * s1 / (2.0 * l1);
    const double k2 = w.d2 * s2 / (2.0 * l2);
    const Mat2 dw_dc = k1 * n1 * n1.transpose() + k2 * n2 * n2.transpose();

    // dE/dDs = volume * 2 F dW/dC Dm^-T
    const Mat32 h = volume * 2.0 * f * dw_dc * rest.dm_inv.transpose();
    out.forces[1] = -h.col(0);
    out.forces[2] = -h.col(1);
    out.forces[0] = h.col(0) + h.col(1);
    return out;
}

// Energy only, for oracles and line searches.
inline double element_energy(const RestTriangle& rest, const std::array<Vec3, 3>& x, const MaterialModel& material,
                             double thickness, const Wrinkle& wrinkle) {
    return element_energy_and_forces(rest, x, material, thickness, wrinkle).energy;
}

// Upper estimate of the in-plane tangent modulus (Pa) at the given
// principal stretches, used to size pseudo-masses and stable time steps.
inline double tangent_modulus_estimate(const MaterialModel& m, double l1, double l2) {
    if (m.kind == MaterialModel::Kind::LinearElastic) {
        return m.youngs_modulus / (1.0 - m.poisson_ratio * m.poisson_ratio);
    }
    l1 = std::max(l1, 0.2);
    l2 = std::max(l2, 0.2);
    double k = 0.0;
    for (const auto& t : m.ogden) {
        const double a = std::abs(t.alpha);
        const double big = std::max({std::pow(l1, t.alpha), std::pow(l2, t.alpha), std::pow(l1 * l2, -t.alpha)});
        k += std::abs(t.mu) * (a + 1.0) * big;
    }
    return 2.0 * k / std::min(l1, l2) / std::min(l1, l2);
}

}  // namespace clutchshape
