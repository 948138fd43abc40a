#pragma once

// Synthetic inputs shared by the unit tests and the acceptance runner.

#include <cmath>
#include <random>

#include "clutchshape/design.hpp"
#include "clutchshape/pointcloud.hpp"
#include "clutchshape/trajectory.hpp"

namespace testsupport {

using clutchshape::PointCloud;
using Eigen::Vector3d;

// Asymmetric dome sampled on a jittered grid; no rotational symmetry so
// registration has a unique answer.
inline double dome_z(double x, double y) {
    const double r2 = (x * x) / (0.07 * 0.07) + (y * y) / (0.05 * 0.05);
    return 0.06 * std::exp(-1.5 * r2) + 0.01 * x / 0.07 + 0.004 * std::sin(40.0 * y);
}

inline Vector3d dome_normal(double x, double y) {
    const double h = 1e-6;
    const double zx = (dome_z(x + h, y) - dome_z(x - h, y)) / (2 * h);
    const double zy = (dome_z(x, y + h) - dome_z(x, y - h)) / (2 * h);
    return Vector3d(-zx, -zy, 1.0).normalized();
}

inline PointCloud dome_cloud(int n_side, std::mt19937_64& rng, double jitter = 0.3) {
    std::uniform_real_distribution<double> u(-jitter, jitter);
    PointCloud c;
    const double step = 0.15 / (n_side - 1);
    for (int i = 0; i < n_side; ++i) {
        for (int j = 0; j < n_side; ++j) {
            const double x = -0.075 + step * (i + u(rng));
            const double y = -0.075 + step * (j + u(rng));
            c.points.emplace_back(x, y, dome_z(x, y));
        }
    }
    return c;
}

// Uniform random axis, angle uniform in [0, max_angle].
inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> a(0.0, max_angle);
    const Vector3d axis = Vector3d(n(rng), n(rng), n(rng)).normalized();
    return Eigen::AngleAxisd(a(rng), axis).toRotationMatrix();
}

inline Vector3d random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return Vector3d(n(rng), n(rng), n(rng)).normalized();
}

// Gaussian acceleration pulse a(t) = amp * dir * exp(-(t - t0)^2 / (2 s^2)),
// applied on top of gravity. Position is integrated in closed form.
struct PulseProfile {
    Vector3d p0 = Vector3d::Zero();
    Vector3d v0 = Vector3d::Zero();
    Vector3d dir = Vector3d::UnitZ();
    double amp = 0.0;   // m/s^2
    double t0 = 1.0;    // s
    double sigma = 0.2; // s

    // Integral of the unit pulse from 0 to t, and the integral of that.
    double g1(double t) const {
        const double k = sigma * std::sqrt(2.0);
        return sigma * std::sqrt(M_PI / 2.0) * (std::erf((t - t0) / k) - std::erf(-t0 / k));
    }
    double g2(double t) const {
        const double k = sigma * std::sqrt(2.0);
        const auto prim = [&](double s) {
            // Antiderivative of erf((s - t0) / k) in s.
            const double z = (s - t0) / k;
            return k * (z * std::erf(z) + std::exp(-z * z) / std::sqrt(M_PI));
        };
        const double c = sigma * std::sqrt(M_PI / 2.0);
        return c * (prim(t) - prim(0.0) - t * std::erf(-t0 / k));
    }

    Vector3d position(double t) const {
        return p0 + v0 * t - 0.5 * clutchshape::kGravity * t * t * Vector3d::UnitZ() + amp * g2(t) * dir;
    }
    double peak_corrected_norm() const { return std::abs(amp); }
};

inline clutchshape::TrajectoryRecord sample(const PulseProfile& p, double duration, double rate = 100.0,
                                            double mass = 0.0037) {
    clutchshape::TrajectoryRecord r;
    r.payload_mass = mass;
    r.sample_rate = rate;
    const long n = std::lround(duration * rate);
    for (long i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / rate;
        r.samples.push_back({t, p.position(t), std::nullopt});
    }
    return r;
}

inline PulseProfile random_pulse(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> sig(0.15, 0.35), amp(5.0, 60.0), off(-0.5, 0.5), vel(-1.0, 1.0);
    PulseProfile p;
    p.sigma = sig(rng);
    p.t0 = 5.0 * p.sigma + 0.1;
    p.amp = amp(rng);
    p.dir = random_unit(rng);
    p.p0 = Vector3d(off(rng), off(rng), off(rng));
    p.v0 = Vector3d(vel(rng), vel(rng), vel(rng));
    return p;
}

}  // namespace testsupport
