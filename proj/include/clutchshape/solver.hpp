#pragma once

// Membrane inflation solver.
//
// Static shapes come from dynamic relaxation: pseudo-dynamics with per-node
// fictitious masses sized from the local tangent stiffness, and kinetic
// damping (velocities zeroed at every kinetic-energy peak). The gauge
// pressure is ramped in equal increments; clutch slip is checked after
// every increment.
//
// Transients integrate the real lumped-mass dynamics explicitly with
// viscous damping only.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clutchshape/clutch.hpp"
#include "clutchshape/element.hpp"
#include "clutchshape/mesh.hpp"

namespace clutchshape {

struct SolverConfig {
    double mesh_edge_length = 0.005;      // m
    int pressure_steps = 20;
    bool kinetic_damping = true;
    double viscous_damping = 10.0;        // 1/s, transients only
    double dt = 2e-5;                     // s, upper bound on the transient step
    long max_iterations = 600000;         // relaxation iterations per solve
    double residual_tol = 1e-3;           // N
    double wrinkle_stiffness_factor = 0.01;
    double slip_threshold = kDefaultSlipThreshold;  // Pa
    double frame_interval = 1e-3;         // s between emitted transient frames
    double relaxation_safety = 2.0;       // pseudo-mass multiplier for relaxation

    void validate() const {
        if (!(dt > 0.0)) throw InvalidInput("solver config: dt must be positive");
        if (!(residual_tol > 0.0)) throw InvalidInput("solver config: residual_tol must be positive");
        if (pressure_steps < 1) throw InvalidInput("solver config: pressure_steps must be at least 1");
        if (!(wrinkle_stiffness_factor > 0.0 && wrinkle_stiffness_factor <= 1.0)) {
            throw InvalidInput("solver config: wrinkle_stiffness_factor must lie in (0, 1]");
        }
        if (!(mesh_edge_length > 0.0)) throw InvalidInput("solver config: mesh_edge_length must be positive");
        if (max_iterations < 1) throw InvalidInput("solver config: max_iterations must be positive");
        if (!(frame_interval > 0.0)) throw InvalidInput("solver config: frame_interval must be positive");
        if (viscous_damping < 0.0) throw InvalidInput("solver config: viscous_damping must be non-negative");
        if (!(relaxation_safety >= 1.0)) throw InvalidInput("solver config: relaxation_safety must be at least 1");
    }
};

inline nlohmann::json config_to_json(const SolverConfig& c) {
    return {{"mesh_edge_length", c.mesh_edge_length},
            {"pressure_steps", c.pressure_steps},
            {"kinetic_damping", c.kinetic_damping},
            {"viscous_damping", c.viscous_damping},
            {"dt", c.dt},
            {"max_iterations", c.max_iterations},
            {"residual_tol", c.residual_tol},
            {"wrinkle_stiffness_factor", c.wrinkle_stiffness_factor},
            {"slip_threshold", c.slip_threshold},
            {"frame_interval", c.frame_interval},
            {"relaxation_safety", c.relaxation_safety}};
}

inline SolverConfig config_from_json(const nlohmann::json& j) {
    SolverConfig c;
    try {
        c.mesh_edge_length = j.value("mesh_edge_length", c.mesh_edge_length);
        c.pressure_steps = j.value("pressure_steps", c.pressure_steps);
        c.kinetic_damping = j.value("kinetic_damping", c.kinetic_damping);
        c.viscous_damping = j.value("viscous_damping", c.viscous_damping);
        c.dt = j.value("dt", c.dt);
        c.max_iterations = j.value("max_iterations", c.max_iterations);
        c.residual_tol = j.value("residual_tol", c.residual_tol);
        c.wrinkle_stiffness_factor = j.value("wrinkle_stiffness_factor", c.wrinkle_stiffness_factor);
        c.slip_threshold = j.value("slip_threshold", c.slip_threshold);
        c.frame_interval = j.value("frame_interval", c.frame_interval);
        c.relaxation_safety = j.value("relaxation_safety", c.relaxation_safety);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("solver config: ") + e.what());
    }
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Discretised model
// ---------------------------------------------------------------------------

// Everything about a design that does not change during a solve.
class MembraneModel {
public:
    MembraneModel(MembraneDesign design, double edge_length)
        : design_(std::move(design)), mesh_(generate_mesh(design_, edge_length)) {
        build();
    }

    MembraneModel(MembraneDesign design, Mesh mesh) : design_(std::move(design)), mesh_(std::move(mesh)) {
        build();
    }

    const MembraneDesign& design() const { return design_; }
    const Mesh& mesh() const { return mesh_; }
    std::size_t vertex_count() const { return mesh_.vertices.size(); }
    const std::vector<RestTriangle>& rest() const { return rest_; }
    const std::vector<bool>& fixed() const { return fixed_; }
    const std::vector<double>& lumped_mass() const { return lumped_mass_; }

    const MaterialModel& material(std::size_t t) const {
        return design_.material_for(mesh_.region_of_triangle[t]);
    }
    double thickness(std::size_t) const { return design_.silicone_thickness; }

    const std::vector<std::size_t>& clutch_triangles(ClutchId id) const { return clutch_tris_[index_of(id)]; }
    double clutch_area(ClutchId id) const { return clutch_area_[index_of(id)]; }

    std::array<Vec3, 3> gather(std::size_t t, std::span<const Vec3> x) const {
        const auto& tri = mesh_.triangles[t];
        return {x[tri[0]], x[tri[1]], x[tri[2]]};
    }

    std::vector<Vec3> positions(std::span<const Vec3> displacement) const {
        std::vector<Vec3> x(mesh_.vertices);
        for (std::size_t v = 0; v < x.size(); ++v) x[v] += displacement[v];
        return x;
    }

private:
    void build() {
        const auto& m = mesh_;
        rest_.reserve(m.triangles.size());
        lumped_mass_.assign(m.vertices.size(), 0.0);
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const auto& tri = m.triangles[t];
            rest_.push_back(make_rest_triangle(m.vertices[tri[0]].head<2>(), m.vertices[tri[1]].head<2>(),
                                               m.vertices[tri[2]].head<2>()));
            const double mass = design_.silicone.density * design_.silicone_thickness * rest_.back().area / 3.0;
            for (int v : tri) lumped_mass_[static_cast<std::size_t>(v)] += mass;
            if (const auto c = m.clutch_of_triangle[t]) {
                clutch_tris_[index_of(*c)].push_back(t);
                clutch_area_[index_of(*c)] += rest_.back().area;
            }
        }
        fixed_ = m.boundary_mask();
    }

    MembraneDesign design_;
    Mesh mesh_;
    std::vector<RestTriangle> rest_;
    std::vector<double> lumped_mass_;
    std::vector<bool> fixed_;
    std::array<std::vector<std::size_t>, 5> clutch_tris_{};
    std::array<double, 5> clutch_area_{};
};

using ModelPtr = std::shared_ptr<const MembraneModel>;

inline ModelPtr make_model(const MembraneDesign& design, const SolverConfig& config) {
    config.validate();
    return std::make_shared<const MembraneModel>(design, config.mesh_edge_length);
}

struct DeformedState {
    ModelPtr model;
    std::vector<Vec3> displacement;
    std::vector<Vec3> velocity;
    double pressure = 0.0;  // Pa gauge
    ClutchPattern pattern;
    double residual_norm = 0.0;  // N
    double time = 0.0;           // s, transients only

    static DeformedState rest(ModelPtr model, const ClutchPattern& pattern = {}) {
        DeformedState s;
        const std::size_t n = model->vertex_count();
        s.model = std::move(model);
        s.displacement.assign(n, Vec3::Zero());
        s.velocity.assign(n, Vec3::Zero());
        s.pattern = pattern;
        return s;
    }

    std::vector<Vec3> positions() const { return model->positions(displacement); }
};

// ---------------------------------------------------------------------------
// Force assembly
// ---------------------------------------------------------------------------

// Adds membrane forces and the stiffness of Active clutches; returns the
// total strain energy.
inline double internal_forces(const MembraneModel& model, std::span<const Vec3> x, const ClutchPattern& pattern,
                              const Wrinkle& wrinkle, std::span<Vec3> f) {
    const auto& tris = model.mesh().triangles;
    double energy = 0.0;
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const auto r = element_energy_and_forces(model.rest()[t], model.gather(t, x), model.material(t),
                                                 model.thickness(t), wrinkle);
        energy += r.energy;
        for (int k = 0; k < 3; ++k) f[tris[t][k]] += r.forces[k];
    }
    const auto& d = model.design();
    for (ClutchId id : kAllClutches) {
        if (!pattern.active(id)) continue;
        for (std::size_t t : model.clutch_triangles(id)) {
            const auto r = element_energy_and_forces(model.rest()[t], model.gather(t, x), d.clutch,
                                                     d.clutch_thickness, wrinkle);
            energy += r.energy;
            for (int k = 0; k < 3; ++k) f[tris[t][k]] += r.forces[k];
        }
    }
    return energy;
}

inline double strain_energy(const MembraneModel& model, std::span<const Vec3> x, const ClutchPattern& pattern,
                            const Wrinkle& wrinkle) {
    std::vector<Vec3> scratch(x.size(), Vec3::Zero());
    return internal_forces(model, x, pattern, wrinkle, scratch);
}

// Follower pressure load on the deformed surface, lumped equally to the
// three vertices of each face.
inline void add_pressure_forces(const Mesh& mesh, std::span<const Vec3> x, double pressure, std::span<Vec3> f) {
    if (pressure == 0.0) return;
    for (const auto& tri : mesh.triangles) {
        const Vec3 n2a = (x[tri[1]] - x[tri[0]]).cross(x[tri[2]] - x[tri[0]]);
        const Vec3 share = pressure * n2a / 6.0;
        for (int v : tri) f[v] += share;
    }
}

inline std::vector<Vec3> pressure_forces(const Mesh& mesh, std::span<const Vec3> displacement, double pressure) {
    if (pressure < 0.0) throw InvalidInput("pressure_forces: pressure must be non-negative");
    std::vector<Vec3> x(mesh.vertices);
    for (std::size_t v = 0; v < x.size(); ++v) x[v] += displacement[v];
    std::vector<Vec3> f(x.size(), Vec3::Zero());
    add_pressure_forces(mesh, x, pressure, f);
    return f;
}

struct ClutchForces {
    std::vector<Vec3> forces;  // added nodal forces from all Active clutches
    ShearMap shear;            // Pa, per Active clutch
};

// Interfacial shear of a clutch is estimated as the load it carries across
// the footprint: half the sum of its nodal force magnitudes (the two bonded
// ends pull in opposite directions) over the footprint area.
inline ClutchForces clutch_constraint_forces(const DeformedState& state, const Wrinkle& wrinkle) {
    const auto& model = *state.model;
    const auto& d = model.design();
    const auto& tris = model.mesh().triangles;
    const auto x = state.positions();
    ClutchForces out;
    out.forces.assign(x.size(), Vec3::Zero());
    std::vector<Vec3> own(x.size(), Vec3::Zero());
    std::vector<int> touched;
    for (ClutchId id : kAllClutches) {
        if (!state.pattern.active(id)) continue;
        touched.clear();
        for (std::size_t t : model.clutch_triangles(id)) {
            const auto r = element_energy_and_forces(model.rest()[t], model.gather(t, x), d.clutch,
                                                     d.clutch_thickness, wrinkle);
            for (int k = 0; k < 3; ++k) {
                own[tris[t][k]] += r.forces[k];
                touched.push_back(tris[t][k]);
            }
        }
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        double total = 0.0;
        for (int v : touched) {
            total += own[v].norm();
            out.forces[v] += own[v];
            own[v].setZero();
        }
        const double area = model.clutch_area(id);
        out.shear[id] = area > 0.0 ? 0.5 * total / area : 0.0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Dynamic relaxation
// ---------------------------------------------------------------------------

// Extra degrees of freedom coupled to the membrane during relaxation (for
// example a rigid payload). The default couples nothing.
//   add_forces(x, f)        add contact forces to f, record own generalised forces
//   residual_sq()           squared out-of-balance of the extra DoFs (N^2)
//   update_masses(s, x, m)  size own pseudo-masses; may add to vertex masses m
//   step()                  one unit-time-step velocity + position update
//   kinetic_energy(), stop(), save(), restore()  as for the membrane
struct NoCoupling {
    void add_forces(std::span<const Vec3>, std::span<Vec3>) {}
    double residual_sq() const { return 0.0; }
    void update_masses(double, std::span<const Vec3>, std::span<double>) {}
    void step() {}
    double kinetic_energy() const { return 0.0; }
    void stop() {}
    void save() {}
    void restore() {}
};

class NonConvergence : public SolverFailure {
public:
    NonConvergence(const std::string& what, DeformedState last, std::vector<double> history)
        : SolverFailure(what), last_state(std::move(last)), residual_history(std::move(history)) {}

    DeformedState last_state;
    std::vector<double> residual_history;
};

namespace detail {

// Pseudo-masses for unit time step, sized from a Gershgorin bound of the
// local tangent stiffness at the current configuration.
inline void pseudo_masses(const MembraneModel& model, std::span<const Vec3> x, const ClutchPattern& pattern,
                          double pressure, double safety, std::vector<double>& mass) {
    const auto& tris = model.mesh().triangles;
    const auto& d = model.design();
    mass.assign(x.size(), 0.0);
    std::vector<double> clutch_stiffness(tris.size(), 0.0);
    for (ClutchId id : kAllClutches) {
        if (!pattern.active(id)) continue;
        const double k = tangent_modulus_estimate(d.clutch, 1.0, 1.0) * d.clutch_thickness;
        for (std::size_t t : model.clutch_triangles(id)) clutch_stiffness[t] += k;
    }
    for (std::size_t t = 0; t < tris.size(); ++t) {
        const auto& rest = model.rest()[t];
        const auto xs = model.gather(t, x);
        Mat32 ds;
        ds.col(0) = xs[1] - xs[0];
        ds.col(1) = xs[2] - xs[0];
        const Mat32 f = ds * rest.dm_inv;
        const Eigen::SelfAdjointEigenSolver<Mat2> eig(f.transpose() * f, Eigen::EigenvaluesOnly);
        const double l2 = std::sqrt(std::max(eig.eigenvalues()(0), 1e-12));
        const double l1 = std::sqrt(std::max(eig.eigenvalues()(1), 1e-12));
        const double et =
            tangent_modulus_estimate(model.material(t), l1, l2) * model.thickness(t) * l1 * l1 + clutch_stiffness[t];
        const std::array<Vec2, 3> grad = {-(rest.dm_inv.row(0) + rest.dm_inv.row(1)).transpose(),
                                          rest.dm_inv.row(0).transpose(), rest.dm_inv.row(1).transpose()};
        const double gsum = grad[0].norm() + grad[1].norm() + grad[2].norm();
        const double kp = pressure * std::sqrt(rest.area) * l1;
        for (int k = 0; k < 3; ++k) {
            mass[tris[t][k]] += et * rest.area * grad[k].norm() * gsum + kp;
        }
    }
    for (double& m : mass) m *= 0.5 * safety;
}

inline double residual_norm(std::span<const Vec3> f, const std::vector<bool>& fixed) {
    double s = 0.0;
    for (std::size_t v = 0; v < f.size(); ++v) {
        if (!fixed[v]) s += f[v].squaredNorm();
    }
    return std::sqrt(s);
}

}  // namespace detail

struct RelaxStats {
    double residual = 0.0;
    long iterations = 0;
    bool converged = false;
};

// Relaxes positions x at fixed pressure and pattern until the out-of-balance
// force norm drops to tol or the iteration budget is spent.
template <class Coupling = NoCoupling>
RelaxStats relax(const MembraneModel& model, std::vector<Vec3>& x, const ClutchPattern& pattern, double pressure,
                 const Wrinkle& wrinkle, double tol, long budget, std::vector<double>& history,
                 Coupling&& coupling = Coupling{}, double safety = 2.0) {
    const auto& fixed = model.fixed();
    const std::size_t n = x.size();
    std::vector<Vec3> f(n), v(n, Vec3::Zero());
    std::vector<double> mass;
    std::vector<Vec3> saved = x;
    coupling.save();

    const auto forces = [&] {
        std::fill(f.begin(), f.end(), Vec3::Zero());
        internal_forces(model, x, pattern, wrinkle, f);
        add_pressure_forces(model.mesh(), x, pressure, f);
        coupling.add_forces(x, f);
        const double r2 = detail::residual_norm(f, fixed);
        return std::sqrt(r2 * r2 + coupling.residual_sq());
    };

    RelaxStats stats;
    double residual = forces();
    const double start_residual = residual;
    detail::pseudo_masses(model, x, pattern, pressure, safety, mass);
    coupling.update_masses(safety, x, mass);
    double ke_prev = 0.0;
    long since_mass_update = 0;
    // A bounded oscillation that never settles also means the pseudo-masses
    // are too light; it is detected as a residual that stops improving.
    constexpr long kStagnationWindow = 20000;
    double best = residual;
    long since_best = 0;

    while (residual > tol && stats.iterations < budget) {
        ++stats.iterations;
        double ke = coupling.kinetic_energy();
        for (std::size_t i = 0; i < n; ++i) {
            if (fixed[i]) continue;
            v[i] += f[i] / mass[i];
            ke += 0.5 * mass[i] * v[i].squaredNorm();
        }
        coupling.step();
        for (std::size_t i = 0; i < n; ++i) {
            if (!fixed[i]) x[i] += v[i];
        }
        residual = forces();
        if (!std::isfinite(residual) || residual > 1e4 * std::max(start_residual, tol)) {
            // Unstable: restart the increment with heavier pseudo-masses.
            x = saved;
            coupling.restore();
            std::fill(v.begin(), v.end(), Vec3::Zero());
            coupling.stop();
            safety *= 2.0;
            if (safety > 1e6) break;
            residual = forces();
            detail::pseudo_masses(model, x, pattern, pressure, safety, mass);
            coupling.update_masses(safety, x, mass);
            ke_prev = 0.0;
            continue;
        }
        if (ke < ke_prev) {
            std::fill(v.begin(), v.end(), Vec3::Zero());
            coupling.stop();
            ke_prev = 0.0;
            if (++since_mass_update >= 20) {
                since_mass_update = 0;
                detail::pseudo_masses(model, x, pattern, pressure, safety, mass);
                coupling.update_masses(safety, x, mass);
                saved = x;
                coupling.save();
            }
        } else {
            ke_prev = ke;
        }
        if (residual < 0.99 * best) {
            best = residual;
            since_best = 0;
        } else if (++since_best >= kStagnationWindow && safety < 1e6) {
            safety *= 2.0;
            since_best = 0;
            best = residual;
            std::fill(v.begin(), v.end(), Vec3::Zero());
            coupling.stop();
            ke_prev = 0.0;
            detail::pseudo_masses(model, x, pattern, pressure, safety, mass);
            coupling.update_masses(safety, x, mass);
        }
        if ((stats.iterations & 255) == 0) history.push_back(residual);
    }
    stats.residual = residual;
    stats.converged = residual <= tol;
    history.push_back(residual);
    return stats;
}

// Equilibrium under gauge pressure, starting from `initial` (its pattern
// and displacement). Pressure ramps from the initial state's pressure.
template <class Coupling = NoCoupling>
DeformedState solve_equilibrium(DeformedState initial, double pressure, const SolverConfig& config,
                                Coupling&& coupling = Coupling{},
                                const std::function<void(const DeformedState&)>& on_step = {}) {
    config.validate();
    if (!(pressure >= 0.0)) throw InvalidInput("solve_equilibrium: pressure must be non-negative");
    const auto& model = *initial.model;
    const Wrinkle wrinkle{config.wrinkle_stiffness_factor};
    std::vector<Vec3> x = initial.positions();
    std::vector<double> history;
    DeformedState state = std::move(initial);
    const double p0 = state.pressure;
    long used = 0;

    const auto fail = [&](const std::string& why) {
        DeformedState last = state;
        for (std::size_t v = 0; v < x.size(); ++v) last.displacement[v] = x[v] - model.mesh().vertices[v];
        return NonConvergence(why, std::move(last), history);
    };

    for (int k = 1; k <= config.pressure_steps; ++k) {
        const double p = p0 + (pressure - p0) * k / config.pressure_steps;
        const bool last_step = k == config.pressure_steps;
        const double tol = last_step ? config.residual_tol : 20.0 * config.residual_tol;
        while (true) {
            const auto stats =
                relax(model, x, state.pattern, p, wrinkle, tol, config.max_iterations - used, history,
                      coupling, config.relaxation_safety);
            used += stats.iterations;
            state.residual_norm = stats.residual;
            if (!stats.converged) {
                throw fail("solve_equilibrium: no convergence at " + std::to_string(p) + " Pa after " +
                           std::to_string(used) + " iterations (residual " + std::to_string(stats.residual) + " N)");
            }
            for (std::size_t v = 0; v < x.size(); ++v) state.displacement[v] = x[v] - model.mesh().vertices[v];
            state.pressure = p;
            const auto cf = clutch_constraint_forces(state, wrinkle);
            const ClutchPattern next = check_slip(state.pattern, cf.shear, config.slip_threshold);
            if (next.same_states(state.pattern)) break;
            state.pattern = next;
        }
        if (on_step) on_step(state);
    }
    std::fill(state.velocity.begin(), state.velocity.end(), Vec3::Zero());
    return state;
}

inline DeformedState solve_equilibrium(const MembraneDesign& design, const ClutchPattern& pattern, double pressure,
                                       const SolverConfig& config) {
    return solve_equilibrium(DeformedState::rest(make_model(design, config), pattern), pressure, config);
}

inline DeformedState solve_equilibrium(ModelPtr model, const ClutchPattern& pattern, double pressure,
                                       const SolverConfig& config) {
    return solve_equilibrium(DeformedState::rest(std::move(model), pattern), pressure, config);
}

// ---------------------------------------------------------------------------
// Apex
// ---------------------------------------------------------------------------

struct Apex {
    Vec3 point = Vec3::Zero();
    double height = 0.0;
    int vertex = 0;
};

// Highest deformed vertex; ties go to the smaller radial distance, then to
// the lower index.
inline Apex apex(const DeformedState& state) {
    const auto& verts = state.model->mesh().vertices;
    Apex best;
    best.vertex = -1;
    double best_r = 0.0;
    for (std::size_t v = 0; v < verts.size(); ++v) {
        const Vec3 p = verts[v] + state.displacement[v];
        const double r = p.head<2>().norm();
        if (best.vertex < 0 || p.z() > best.point.z() || (p.z() == best.point.z() && r < best_r)) {
            best.point = p;
            best.vertex = static_cast<int>(v);
            best_r = r;
        }
    }
    best.height = best.point.z();
    return best;
}

// ---------------------------------------------------------------------------
// Transients
// ---------------------------------------------------------------------------

// Largest stable explicit step for the lumped-mass system at configuration x.
inline double stable_time_step(const MembraneModel& model, std::span<const Vec3> x, const ClutchPattern& pattern,
                               double pressure) {
    std::vector<double> k;
    detail::pseudo_masses(model, x, pattern, pressure, 2.0, k);
    double dt = 1.0;
    const auto& fixed = model.fixed();
    for (std::size_t v = 0; v < k.size(); ++v) {
        if (fixed[v] || k[v] <= 0.0) continue;
        dt = std::min(dt, 2.0 * std::sqrt(model.lumped_mass()[v] / k[v]));
    }
    return 0.8 * dt;
}

struct TransientFrame {
    DeformedState state;
    double kinetic_energy = 0.0;
    double strain_energy = 0.0;
    double pressure_work = 0.0;  // work done by the pressure since the event
    double dissipated = 0.0;     // viscous dissipation since the event
};

// Applies `event` (if any) to a state and integrates the dynamics for
// `duration` seconds at constant pressure. Frames are emitted every
// config.frame_interval; the first frame is the input state.
inline std::vector<TransientFrame> dynamic_transient(const DeformedState& start,
                                                     const std::optional<ClutchEvent>& event,
                                                     double duration, const SolverConfig& config,
                                                     const std::function<bool(const TransientFrame&)>& on_frame = {}) {
    config.validate();
    if (duration < 0.0) throw InvalidInput("dynamic_transient: negative duration");
    const auto& model = *start.model;
    const Wrinkle wrinkle{config.wrinkle_stiffness_factor};
    std::vector<TransientFrame> frames;
    if (duration == 0.0) {
        frames.push_back({start});
        return frames;
    }
    const ClutchPattern pattern = event ? apply_event(start.pattern, *event) : start.pattern;

    std::vector<Vec3> x = start.positions();
    std::vector<Vec3> v = start.velocity;
    std::vector<Vec3> f(x.size());
    const auto& mass = model.lumped_mass();
    const auto& fixed = model.fixed();
    const double p = start.pressure;

    double dt = std::min(config.dt, stable_time_step(model, x, pattern, p));
    const double frame_dt = config.frame_interval;
    const long steps_per_frame = std::max(1L, static_cast<long>(std::ceil(frame_dt / dt - 1e-9)));
    dt = frame_dt / static_cast<double>(steps_per_frame);
    const long frame_count = static_cast<long>(std::ceil(duration / frame_dt - 1e-9));

    const auto make_frame = [&](double t, double energy, double work, double dissipated) {
        TransientFrame fr;
        fr.state.model = start.model;
        fr.state.pattern = pattern;
        fr.state.pressure = p;
        fr.state.time = t;
        fr.state.displacement.resize(x.size());
        fr.state.velocity = v;
        double ke = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            fr.state.displacement[i] = x[i] - model.mesh().vertices[i];
            ke += 0.5 * mass[i] * v[i].squaredNorm();
        }
        fr.state.residual_norm = detail::residual_norm(f, fixed);
        fr.kinetic_energy = ke;
        fr.strain_energy = energy;
        fr.pressure_work = work;
        fr.dissipated = dissipated;
        return fr;
    };

    const auto eval = [&] {
        std::fill(f.begin(), f.end(), Vec3::Zero());
        const double e = internal_forces(model, x, pattern, wrinkle, f);
        std::vector<Vec3> fp(x.size(), Vec3::Zero());
        add_pressure_forces(model.mesh(), x, p, fp);
        for (std::size_t i = 0; i < x.size(); ++i) f[i] += fp[i];
        return std::pair{e, std::move(fp)};
    };

    auto [energy, fp] = eval();
    double work = 0.0;
    double dissipated = 0.0;
    frames.push_back(make_frame(start.time, energy, 0.0, 0.0));
    frames.back().state.pattern = pattern;
    if (on_frame && !on_frame(frames.back())) return frames;

    const double c = config.viscous_damping;
    long step = 0;
    for (long fr = 1; fr <= frame_count; ++fr) {
        for (long s = 0; s < steps_per_frame; ++s) {
            ++step;
            // Velocity Verlet with viscous damping split over the two half kicks.
            std::vector<Vec3> fp_old = fp;
            std::vector<Vec3> dx(x.size(), Vec3::Zero());
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (fixed[i]) continue;
                v[i] = v[i] * (1.0 - 0.5 * c * dt) + 0.5 * dt * f[i] / mass[i];
                dx[i] = dt * v[i];
                dissipated += c * mass[i] * v[i].dot(dx[i]);
                x[i] += dx[i];
            }
            std::tie(energy, fp) = eval();
            for (std::size_t i = 0; i < x.size(); ++i) {
                if (fixed[i]) continue;
                work += 0.5 * (fp_old[i] + fp[i]).dot(dx[i]);
                v[i] = (v[i] + 0.5 * dt * f[i] / mass[i]) / (1.0 + 0.5 * c * dt);
            }
            if (!std::isfinite(energy)) {
                throw SolverFailure("dynamic_transient: non-finite state at step " + std::to_string(step) +
                                    " (t = " + std::to_string(start.time + step * dt) + " s)");
            }
        }
        frames.push_back(make_frame(start.time + fr * frame_dt, energy, work, dissipated));
        if (on_frame && !on_frame(frames.back())) break;
    }
    return frames;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline nlohmann::json state_sidecar(const DeformedState& s) {
    const Apex a = apex(s);
    return {{"pressure_pa", s.pressure},
            {"pattern", pattern_to_json(s.pattern)},
            {"apex_mm", a.height * 1e3},
            {"apex_point_m", {a.point.x(), a.point.y(), a.point.z()}},
            {"residual", s.residual_norm}};
}

}  // namespace clutchshape
