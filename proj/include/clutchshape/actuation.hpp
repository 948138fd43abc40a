#pragma once

// Actuation scenarios built on the solver.
//
// Mode 1 moves a light payload (a ball) that rides the membrane without
// loading it: quasi-static workspace solves, then a launch by releasing the
// inboard clutch. Mode 2 lifts and tilts a heavy plate resting on the
// membrane, then lets it return when the outboard clutch is released.

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "clutchshape/solver.hpp"
#include "clutchshape/trajectory.hpp"

namespace clutchshape {

// ---------------------------------------------------------------------------
// Directions
// ---------------------------------------------------------------------------

// Front is +y, Right is +x, Up is +z.
enum class DoFDirection { BackRight, FrontLeft, FrontRight, BackLeft, Front, Back, Left, Right, Up };

inline constexpr std::array<DoFDirection, 9> kAllDirections = {
    DoFDirection::BackRight, DoFDirection::FrontLeft, DoFDirection::FrontRight,
    DoFDirection::BackLeft,  DoFDirection::Front,     DoFDirection::Back,
    DoFDirection::Left,      DoFDirection::Right,     DoFDirection::Up};

inline constexpr std::array<DoFDirection, 8> kPlanarDirections = {
    DoFDirection::BackRight, DoFDirection::FrontLeft, DoFDirection::FrontRight, DoFDirection::BackLeft,
    DoFDirection::Front,     DoFDirection::Back,      DoFDirection::Left,       DoFDirection::Right};

inline std::string_view to_string(DoFDirection d) {
    switch (d) {
        case DoFDirection::BackRight: return "Back-Right";
        case DoFDirection::FrontLeft: return "Front-Left";
        case DoFDirection::FrontRight: return "Front-Right";
        case DoFDirection::BackLeft: return "Back-Left";
        case DoFDirection::Front: return "Front";
        case DoFDirection::Back: return "Back";
        case DoFDirection::Left: return "Left";
        case DoFDirection::Right: return "Right";
        case DoFDirection::Up: return "Up";
    }
    return "?";
}

inline DoFDirection parse_dof_direction(std::string_view s) {
    std::string key;
    for (char c : s) {
        if (c != '-' && c != '_' && c != ' ') key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    for (DoFDirection d : kAllDirections) {
        std::string name;
        for (char c : to_string(d)) {
            if (c != '-') name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
        if (key == name) return d;
    }
    throw InvalidInput("unknown direction '" + std::string(s) + "'");
}

// Degree-of-freedom grouping used in force reports.
inline int dof_index(DoFDirection d) {
    switch (d) {
        case DoFDirection::BackRight:
        case DoFDirection::FrontLeft: return 1;
        case DoFDirection::FrontRight:
        case DoFDirection::BackLeft: return 2;
        case DoFDirection::Front:
        case DoFDirection::Back: return 3;
        case DoFDirection::Left:
        case DoFDirection::Right: return 4;
        case DoFDirection::Up: return 5;
    }
    return 0;
}

inline Vec3 direction_vector(DoFDirection d) {
    const double s = std::sqrt(0.5);
    switch (d) {
        case DoFDirection::BackRight: return {s, -s, 0.0};
        case DoFDirection::FrontLeft: return {-s, s, 0.0};
        case DoFDirection::FrontRight: return {s, s, 0.0};
        case DoFDirection::BackLeft: return {-s, -s, 0.0};
        case DoFDirection::Front: return {0.0, 1.0, 0.0};
        case DoFDirection::Back: return {0.0, -1.0, 0.0};
        case DoFDirection::Left: return {-1.0, 0.0, 0.0};
        case DoFDirection::Right: return {1.0, 0.0, 0.0};
        case DoFDirection::Up: return {0.0, 0.0, 1.0};
    }
    return Vec3::Zero();
}

// The held sector stays low while the rest of the membrane bulges, so the
// payload is carried toward it. Moving Right holds the East clutch.
inline std::vector<ClutchId> dof_outboard_clutches(DoFDirection d) {
    switch (d) {
        case DoFDirection::Right: return {ClutchId::OutboardE};
        case DoFDirection::Left: return {ClutchId::OutboardW};
        case DoFDirection::Front: return {ClutchId::OutboardN};
        case DoFDirection::Back: return {ClutchId::OutboardS};
        case DoFDirection::FrontRight: return {ClutchId::OutboardN, ClutchId::OutboardE};
        case DoFDirection::FrontLeft: return {ClutchId::OutboardN, ClutchId::OutboardW};
        case DoFDirection::BackRight: return {ClutchId::OutboardS, ClutchId::OutboardE};
        case DoFDirection::BackLeft: return {ClutchId::OutboardS, ClutchId::OutboardW};
        case DoFDirection::Up: return {};
    }
    return {};
}

// Pattern held during inflation. Workspace trials for Up use no clutches;
// launches always need the inboard clutch so there is something to release.
inline ClutchPattern dof_pattern(DoFDirection d, bool for_launch = false) {
    ClutchPattern p;
    for (ClutchId id : dof_outboard_clutches(d)) p.states[index_of(id)] = ClutchState::Active;
    if (d != DoFDirection::Up || for_launch) p.states[index_of(ClutchId::Inboard)] = ClutchState::Active;
    return p;
}

// Default trial pressures: planar workspace and ordinal force trials at
// 1.7 kPa, cardinal and Up force trials at 2.8 kPa, Mode 2 at 3.1 kPa.
inline constexpr double kWorkspacePressure = 1700.0;
inline constexpr double kCardinalForcePressure = 2800.0;
inline constexpr double kMode2Pressure = 3100.0;

inline double default_launch_pressure(DoFDirection d) {
    return dof_outboard_clutches(d).size() == 2 ? kWorkspacePressure : kCardinalForcePressure;
}

// ---------------------------------------------------------------------------
// Payload contact point
// ---------------------------------------------------------------------------

struct Payload {
    double mass = 0.0037;     // kg
    double diameter = 0.040;  // m
};

// Vertices that carry a resting ball: those within a quarter diameter of
// the membrane centre in the reference configuration.
inline std::vector<int> contact_patch(const Mesh& mesh, const Payload& payload) {
    const double r = 0.25 * payload.diameter;
    std::vector<int> patch;
    int nearest = 0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        const double d = mesh.vertices[v].head<2>().norm();
        if (d <= r) patch.push_back(static_cast<int>(v));
        if (d < mesh.vertices[static_cast<std::size_t>(nearest)].head<2>().norm()) nearest = static_cast<int>(v);
    }
    if (patch.empty()) patch.push_back(nearest);
    return patch;
}

struct PatchKinematics {
    Vec3 point = Vec3::Zero();
    Vec3 normal = Vec3::UnitZ();
    Vec3 velocity = Vec3::Zero();
};

// Mass-weighted mean position and velocity of the patch, with the
// area-weighted normal of the faces touching it.
inline PatchKinematics patch_kinematics(const MembraneModel& model, std::span<const Vec3> x,
                                        std::span<const Vec3> v, const std::vector<int>& patch) {
    PatchKinematics k;
    const auto& mass = model.lumped_mass();
    double m = 0.0;
    Vec3 p = Vec3::Zero(), vel = Vec3::Zero();
    std::vector<bool> in(x.size(), false);
    for (int i : patch) {
        const auto u = static_cast<std::size_t>(i);
        in[u] = true;
        m += mass[u];
        p += mass[u] * x[u];
        if (!v.empty()) vel += mass[u] * v[u];
    }
    k.point = p / m;
    k.velocity = vel / m;
    Vec3 n = Vec3::Zero();
    for (const auto& tri : model.mesh().triangles) {
        if (!in[tri[0]] && !in[tri[1]] && !in[tri[2]]) continue;
        n += (x[tri[1]] - x[tri[0]]).cross(x[tri[2]] - x[tri[0]]);
    }
    if (n.norm() > 0.0) k.normal = n.normalized();
    return k;
}

inline Vec3 ball_centre(const PatchKinematics& k, const Payload& payload) {
    return k.point + 0.5 * payload.diameter * k.normal;
}

// ---------------------------------------------------------------------------
// Mode 1: workspace
// ---------------------------------------------------------------------------

struct WorkspaceEntry {
    Vec3 displacement = Vec3::Zero();  // ball centre, relative to the deflated membrane
    double lateral = 0.0;              // m, horizontal magnitude
    double vertical = 0.0;             // m
    bool flagged = false;              // a clutch slipped or the solve failed
    std::string note;
    std::optional<DeformedState> state;
};

using WorkspaceMap = std::map<DoFDirection, WorkspaceEntry>;

inline WorkspaceMap mode1_workspace(const MembraneDesign& design, double pressure,
                                    const std::set<DoFDirection>& directions, const SolverConfig& config = {},
                                    const Payload& payload = {}) {
    if (!(pressure > 0.0)) throw InvalidInput("mode1_workspace: pressure must be positive");
    if (directions.empty()) throw InvalidInput("mode1_workspace: no directions requested");
    const ModelPtr model = make_model(design, config);
    const auto patch = contact_patch(model->mesh(), payload);
    const Vec3 rest_centre =
        ball_centre(patch_kinematics(*model, model->mesh().vertices, {}, patch), payload);
    WorkspaceMap out;
    for (DoFDirection d : directions) {
        WorkspaceEntry e;
        const ClutchPattern pattern = dof_pattern(d);
        try {
            DeformedState s = solve_equilibrium(model, pattern, pressure, config);
            const auto x = s.positions();
            e.displacement = ball_centre(patch_kinematics(*model, x, {}, patch), payload) - rest_centre;
            for (ClutchId id : kAllClutches) {
                if (s.pattern.state(id) == ClutchState::Slipped) {
                    e.flagged = true;
                    e.note = std::string(to_string(id)) + " slipped";
                }
            }
            e.state = std::move(s);
        } catch (const NonConvergence& err) {
            e.flagged = true;
            e.note = err.what();
        }
        e.lateral = e.displacement.head<2>().norm();
        e.vertical = e.displacement.z();
        out.emplace(d, std::move(e));
    }
    return out;
}

inline nlohmann::json workspace_to_json(const WorkspaceMap& w) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [d, e] : w) {
        j.push_back({{"direction", to_string(d)},
                     {"displacement_m", {e.displacement.x(), e.displacement.y(), e.displacement.z()}},
                     {"lateral_mm", e.lateral * 1e3},
                     {"vertical_mm", e.vertical * 1e3},
                     {"flagged", e.flagged},
                     {"note", e.note}});
    }
    return j;
}

// ---------------------------------------------------------------------------
// Mode 1: launch
// ---------------------------------------------------------------------------

struct LaunchOptions {
    double transient_duration = 0.2;  // s of membrane dynamics after the release
    double flight_duration = 1.0;     // s cap on the ballistic segment
    double sample_rate = 100.0;       // Hz
    int rest_samples = 5;             // samples recorded before the release
};

struct LaunchResult {
    TrajectoryRecord record;
    bool released = false;
    double release_time = 0.0;
    Vec3 release_position = Vec3::Zero();
    Vec3 release_velocity = Vec3::Zero();
    std::size_t first_ballistic_sample = 0;  // index into record.samples
};

// The ball rides the contact patch until the surface pulls away faster than
// gravity can follow (normal acceleration below -g n_z); it then flies
// ballistically from the surface position and velocity at that instant.
inline LaunchResult mode1_launch(const MembraneDesign& design, DoFDirection direction, double pressure,
                                 const Payload& payload = {}, const SolverConfig& config = {},
                                 const LaunchOptions& options = {}) {
    if (!(payload.mass > 0.0 && payload.mass < 0.05)) throw InvalidInput("mode1_launch: payload must be under 50 g");
    if (!(payload.diameter > 0.0)) throw InvalidInput("mode1_launch: payload diameter must be positive");
    if (pressure < 0.0) throw InvalidInput("mode1_launch: pressure must be non-negative");
    if (!(options.sample_rate > 0.0)) throw InvalidInput("mode1_launch: sample_rate must be positive");
    const ClutchPattern pattern = dof_pattern(direction, true);
    const ModelPtr model = make_model(design, config);
    const auto patch = contact_patch(model->mesh(), payload);
    const DeformedState start = pressure > 0.0 ? solve_equilibrium(model, pattern, pressure, config)
                                               : DeformedState::rest(model, pattern);
    if (!start.pattern.active(ClutchId::Inboard)) {
        throw SolverFailure("mode1_launch: inboard clutch slipped during inflation");
    }

    LaunchResult result;
    result.record.payload_mass = payload.mass;
    result.record.sample_rate = options.sample_rate;
    const double sample_dt = 1.0 / options.sample_rate;
    const auto add = [&](double t, const Vec3& p) { result.record.samples.push_back({t, p, std::nullopt}); };

    const auto k0 = patch_kinematics(*model, start.positions(), start.velocity, patch);
    for (int i = options.rest_samples; i > 0; --i) add(-i * sample_dt, ball_centre(k0, payload));

    long next_sample = 0;
    std::optional<Vec3> prev_velocity;
    SolverConfig cfg = config;
    cfg.frame_interval = std::min(config.frame_interval, sample_dt);
    const double frame_dt = cfg.frame_interval;
    dynamic_transient(start, ClutchEvent{0.0, ClutchId::Inboard, Transition::Deactivate}, options.transient_duration, cfg,
                      [&](const TransientFrame& fr) {
                          const double t = fr.state.time - start.time;
                          const auto x = fr.state.positions();
                          const auto k = patch_kinematics(*model, x, fr.state.velocity, patch);
                          const Vec3 c = ball_centre(k, payload);
                          if (prev_velocity) {
                              const Vec3 a = (k.velocity - *prev_velocity) / frame_dt;
                              if (a.dot(k.normal) < -kGravity * k.normal.z() && k.velocity.dot(k.normal) > 0.0) {
                                  result.released = true;
                                  result.release_time = t;
                                  result.release_position = c;
                                  // Contact only pushes along the normal; tangential
                                  // membrane waves do not carry the ball.
                                  result.release_velocity = k.velocity.dot(k.normal) * k.normal;
                                  return false;
                              }
                          }
                          prev_velocity = k.velocity;
                          if (t + 1e-12 >= next_sample * sample_dt) {
                              add(next_sample * sample_dt, c);
                              ++next_sample;
                          }
                          return true;
                      });

    if (result.released) {
        result.first_ballistic_sample = result.record.samples.size();
        const double tr = result.release_time;
        const Vec3 p0 = result.release_position;
        const Vec3 v0 = result.release_velocity;
        for (long i = next_sample;; ++i) {
            const double t = i * sample_dt;
            const double tau = t - tr;
            if (tau > options.flight_duration) break;
            const Vec3 p = p0 + v0 * tau - 0.5 * kGravity * tau * tau * Vec3::UnitZ();
            if (tau > 0.0 && p.z() < p0.z() && v0.z() - kGravity * tau < 0.0) break;  // back at launch height
            add(t, p);
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Force reports
// ---------------------------------------------------------------------------

struct ForceTrial {
    DoFDirection direction = DoFDirection::Up;
    double magnitude = 0.0;  // N
    Vec3 unit = Vec3::Zero();
};

struct ForceAggregate {
    DoFDirection direction = DoFDirection::Up;
    int trials = 0;
    double mean = 0.0;         // N
    double std_dev = 0.0;      // N, sample standard deviation
    double consistency = 0.0;  // %
    Vec3 mean_direction = Vec3::Zero();
};

struct ForceReport {
    std::vector<ForceTrial> trials;
    std::vector<ForceAggregate> aggregates;  // in Table I order
};

inline ForceReport build_force_report(const std::vector<ForceTrial>& trials) {
    ForceReport r;
    r.trials = trials;
    for (DoFDirection d : kAllDirections) {
        std::vector<double> mags;
        std::vector<Vec3> dirs;
        for (const auto& t : trials) {
            if (t.direction != d) continue;
            mags.push_back(t.magnitude);
            dirs.push_back(t.unit);
        }
        if (mags.empty()) continue;
        ForceAggregate a;
        a.direction = d;
        a.trials = static_cast<int>(mags.size());
        for (double m : mags) a.mean += m;
        a.mean /= static_cast<double>(mags.size());
        if (mags.size() > 1) {
            double ss = 0.0;
            for (double m : mags) ss += (m - a.mean) * (m - a.mean);
            a.std_dev = std::sqrt(ss / static_cast<double>(mags.size() - 1));
        }
        const auto c = directional_consistency(dirs);
        a.consistency = c.mean;
        a.mean_direction = c.mean_direction;
        r.aggregates.push_back(a);
    }
    return r;
}

inline nlohmann::json force_report_to_json(const ForceReport& r) {
    nlohmann::json trials = nlohmann::json::array();
    for (const auto& t : r.trials) {
        trials.push_back({{"direction", to_string(t.direction)},
                          {"force_n", t.magnitude},
                          {"unit", {t.unit.x(), t.unit.y(), t.unit.z()}}});
    }
    nlohmann::json agg = nlohmann::json::array();
    for (const auto& a : r.aggregates) {
        agg.push_back({{"dof", dof_index(a.direction)},
                       {"direction", to_string(a.direction)},
                       {"trials", a.trials},
                       {"force_n", a.mean},
                       {"std_n", a.std_dev},
                       {"consistency_pct", a.consistency},
                       {"mean_direction", {a.mean_direction.x(), a.mean_direction.y(), a.mean_direction.z()}}});
    }
    return {{"trials", trials}, {"aggregates", agg}};
}

inline std::string render_force_table(const ForceReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(7) << "DoF" << std::setw(13) << "Direction" << std::right << std::setw(11)
       << "Force (N)" << std::setw(10) << "Std (N)" << std::setw(18) << "Consistency (%)" << '\n';
    os << std::fixed;
    for (const auto& a : r.aggregates) {
        os << std::left << std::setw(7) << ("DoF " + std::to_string(dof_index(a.direction))) << std::setw(13)
           << to_string(a.direction) << std::right << std::setprecision(2) << std::setw(11) << a.mean
           << std::setw(10) << a.std_dev << std::setprecision(1) << std::setw(18) << a.consistency << '\n';
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Mode 2: rigid plate on the membrane
// ---------------------------------------------------------------------------

struct Plate {
    double mass = 0.82;         // kg
    double half_extent = 0.10;  // m, half the side of the square plate
};

// Plate plane z = height + slope . (x, y).
struct PlatePose {
    double height = 0.0;
    Vec2 slope = Vec2::Zero();
};

// Three-DoF rigid plate coupled to the membrane through frictionless
// penalty contact. The plate also rests on the clamp ring (z = 0, between
// the membrane radius and a ring width beyond it) when it sits low.
class PlateCoupling {
public:
    PlateCoupling(const MembraneModel& model, const Plate& plate, PlatePose pose = {},
                  double contact_stiffness = 1e3, double rim_stiffness = 1e5)
        : model_(&model), plate_(plate), pose_(pose), saved_(pose), k_(contact_stiffness), k_rim_(rim_stiffness) {
        if (!(plate.mass > 0.0) || !(plate.half_extent > 0.0)) throw InvalidInput("plate: mass and size must be positive");
        const double r0 = model.design().radius;
        constexpr int kRimPoints = 72;
        for (double r : {r0, r0 + 0.015}) {
            for (int j = 0; j < kRimPoints; ++j) {
                const double a = 2.0 * kPi * j / kRimPoints;
                const Vec2 p(r * std::cos(a), r * std::sin(a));
                if (on_plate(p)) rim_.push_back(p);
            }
        }
    }

    const PlatePose& pose() const { return pose_; }
    void set_pose(const PlatePose& p) { pose_ = p; }
    // Holds the slope fixed; only the height relaxes.
    void hold_slope(bool on) { hold_slope_ = on; }

    // Generalised contact force on (height, slope_x, slope_y), gravity excluded.
    const Vec3& contact_force() const { return contact_; }
    int contacts() const { return contacts_; }

    void add_forces(std::span<const Vec3> x, std::span<Vec3> f) {
        contact_.setZero();
        contacts_ = 0;
        const auto& fixed = model_->fixed();
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (fixed[i] || !on_plate(x[i].head<2>())) continue;
            const double d = x[i].z() - plane(x[i].head<2>());
            if (d <= 0.0) continue;
            const double fn = k_ * d;
            f[i] -= fn * Vec3(-pose_.slope.x(), -pose_.slope.y(), 1.0);
            contact_ += fn * Vec3(1.0, x[i].x(), x[i].y());
            ++contacts_;
        }
        for (const Vec2& p : rim_) {
            const double d = -plane(p);
            if (d <= 0.0) continue;
            contact_ += k_rim_ * d * Vec3(1.0, p.x(), p.y());
            ++contacts_;
        }
        force_ = contact_ - Vec3(plate_.mass * kGravity, 0.0, 0.0);
    }

    double residual_sq() const {
        const double a = plate_.half_extent;
        if (hold_slope_) return force_.x() * force_.x();
        return force_.x() * force_.x() + (force_.y() / a) * (force_.y() / a) + (force_.z() / a) * (force_.z() / a);
    }

    void update_masses(double safety, std::span<const Vec3> x, std::span<double> vertex_mass) {
        constexpr double kBand = 0.003;  // m; vertices this close may touch before the next update
        Vec3 row = Vec3::Zero();
        const auto& fixed = model_->fixed();
        const auto add = [&](const Vec2& p, double k) {
            const Vec3 arm(1.0, std::abs(p.x()), std::abs(p.y()));
            row += k * arm * (arm.sum() + 1.0);
        };
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (fixed[i] || !on_plate(x[i].head<2>())) continue;
            if (x[i].z() - plane(x[i].head<2>()) < -kBand) continue;
            vertex_mass[i] += safety * k_;
            add(x[i].head<2>(), k_);
        }
        for (const Vec2& p : rim_) {
            if (-plane(p) < -kBand) continue;
            add(p, k_rim_);
        }
        // Floor: a handful of contacts near the plate centre.
        const double a = plate_.half_extent;
        const Vec3 floor = 4.0 * k_ * Vec3(3.0, 0.25 * a, 0.25 * a);
        mass_ = 0.5 * safety * row.cwiseMax(floor);
    }

    void step() {
        velocity_.x() += force_.x() / mass_.x();
        if (!hold_slope_) {
            velocity_.y() += force_.y() / mass_.y();
            velocity_.z() += force_.z() / mass_.z();
        }
        pose_.height += velocity_.x();
        pose_.slope += velocity_.tail<2>();
    }

    double kinetic_energy() const { return 0.5 * mass_.dot(velocity_.cwiseProduct(velocity_)); }
    void stop() { velocity_.setZero(); }
    void save() { saved_ = pose_; }
    void restore() { pose_ = saved_; }

private:
    bool on_plate(const Vec2& p) const {
        return std::abs(p.x()) <= plate_.half_extent && std::abs(p.y()) <= plate_.half_extent;
    }
    double plane(const Vec2& p) const { return pose_.height + pose_.slope.dot(p); }

    const MembraneModel* model_;
    Plate plate_;
    PlatePose pose_, saved_;
    double k_, k_rim_;
    std::vector<Vec2> rim_;
    bool hold_slope_ = false;
    Vec3 contact_ = Vec3::Zero();
    Vec3 force_ = Vec3::Zero();
    Vec3 velocity_ = Vec3::Zero();
    Vec3 mass_ = Vec3::Ones();
    int contacts_ = 0;
};

// Horizontal unit vector toward the clutch that defines the roll axis: the
// first Active outboard clutch, else +x.
inline Vec2 roll_reference(const MembraneDesign& design, const ClutchPattern& pattern) {
    for (ClutchId id : kOutboardClutches) {
        if (!pattern.active(id)) continue;
        if (const auto* fp = design.footprint(id)) return {std::cos(fp->azimuth), std::sin(fp->azimuth)};
    }
    return {1.0, 0.0};
}

// Roll in degrees about the horizontal axis perpendicular to `toward`;
// positive when the plate descends toward that side.
inline double roll_degrees(const PlatePose& pose, const Vec2& toward) {
    return std::atan(-pose.slope.dot(toward)) * 180.0 / kPi;
}

struct PressureProfile {
    std::function<double(double)> pressure;  // Pa at time t
    double duration = 10.0;                  // s
    int samples = 20;

    static PressureProfile ramp(double peak, double duration = 10.0, int samples = 20) {
        return {[peak, duration](double t) { return peak * std::clamp(t / duration, 0.0, 1.0); }, duration, samples};
    }
};

struct Mode2TiltResult {
    std::vector<double> time;      // s
    std::vector<double> pressure;  // Pa
    std::vector<double> roll_deg;
    Plate plate;
    PlatePose pose;
    Vec2 roll_axis_ref = Vec2::UnitX();
    std::optional<DeformedState> state;
};

inline Mode2TiltResult mode2_tilt(const MembraneDesign& design, const ClutchPattern& pattern,
                                  const PressureProfile& profile, const Plate& plate = {},
                                  const SolverConfig& config = {}) {
    if (plate.mass < 0.1) throw InvalidInput("mode2_tilt: plate must weigh at least 0.1 kg");
    if (!profile.pressure || profile.samples < 1 || !(profile.duration > 0.0)) {
        throw InvalidInput("mode2_tilt: invalid pressure profile");
    }
    const ModelPtr model = make_model(design, config);
    Mode2TiltResult r;
    r.plate = plate;
    r.roll_axis_ref = roll_reference(design, pattern);
    PlateCoupling coupling(*model, plate);
    DeformedState state = DeformedState::rest(model, pattern);
    SolverConfig step_cfg = config;
    step_cfg.pressure_steps = 1;
    const auto record = [&](double t) {
        r.time.push_back(t);
        r.pressure.push_back(state.pressure);
        r.roll_deg.push_back(roll_degrees(coupling.pose(), r.roll_axis_ref));
    };
    record(0.0);
    for (int k = 1; k <= profile.samples; ++k) {
        const double t = profile.duration * k / profile.samples;
        const double p = profile.pressure(t);
        if (!(p >= 0.0)) throw InvalidInput("mode2_tilt: profile gave a negative pressure");
        state = solve_equilibrium(std::move(state), p, step_cfg, coupling);
        if (coupling.pose().slope.norm() > 1.0 || coupling.contacts() == 0) {
            throw SolverFailure("mode2_tilt: plate slid off its support at t = " + std::to_string(t) + " s");
        }
        record(t);
    }
    r.pose = coupling.pose();
    r.state = std::move(state);
    return r;
}

struct Mode2ReleaseOptions {
    double damping_ratio = 0.2;
    double duration = 0.0;  // s; 0 picks ten decay time constants (at least 1 s)
    double sample_rate = 100.0;
};

struct Mode2ReleaseResult {
    std::vector<double> time;  // s after the release
    std::vector<double> roll_deg;
    double initial_roll_deg = 0.0;
    double final_roll_deg = 0.0;  // released equilibrium
    double roll_stiffness = 0.0;  // N m / rad
    double inertia = 0.0;         // kg m^2
    double natural_frequency = 0.0;  // rad/s
};

// Closed-form response of I th'' + c th' + K (th - th_eq) = 0 from rest.
inline double second_order_step(double e0, double wn, double zeta, double t) {
    if (zeta < 1.0) {
        const double wd = wn * std::sqrt(1.0 - zeta * zeta);
        return e0 * std::exp(-zeta * wn * t) * (std::cos(wd * t) + zeta * wn / wd * std::sin(wd * t));
    }
    if (zeta == 1.0) return e0 * std::exp(-wn * t) * (1.0 + wn * t);
    const double s = wn * std::sqrt(zeta * zeta - 1.0);
    const double r1 = -zeta * wn + s, r2 = -zeta * wn - s;
    return e0 * (r2 * std::exp(r1 * t) - r1 * std::exp(r2 * t)) / (r2 - r1);
}

// Releases the Active outboard clutches of a tilted state. The plate's roll
// then follows a second-order model: the roll stiffness is measured by
// holding the plate at its tilted slope in the released membrane, the
// inertia is that of the square plate, and damping comes from the ratio.
inline Mode2ReleaseResult mode2_release(const Mode2TiltResult& tilt, const Mode2ReleaseOptions& options = {},
                                        const SolverConfig& config = {}) {
    if (!tilt.state) throw InvalidInput("mode2_release: tilt result carries no state");
    if (!(options.damping_ratio >= 0.0)) throw InvalidInput("mode2_release: damping_ratio must be non-negative");
    if (!(options.sample_rate > 0.0) || options.duration < 0.0) throw InvalidInput("mode2_release: invalid sampling");
    const DeformedState& tilted = *tilt.state;
    const auto& model = *tilted.model;
    const Vec2 u = tilt.roll_axis_ref;

    ClutchPattern released = tilted.pattern;
    for (ClutchId id : kOutboardClutches) {
        if (released.active(id)) released = apply_event(released, {0.0, id, Transition::Deactivate});
    }
    SolverConfig cfg = config;
    cfg.pressure_steps = 1;

    Mode2ReleaseResult r;
    r.initial_roll_deg = roll_degrees(tilt.pose, u);
    r.inertia = tilt.plate.mass * tilt.plate.half_extent * tilt.plate.half_extent / 3.0;

    DeformedState start = tilted;
    start.pattern = released;
    PlateCoupling free_plate(model, tilt.plate, tilt.pose);
    solve_equilibrium(start, tilted.pressure, cfg, free_plate);
    r.final_roll_deg = roll_degrees(free_plate.pose(), u);

    const double e0 = (r.initial_roll_deg - r.final_roll_deg) * kPi / 180.0;
    if (std::abs(e0) > 1e-6) {
        PlateCoupling held(model, tilt.plate, tilt.pose);
        held.hold_slope(true);
        solve_equilibrium(start, tilted.pressure, cfg, held);
        // Restoring generalised force on the slope along u; roll = -atan(slope . u).
        const double q = held.contact_force().tail<2>().dot(u);
        const double sigma0 = tilt.pose.slope.dot(u);
        const double sigma_eq = free_plate.pose().slope.dot(u);
        const double k_sigma = -q / (sigma0 - sigma_eq);
        const double dsigma = 1.0 + sigma0 * sigma0;  // d(slope)/d(roll)
        r.roll_stiffness = k_sigma * dsigma * dsigma;
        if (!(r.roll_stiffness > 0.0)) throw SolverFailure("mode2_release: released membrane gives no restoring moment");
        r.natural_frequency = std::sqrt(r.roll_stiffness / r.inertia);
    }

    double duration = options.duration;
    if (duration == 0.0) {
        duration = 1.0;
        if (r.natural_frequency > 0.0 && options.damping_ratio > 0.0) {
            duration = std::max(duration, 10.0 / (std::min(options.damping_ratio, 1.0) * r.natural_frequency));
        }
    }
    const long n = static_cast<long>(std::ceil(duration * options.sample_rate - 1e-9));
    for (long i = 0; i <= n; ++i) {
        const double t = i / options.sample_rate;
        const double e = r.natural_frequency > 0.0
                             ? second_order_step(e0, r.natural_frequency, options.damping_ratio, t)
                             : e0;
        r.time.push_back(t);
        r.roll_deg.push_back(r.final_roll_deg + e * 180.0 / kPi);
    }
    return r;
}

inline nlohmann::json mode2_to_json(const Mode2TiltResult& tilt, const Mode2ReleaseResult* release) {
    nlohmann::json j{{"tilt",
                      {{"time_s", tilt.time},
                       {"pressure_pa", tilt.pressure},
                       {"roll_deg", tilt.roll_deg},
                       {"final_roll_deg", tilt.roll_deg.empty() ? 0.0 : tilt.roll_deg.back()},
                       {"plate_height_m", tilt.pose.height},
                       {"plate_slope", {tilt.pose.slope.x(), tilt.pose.slope.y()}}}}};
    if (release) {
        j["release"] = {{"time_s", release->time},
                        {"roll_deg", release->roll_deg},
                        {"initial_roll_deg", release->initial_roll_deg},
                        {"final_roll_deg", release->final_roll_deg},
                        {"roll_stiffness_nm_per_rad", release->roll_stiffness},
                        {"inertia_kg_m2", release->inertia},
                        {"natural_frequency_rad_s", release->natural_frequency}};
    }
    return j;
}

}  // namespace clutchshape
