#pragma once

// Interactive sessions and batch scenarios.
//
// A Session owns one membrane and serialises the commands applied to it.
// Every accepted command is appended to the session log; replaying the log
// on a fresh session reproduces the final state bit for bit because each
// command is a deterministic, single-threaded solver call.

#include <atomic>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "clutchshape/actuation.hpp"
#include "clutchshape/pointcloud.hpp"

namespace clutchshape {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::size_t kMaxStreamVertices = 5000;

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SetPressure {
    double pressure = 0.0;  // Pa
};
struct ClutchCommand {
    ClutchId clutch = ClutchId::Inboard;
    Transition transition = Transition::Activate;
};
struct TriggerTransient {
    double duration = 0.2;  // s
};
struct ResetCommand {};

using Command = std::variant<SetPressure, ClutchCommand, TriggerTransient, ResetCommand>;

inline nlohmann::json command_to_json(const Command& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, SetPressure>) {
                return {{"command", "set_pressure"}, {"pressure_pa", v.pressure}};
            } else if constexpr (std::is_same_v<T, ClutchCommand>) {
                return {{"command", "clutch_event"},
                        {"clutch", to_string(v.clutch)},
                        {"transition", to_string(v.transition)}};
            } else if constexpr (std::is_same_v<T, TriggerTransient>) {
                return {{"command", "trigger_transient"}, {"duration_s", v.duration}};
            } else {
                return {{"command", "reset"}};
            }
        },
        c);
}

inline Command command_from_json(const nlohmann::json& j) {
    try {
        const std::string name = j.at("command").get<std::string>();
        if (name == "set_pressure") {
            const double p = j.at("pressure_pa").get<double>();
            if (!(p >= 0.0) || !std::isfinite(p)) throw InvalidInput("set_pressure: pressure_pa must be >= 0");
            return SetPressure{p};
        }
        if (name == "clutch_event") {
            return ClutchCommand{parse_clutch_id(j.at("clutch").get<std::string>()),
                                 parse_transition(j.at("transition").get<std::string>())};
        }
        if (name == "trigger_transient") {
            const double d = j.value("duration_s", 0.2);
            if (!(d >= 0.0) || !(d <= 10.0)) throw InvalidInput("trigger_transient: duration_s must lie in [0, 10]");
            return TriggerTransient{d};
        }
        if (name == "reset") return ResetCommand{};
        throw InvalidInput("unknown command '" + name + "'");
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("command: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// State deltas
// ---------------------------------------------------------------------------

// Surface for streaming. Meshes above the vertex budget are sent as a
// strided point subset without faces.
inline nlohmann::json surface_to_json(const DeformedState& s, std::size_t max_vertices = kMaxStreamVertices,
                                      bool include_faces = true) {
    const auto& mesh = s.model->mesh();
    const std::size_t n = mesh.vertices.size();
    const std::size_t stride = (n + max_vertices - 1) / max_vertices;
    nlohmann::json verts = nlohmann::json::array();
    for (std::size_t v = 0; v < n; v += stride) {
        const Vec3 p = mesh.vertices[v] + s.displacement[v];
        verts.push_back({p.x(), p.y(), p.z()});
    }
    nlohmann::json out{{"vertex_count", verts.size()}, {"decimated", stride > 1}, {"vertices", std::move(verts)}};
    if (include_faces && stride == 1) {
        nlohmann::json faces = nlohmann::json::array();
        for (const auto& t : mesh.triangles) faces.push_back({t[0], t[1], t[2]});
        out["faces"] = std::move(faces);
    }
    return out;
}

inline nlohmann::json state_delta(const std::string& session, std::uint64_t seq, const char* type,
                                  const DeformedState& s, bool include_faces) {
    const Apex a = apex(s);
    return {{"type", type},
            {"schema_version", kProtocolVersion},
            {"session", session},
            {"seq", seq},
            {"time_s", s.time},
            {"pressure_pa", s.pressure},
            {"apex_mm", a.height * 1e3},
            {"apex_point_m", {a.point.x(), a.point.y(), a.point.z()}},
            {"pattern", pattern_to_json(s.pattern)},
            {"surface", surface_to_json(s, kMaxStreamVertices, include_faces)}};
}

// ---------------------------------------------------------------------------
// Session
// ---------------------------------------------------------------------------

class SessionBusy : public std::runtime_error {
public:
    SessionBusy() : std::runtime_error("a command is already running on this session; retry after it completes") {}
    static constexpr int kRetryAfterMs = 250;
};

struct LogEntry {
    std::uint64_t seq = 0;
    double time = 0.0;  // session clock when the command was accepted
    Command command;
};

struct StepResult {
    std::uint64_t seq = 0;
    DeformedState state;
    std::vector<TransientFrame> frames;  // only for trigger_transient
};

class Session {
public:
    using Subscriber = std::function<void(const nlohmann::json&)>;

    Session(std::string id, MembraneDesign design, SolverConfig config)
        : id_(std::move(id)), config_(config), model_(make_model(design, config)) {
        state_ = DeformedState::rest(model_);
        pattern_ = state_.pattern;
    }

    const std::string& id() const { return id_; }
    const SolverConfig& config() const { return config_; }
    const MembraneDesign& design() const { return model_->design(); }
    const ModelPtr& model() const { return model_; }

    // Snapshot accessors; safe while a command runs.
    DeformedState state() const {
        std::lock_guard lock(data_);
        return state_;
    }
    ClutchPattern pattern() const {
        std::lock_guard lock(data_);
        return pattern_;
    }
    std::vector<LogEntry> log() const {
        std::lock_guard lock(data_);
        return log_;
    }
    bool busy() const { return busy_.load(); }

    int subscribe(Subscriber s) {
        std::lock_guard lock(subs_mutex_);
        subscribers_.emplace_back(++next_subscriber_, std::move(s));
        return next_subscriber_;
    }
    void unsubscribe(int token) {
        std::lock_guard lock(subs_mutex_);
        std::erase_if(subscribers_, [&](const auto& p) { return p.first == token; });
    }

    nlohmann::json summary() const {
        std::lock_guard lock(data_);
        nlohmann::json log = nlohmann::json::array();
        for (const auto& e : log_) {
            auto j = command_to_json(e.command);
            j["seq"] = e.seq;
            j["time_s"] = e.time;
            log.push_back(std::move(j));
        }
        const Apex a = apex(state_);
        return {{"id", id_},
                {"schema_version", kProtocolVersion},
                {"pressure_pa", state_.pressure},
                {"time_s", state_.time},
                {"apex_mm", a.height * 1e3},
                {"pattern", pattern_to_json(pattern_)},
                {"pending_events", pending_.size()},
                {"busy", busy_.load()},
                {"design", design_to_json(model_->design())},
                {"config", config_to_json(config_)},
                {"log", std::move(log)}};
    }

    // Applies one command. Throws SessionBusy if another command is running,
    // InvalidInput/IllegalTransition for rejected commands (nothing is
    // logged), and SolverFailure if the solver gives up (the command stays
    // logged so a replay fails the same way).
    StepResult step(const Command& command) {
        bool expected = false;
        if (!busy_.compare_exchange_strong(expected, true)) throw SessionBusy();
        struct Release {
            std::atomic<bool>& b;
            ~Release() { b.store(false); }
        } release{busy_};

        DeformedState state;
        ClutchPattern pattern;
        std::vector<ClutchEvent> pending;
        {
            std::lock_guard lock(data_);
            state = state_;
            pattern = pattern_;
            pending = pending_;
        }
        StepResult result;
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, ClutchCommand>) {
                    const ClutchEvent e{state.time, c.clutch, c.transition};
                    pattern = apply_event(pattern, e);  // validates before logging
                    pending.push_back(e);
                } else if constexpr (std::is_same_v<T, ResetCommand>) {
                    state = DeformedState::rest(model_);
                    pattern = state.pattern;
                    pending.clear();
                }
            },
            command);

        const std::uint64_t seq = append_log(command, state.time);
        result.seq = seq;

        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, SetPressure>) {
                    state.pattern = pattern;
                    pending.clear();
                    const double t = state.time;
                    state = solve_equilibrium(std::move(state), c.pressure, config_);
                    state.time = t;
                } else if constexpr (std::is_same_v<T, TriggerTransient>) {
                    std::optional<ClutchEvent> last;
                    if (!pending.empty()) {
                        for (std::size_t i = 0; i + 1 < pending.size(); ++i) {
                            state.pattern = apply_event(state.pattern, pending[i]);
                        }
                        last = pending.back();
                    }
                    pending.clear();
                    result.frames = dynamic_transient(state, last, c.duration, config_,
                                                      [&](const TransientFrame& f) {
                                                          publish(state_delta(id_, seq, "frame", f.state, false));
                                                          return true;
                                                      });
                    state = result.frames.back().state;
                    pattern = state.pattern;
                }
            },
            command);

        {
            std::lock_guard lock(data_);
            state_ = state;
            pattern_ = pattern;
            pending_ = pending;
        }
        result.state = std::move(state);
        publish(state_delta(id_, seq, "delta", result.state, true));
        return result;
    }

    // Runs the logged commands of `source` on this session, in order.
    void replay(const std::vector<LogEntry>& source) {
        for (const auto& e : source) step(e.command);
    }

private:
    std::uint64_t append_log(const Command& c, double t) {
        std::lock_guard lock(data_);
        const std::uint64_t seq = log_.size() + 1;
        log_.push_back({seq, t, c});
        return seq;
    }

    void publish(const nlohmann::json& msg) {
        std::vector<Subscriber> subs;
        {
            std::lock_guard lock(subs_mutex_);
            for (const auto& [_, s] : subscribers_) subs.push_back(s);
        }
        for (const auto& s : subs) s(msg);
    }

    std::string id_;
    SolverConfig config_;
    ModelPtr model_;
    mutable std::mutex data_;
    DeformedState state_;
    ClutchPattern pattern_;               // includes clutch events not yet solved
    std::vector<ClutchEvent> pending_;    // events applied since the last solve
    std::vector<LogEntry> log_;
    std::atomic<bool> busy_{false};
    std::mutex subs_mutex_;
    std::vector<std::pair<int, Subscriber>> subscribers_;
    int next_subscriber_ = 0;
};

inline bool bit_identical(const DeformedState& a, const DeformedState& b) {
    if (a.displacement.size() != b.displacement.size() || a.velocity.size() != b.velocity.size()) return false;
    const auto same = [](const std::vector<Vec3>& x, const std::vector<Vec3>& y) {
        return x.empty() || std::memcmp(x.data(), y.data(), x.size() * sizeof(Vec3)) == 0;
    };
    return same(a.displacement, b.displacement) && same(a.velocity, b.velocity) &&
           std::memcmp(&a.pressure, &b.pressure, sizeof(double)) == 0 &&
           std::memcmp(&a.time, &b.time, sizeof(double)) == 0 && a.pattern == b.pattern;
}

// ---------------------------------------------------------------------------
// Hashing and error reporting
// ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw std::runtime_error("sha256 failed");
    }
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

inline std::string sha256_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw InvalidInput("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return sha256_hex(ss.str());
}

enum ExitCode : int { kExitOk = 0, kExitRuntime = 1, kExitInvalid = 2 };

inline nlohmann::json error_json(int code, const std::string& message) {
    return {{"error", {{"code", code == kExitInvalid ? "invalid_input" : "runtime"}, {"exit_code", code},
                       {"message", message}}}};
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class ScenarioKind { Shape, Workspace, Launch, Mode2, CompareClouds };

inline std::string_view to_string(ScenarioKind k) {
    switch (k) {
        case ScenarioKind::Shape: return "shape";
        case ScenarioKind::Workspace: return "workspace";
        case ScenarioKind::Launch: return "launch";
        case ScenarioKind::Mode2: return "mode2";
        case ScenarioKind::CompareClouds: return "compare-clouds";
    }
    return "?";
}

inline ScenarioKind parse_scenario_kind(std::string_view s) {
    for (ScenarioKind k : {ScenarioKind::Shape, ScenarioKind::Workspace, ScenarioKind::Launch, ScenarioKind::Mode2,
                           ScenarioKind::CompareClouds}) {
        if (s == to_string(k)) return k;
    }
    if (s == "compare") return ScenarioKind::CompareClouds;
    throw InvalidInput("unknown scenario kind '" + std::string(s) + "'");
}

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::Shape;
    std::optional<std::filesystem::path> design_file;
    std::optional<std::filesystem::path> config_file;
    std::vector<std::filesystem::path> inputs;  // point clouds for compare-clouds
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    nlohmann::json params = nlohmann::json::object();

    void validate() const {
        const auto need = [](const std::filesystem::path& p, const char* what) {
            if (!std::filesystem::is_regular_file(p)) {
                throw InvalidInput(std::string(what) + " not found: " + p.string());
            }
        };
        if (design_file) need(*design_file, "design file");
        if (config_file) need(*config_file, "config file");
        for (const auto& p : inputs) need(p, "input file");
        if (kind == ScenarioKind::CompareClouds && inputs.size() != 2) {
            throw InvalidInput("compare-clouds needs exactly two input clouds");
        }
        if (!params.is_object()) throw InvalidInput("scenario params must be a JSON object");
        if (output_dir.empty()) throw InvalidInput("output directory must be set");
    }
};

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw InvalidInput("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(p.string() + ": " + e.what());
    }
}

inline ClutchPattern pattern_from_param(const nlohmann::json& v) {
    if (v.is_string()) return named_pattern(v.get<std::string>());
    if (v.is_array()) {
        ClutchPattern p;
        for (const auto& id : v) p.states[index_of(parse_clutch_id(id.get<std::string>()))] = ClutchState::Active;
        return p;
    }
    throw InvalidInput("pattern must be a name or a list of clutch ids");
}

struct ScenarioResult {
    std::vector<std::filesystem::path> files;  // relative to the output directory
    nlohmann::json summary;
};

namespace detail {

class ArtifactWriter {
public:
    explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
        std::filesystem::create_directories(dir_);
    }

    std::ofstream open(const std::string& name) {
        files_.push_back(name);
        std::ofstream os(dir_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
        return os;
    }

    void json(const std::string& name, const nlohmann::json& j) { open(name) << j.dump(2) << '\n'; }

    void text(const std::string& name, const std::string& s) { open(name) << s; }

    const std::vector<std::filesystem::path>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<std::filesystem::path> files_;
};

}  // namespace detail

// Runs one batch scenario and writes its artifacts plus manifest.json (file
// list with SHA-256 hashes). Artifacts carry no timestamps, so repeated runs
// with the same inputs and seed hash identically.
inline ScenarioResult run_scenario(const ScenarioSpec& spec) {
    spec.validate();
    const MembraneDesign design =
        spec.design_file ? design_from_json(read_json_file(*spec.design_file)) : build_default_design();
    const SolverConfig config = spec.config_file ? config_from_json(read_json_file(*spec.config_file)) : SolverConfig{};
    const auto& P = spec.params;
    detail::ArtifactWriter out(spec.output_dir);
    ScenarioResult result;
    std::mt19937_64 rng(spec.seed);

    const auto param = [&](const char* key, auto fallback) {
        try {
            return P.value(key, fallback);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(std::string("parameter ") + key + ": " + e.what());
        }
    };

    switch (spec.kind) {
        case ScenarioKind::Shape: {
            const ClutchPattern pattern = pattern_from_param(P.value("pattern", nlohmann::json("pyramid")));
            const double pressure = param("pressure_pa", kMode2Pressure);
            const DeformedState s = solve_equilibrium(design, pattern, pressure, config);
            {
                auto os = out.open("state.ply");
                write_ply(os, s.model->mesh(), s.displacement);
            }
            result.summary = state_sidecar(s);
            result.summary["triangles"] = s.model->mesh().triangle_count();
            out.json("state.json", result.summary);
            break;
        }
        case ScenarioKind::Workspace: {
            const double pressure = param("pressure_pa", kWorkspacePressure);
            std::set<DoFDirection> dirs;
            if (P.contains("directions")) {
                for (const auto& d : P["directions"]) dirs.insert(parse_dof_direction(d.get<std::string>()));
            } else {
                dirs.insert(kAllDirections.begin(), kAllDirections.end());
            }
            const auto w = mode1_workspace(design, pressure, dirs, config);
            result.summary = {{"pressure_pa", pressure}, {"directions", workspace_to_json(w)}};
            out.json("workspace.json", result.summary);
            std::ostringstream csv;
            csv << "direction,dx_mm,dy_mm,dz_mm,lateral_mm,flagged\n" << std::setprecision(10);
            for (const auto& [d, e] : w) {
                csv << to_string(d) << ',' << e.displacement.x() * 1e3 << ',' << e.displacement.y() * 1e3 << ','
                    << e.displacement.z() * 1e3 << ',' << e.lateral * 1e3 << ',' << (e.flagged ? 1 : 0) << '\n';
            }
            out.text("workspace.csv", csv.str());
            break;
        }
        case ScenarioKind::Launch: {
            std::vector<DoFDirection> dirs;
            if (P.contains("directions")) {
                for (const auto& d : P["directions"]) dirs.push_back(parse_dof_direction(d.get<std::string>()));
            } else {
                dirs.push_back(parse_dof_direction(param("direction", std::string("Up"))));
            }
            const int trials = param("trials", 1);
            if (trials < 1 || trials > 50) throw InvalidInput("trials must lie in [1, 50]");
            const double window = param("window", 5.0);
            Payload payload;
            payload.mass = param("payload_mass_kg", payload.mass);
            payload.diameter = param("payload_diameter_m", payload.diameter);
            // Trial-to-trial spread: the pressure reached varies by a few
            // percent around the setpoint, drawn from the seed.
            std::normal_distribution<double> spread(0.0, param("pressure_spread", 0.02));
            std::vector<ForceTrial> forces;
            nlohmann::json launches = nlohmann::json::array();
            for (DoFDirection d : dirs) {
                const double base = P.contains("pressure_pa") ? P["pressure_pa"].get<double>()
                                                              : default_launch_pressure(d);
                for (int i = 0; i < trials; ++i) {
                    const double p = i == 0 ? base : base * (1.0 + spread(rng));
                    const auto r = mode1_launch(design, d, p, payload, config);
                    std::string name = "trajectory_";
                    for (char c : to_string(d)) name.push_back(c == '-' ? '_' : c);
                    name += "_" + std::to_string(i + 1) + ".csv";
                    {
                        auto os = out.open(name);
                        write_trajectory_csv(os, r.record);
                    }
                    const auto f = extract_force(r.record, static_cast<std::size_t>(window));
                    forces.push_back({d, f.magnitude, f.direction});
                    launches.push_back({{"direction", to_string(d)},
                                        {"trial", i + 1},
                                        {"pressure_pa", p},
                                        {"released", r.released},
                                        {"release_time_s", r.release_time},
                                        {"release_velocity_m_s",
                                         {r.release_velocity.x(), r.release_velocity.y(), r.release_velocity.z()}},
                                        {"trajectory", name}});
                }
            }
            bool all_nonzero = std::all_of(forces.begin(), forces.end(), [](const auto& f) { return f.magnitude > 0.0; });
            result.summary = {{"launches", launches}};
            if (all_nonzero) {
                const auto report = build_force_report(forces);
                result.summary["force_report"] = force_report_to_json(report);
                out.text("force_table.txt", render_force_table(report));
            }
            out.json("launch.json", result.summary);
            break;
        }
        case ScenarioKind::Mode2: {
            const ClutchPattern pattern =
                pattern_from_param(P.value("pattern", nlohmann::json::array({"OutboardE"})));
            Plate plate;
            plate.mass = param("plate_mass_kg", plate.mass);
            plate.half_extent = param("plate_half_extent_m", plate.half_extent);
            const double pressure = param("pressure_pa", kMode2Pressure);
            const auto profile =
                PressureProfile::ramp(pressure, param("ramp_duration_s", 10.0), param("ramp_samples", 20));
            const auto tilt = mode2_tilt(design, pattern, profile, plate, config);
            Mode2ReleaseOptions ro;
            ro.damping_ratio = param("damping_ratio", ro.damping_ratio);
            const bool do_release = param("release", true);
            std::optional<Mode2ReleaseResult> rel;
            if (do_release) rel = mode2_release(tilt, ro, config);
            result.summary = mode2_to_json(tilt, rel ? &*rel : nullptr);
            out.json("mode2.json", result.summary);
            std::ostringstream csv;
            csv << "phase,time_s,roll_deg\n" << std::setprecision(10);
            for (std::size_t i = 0; i < tilt.time.size(); ++i) csv << "tilt," << tilt.time[i] << ',' << tilt.roll_deg[i] << '\n';
            if (rel) {
                const double t0 = tilt.time.back();
                for (std::size_t i = 0; i < rel->time.size(); ++i) {
                    csv << "release," << t0 + rel->time[i] << ',' << rel->roll_deg[i] << '\n';
                }
            }
            out.text("roll.csv", csv.str());
            {
                auto os = out.open("tilted.ply");
                write_ply(os, tilt.state->model->mesh(), tilt.state->displacement);
            }
            break;
        }
        case ScenarioKind::CompareClouds: {
            PointCloud a = read_point_cloud(spec.inputs[0].string());
            PointCloud b = read_point_cloud(spec.inputs[1].string());
            const int sor_k = param("sor_k", 0);
            if (sor_k > 0) a = statistical_outlier_removal(a, sor_k, param("sor_std_mult", 1.0));
            const int knn_k = param("knn_k", 0);
            if (knn_k > 0) a = knn_noise_filter(a, knn_k);
            IcpOptions opt;
            opt.max_iters = param("icp_max_iterations", opt.max_iters);
            opt.tol = param("icp_tolerance", opt.tol);
            const auto icp = icp_align(a, b, opt);
            const PointCloud aligned = icp.transform.apply(a);
            const double e = rmse(aligned, b);
            result.summary = {{"rmse_m", e},
                              {"rmse_mm", e * 1e3},
                              {"icp_iterations", icp.iterations},
                              {"source_points", a.points.size()},
                              {"target_points", b.points.size()}};
            out.json("compare.json", result.summary);
            {
                auto os = out.open("aligned.csv");
                os.precision(17);
                os << "x,y,z\n";
                for (const auto& q : aligned.points) os << q.x() << ',' << q.y() << ',' << q.z() << '\n';
            }
            break;
        }
    }

    nlohmann::json files = nlohmann::json::array();
    for (const auto& f : out.files()) {
        files.push_back({{"path", f.generic_string()},
                         {"sha256", sha256_file(out.dir() / f)},
                         {"bytes", std::filesystem::file_size(out.dir() / f)}});
    }
    const nlohmann::json manifest{{"schema_version", 1},
                                  {"kind", to_string(spec.kind)},
                                  {"seed", spec.seed},
                                  {"params", spec.params},
                                  {"design", design_to_json(design)},
                                  {"config", config_to_json(config)},
                                  {"files", files}};
    {
        std::ofstream os(out.dir() / "manifest.json", std::ios::binary);
        os << manifest.dump(2) << '\n';
    }
    result.files = out.files();
    return result;
}

}  // namespace clutchshape
