#pragma once

// Payload trajectories and the analytics applied to them: force extraction
// from tracked positions and directional consistency across trials.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "clutchshape/errors.hpp"

namespace clutchshape {

inline constexpr double kGravity = 9.81;  // m/s^2

struct TrajectorySample {
    double t = 0.0;                                 // s
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
    std::optional<Eigen::Quaterniond> orientation;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    double payload_mass = 0.0037;  // kg
    double sample_rate = 100.0;    // Hz

    void validate() const {
        for (std::size_t i = 1; i < samples.size(); ++i) {
            if (!(samples[i].t > samples[i - 1].t)) {
                throw InvalidInput("trajectory: timestamps must be strictly increasing");
            }
        }
    }
};

// ---------------------------------------------------------------------------
// Force extraction
// ---------------------------------------------------------------------------

struct ExtractedForce {
    double magnitude = 0.0;                            // N
    Eigen::Vector3d direction = Eigen::Vector3d::Zero(); // unit, zero when magnitude is zero
    std::size_t sample = 0;                            // index of the reported instant
    double time = 0.0;
};

// Central-difference acceleration of each interior sample.
inline std::vector<Eigen::Vector3d> central_acceleration(const TrajectoryRecord& r, double dt) {
    std::vector<Eigen::Vector3d> a;
    a.reserve(r.samples.size() - 2);
    for (std::size_t i = 1; i + 1 < r.samples.size(); ++i) {
        a.push_back((r.samples[i + 1].position - 2.0 * r.samples[i].position + r.samples[i - 1].position) /
                    (dt * dt));
    }
    return a;
}

// Centred moving average; the window shrinks at the ends.
inline std::vector<Eigen::Vector3d> moving_average(const std::vector<Eigen::Vector3d>& v, std::size_t window) {
    if (window <= 1 || v.empty()) return v;
    const long n = static_cast<long>(v.size());
    const long before = static_cast<long>(window - 1) / 2;
    const long after = static_cast<long>(window) - 1 - before;
    std::vector<Eigen::Vector3d> out(v.size());
    for (long i = 0; i < n; ++i) {
        const long lo = std::max(0L, i - before);
        const long hi = std::min(n - 1, i + after);
        Eigen::Vector3d s = Eigen::Vector3d::Zero();
        for (long k = lo; k <= hi; ++k) s += v[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(i)] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

// Force applied to the payload: mass times the gravity-corrected
// acceleration at the instant where that acceleration is largest.
inline ExtractedForce extract_force(const TrajectoryRecord& record, std::size_t window = 5) {
    if (record.samples.size() < 3) throw InvalidInput("extract_force: need at least 3 samples");
    record.validate();
    const std::size_t n = record.samples.size();
    const double dt = (record.samples.back().t - record.samples.front().t) / static_cast<double>(n - 1);
    for (std::size_t i = 1; i < n; ++i) {
        const double step = record.samples[i].t - record.samples[i - 1].t;
        if (std::abs(step - dt) > 0.01 * dt) {
            throw InvalidInput("extract_force: sampling is not uniform (jitter above 1%)");
        }
    }
    auto acc = moving_average(central_acceleration(record, dt), window);
    ExtractedForce best;
    double best_norm = -1.0;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        acc[i].z() += kGravity;
        const double norm = acc[i].norm();
        if (norm > best_norm) {
            best_norm = norm;
            best.sample = i + 1;
            best.direction = norm > 0.0 ? Eigen::Vector3d(acc[i] / norm) : Eigen::Vector3d::Zero();
        }
    }
    best.magnitude = record.payload_mass * best_norm;
    best.time = record.samples[best.sample].t;
    return best;
}

// ---------------------------------------------------------------------------
// Directional consistency
// ---------------------------------------------------------------------------

struct ConsistencyResult {
    Eigen::Vector3d mean_direction = Eigen::Vector3d::Zero();
    std::vector<double> per_trial;  // percent, in [-100, 100]
    double mean = 0.0;              // percent
};

// Each trial's direction is compared with the normalised sum of all trial
// directions; a dot product of 1 reads as 100 %.
inline ConsistencyResult directional_consistency(const std::vector<Eigen::Vector3d>& directions) {
    if (directions.empty()) throw InvalidInput("directional_consistency: no trials");
    std::vector<Eigen::Vector3d> unit;
    unit.reserve(directions.size());
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (const auto& d : directions) {
        const double n = d.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("directional_consistency: zero or non-finite vector");
        unit.push_back(d / n);
        sum += unit.back();
    }
    const double s = sum.norm();
    if (!(s > 1e-12 * static_cast<double>(directions.size()))) {
        throw InvalidInput("directional_consistency: trial directions cancel; mean direction undefined");
    }
    ConsistencyResult r;
    r.mean_direction = sum / s;
    constexpr double kUlpSnap = 8.0 * std::numeric_limits<double>::epsilon();
    for (const auto& u : unit) {
        double c = r.mean_direction.dot(u);
        if (c > 1.0 - kUlpSnap) c = 1.0;  // renormalisation rounding on parallel vectors
        r.per_trial.push_back(100.0 * std::max(c, -1.0));
    }
    double acc = 0.0;
    for (double c : r.per_trial) acc += c;
    r.mean = acc / static_cast<double>(r.per_trial.size());
    return r;
}

// ---------------------------------------------------------------------------
// CSV I/O: t_s,x_m,y_m,z_m[,qw,qx,qy,qz]
// ---------------------------------------------------------------------------

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        const auto b = cell.find_first_not_of(" \t\"");
        const auto e = cell.find_last_not_of(" \t\"\r");
        cells.push_back(b == std::string::npos ? std::string() : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& r) {
    const bool with_q = !r.samples.empty() &&
                        std::all_of(r.samples.begin(), r.samples.end(), [](const auto& s) { return s.orientation; });
    os << "t_s,x_m,y_m,z_m" << (with_q ? ",qw,qx,qy,qz" : "") << '\n';
    os.precision(17);
    for (const auto& s : r.samples) {
        os << s.t << ',' << s.position.x() << ',' << s.position.y() << ',' << s.position.z();
        if (with_q) {
            const auto& q = *s.orientation;
            os << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z();
        }
        os << '\n';
    }
}

inline TrajectoryRecord read_trajectory_csv(std::istream& is, double payload_mass = 0.0037) {
    TrajectoryRecord r;
    r.payload_mass = payload_mass;
    std::string line;
    if (!std::getline(is, line)) throw InvalidInput("trajectory CSV: empty input");
    const auto header = split_csv_row(line);
    if (header.size() < 4 || header[0] != "t_s" || header[1] != "x_m" || header[2] != "y_m" || header[3] != "z_m") {
        throw InvalidInput("trajectory CSV: header must start with t_s,x_m,y_m,z_m");
    }
    const bool with_q = header.size() >= 8;
    int row = 1;
    while (std::getline(is, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = split_csv_row(line);
        if (cells.size() < header.size()) {
            throw InvalidInput("trajectory CSV row " + std::to_string(row) + ": too few columns");
        }
        try {
            TrajectorySample s;
            s.t = std::stod(cells[0]);
            s.position = {std::stod(cells[1]), std::stod(cells[2]), std::stod(cells[3])};
            if (with_q) {
                s.orientation = Eigen::Quaterniond(std::stod(cells[4]), std::stod(cells[5]), std::stod(cells[6]),
                                                   std::stod(cells[7]))
                                    .normalized();
            }
            r.samples.push_back(s);
        } catch (const std::logic_error&) {
            throw InvalidInput("trajectory CSV row " + std::to_string(row) + ": not a number");
        }
    }
    r.validate();
    if (r.samples.size() >= 2) {
        r.sample_rate = static_cast<double>(r.samples.size() - 1) / (r.samples.back().t - r.samples.front().t);
    }
    return r;
}

// Column mapping for motion-capture exports (Vicon Nexus style: a frame
// column, translations in millimetres, optional quaternion columns).
struct ViconColumnMapping {
    std::string frame = "Frame";
    std::string x = "TX";
    std::string y = "TY";
    std::string z = "TZ";
    std::string qw, qx, qy, qz;  // empty: no orientation
    double position_scale = 1e-3;  // mm -> m
    double frame_rate = 100.0;     // Hz
};

// Finds the header row holding the mapped column names, skips unit rows and
// blank cells (dropped markers), and rebases time to the first frame.
inline TrajectoryRecord convert_vicon_csv(std::istream& is, const ViconColumnMapping& map,
                                          double payload_mass = 0.0037) {
    std::string line;
    std::map<std::string, std::size_t> col;
    while (std::getline(is, line)) {
        const auto cells = split_csv_row(line);
        std::map<std::string, std::size_t> found;
        for (std::size_t i = 0; i < cells.size(); ++i) found.emplace(cells[i], i);
        if (found.count(map.frame) && found.count(map.x) && found.count(map.y) && found.count(map.z)) {
            col = std::move(found);
            break;
        }
    }
    if (col.empty()) throw InvalidInput("Vicon CSV: mapped columns not found");
    const bool with_q = !map.qw.empty();
    if (with_q && !(col.count(map.qw) && col.count(map.qx) && col.count(map.qy) && col.count(map.qz))) {
        throw InvalidInput("Vicon CSV: quaternion columns not found");
    }
    TrajectoryRecord r;
    r.payload_mass = payload_mass;
    r.sample_rate = map.frame_rate;
    std::optional<double> first_frame;
    while (std::getline(is, line)) {
        const auto cells = split_csv_row(line);
        const auto get = [&](const std::string& name) -> std::optional<double> {
            const std::size_t i = col.at(name);
            if (i >= cells.size() || cells[i].empty()) return std::nullopt;
            try {
                return std::stod(cells[i]);
            } catch (const std::logic_error&) {
                return std::nullopt;
            }
        };
        const auto frame = get(map.frame);
        const auto x = get(map.x), y = get(map.y), z = get(map.z);
        if (!frame || !x || !y || !z) continue;  // unit row or dropped marker
        if (!first_frame) first_frame = *frame;
        TrajectorySample s;
        s.t = (*frame - *first_frame) / map.frame_rate;
        s.position = Eigen::Vector3d(*x, *y, *z) * map.position_scale;
        if (with_q) {
            const auto w = get(map.qw), qx = get(map.qx), qy = get(map.qy), qz = get(map.qz);
            if (w && qx && qy && qz) s.orientation = Eigen::Quaterniond(*w, *qx, *qy, *qz).normalized();
        }
        r.samples.push_back(s);
    }
    r.validate();
    return r;
}

}  // namespace clutchshape
