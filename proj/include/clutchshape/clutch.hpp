#pragma once

// Logical model of the five electroadhesive clutches.
//
//   Inactive --Activate--> Active --Slip--> Slipped
//      ^                     |                 |
//      +-----Deactivate------+                 |
//      +-----------------Reset-----------------+
//
// Each Deactivate flips the stored drive polarity of that clutch. A slipped
// clutch stays slipped until an explicit Reset (the plates are re-aligned
// by hand between inflations).

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "clutchshape/design.hpp"

namespace clutchshape {

enum class ClutchState { Inactive, Active, Slipped };
enum class Polarity { Positive, Negative };
enum class Transition { Activate, Deactivate, Slip, Reset };

inline std::string_view to_string(ClutchState s) {
    switch (s) {
        case ClutchState::Inactive: return "Inactive";
        case ClutchState::Active: return "Active";
        case ClutchState::Slipped: return "Slipped";
    }
    return "?";
}

inline std::string_view to_string(Polarity p) { return p == Polarity::Positive ? "+" : "-"; }

inline std::string_view to_string(Transition t) {
    switch (t) {
        case Transition::Activate: return "Activate";
        case Transition::Deactivate: return "Deactivate";
        case Transition::Slip: return "Slip";
        case Transition::Reset: return "Reset";
    }
    return "?";
}

inline Transition parse_transition(std::string_view s) {
    for (Transition t : {Transition::Activate, Transition::Deactivate, Transition::Slip, Transition::Reset}) {
        if (s == to_string(t)) return t;
    }
    throw InvalidInput("unknown transition '" + std::string(s) + "'");
}

inline ClutchState parse_clutch_state(std::string_view s) {
    for (ClutchState c : {ClutchState::Inactive, ClutchState::Active, ClutchState::Slipped}) {
        if (s == to_string(c)) return c;
    }
    throw InvalidInput("unknown clutch state '" + std::string(s) + "'");
}

struct ClutchPattern {
    std::array<ClutchState, 5> states{};  // indexed by index_of(ClutchId)
    std::array<Polarity, 5> polarity{};
    double voltage = 420.0;  // V, informational

    ClutchState state(ClutchId id) const { return states[index_of(id)]; }
    Polarity polarity_of(ClutchId id) const { return polarity[index_of(id)]; }
    bool active(ClutchId id) const { return state(id) == ClutchState::Active; }

    bool same_states(const ClutchPattern& o) const { return states == o.states; }
    bool operator==(const ClutchPattern&) const = default;

    // Named configurations used to form the three shape primitives.
    static ClutchPattern pyramid() { return {}; }

    static ClutchPattern round() {
        ClutchPattern p;
        p.states[index_of(ClutchId::Inboard)] = ClutchState::Active;
        return p;
    }

    static ClutchPattern plateau() {
        ClutchPattern p;
        for (ClutchId id : kOutboardClutches) p.states[index_of(id)] = ClutchState::Active;
        return p;
    }

    static ClutchPattern with_active(std::initializer_list<ClutchId> ids) {
        ClutchPattern p;
        for (ClutchId id : ids) p.states[index_of(id)] = ClutchState::Active;
        return p;
    }
};

inline ClutchPattern named_pattern(std::string_view name) {
    if (name == "pyramid" || name == "Pyramid") return ClutchPattern::pyramid();
    if (name == "round" || name == "Round") return ClutchPattern::round();
    if (name == "plateau" || name == "Plateau") return ClutchPattern::plateau();
    throw InvalidInput("unknown pattern name '" + std::string(name) + "'");
}

struct ClutchEvent {
    double time = 0.0;  // s
    ClutchId clutch = ClutchId::Inboard;
    Transition transition = Transition::Activate;

    bool operator==(const ClutchEvent&) const = default;
};

// Pure transition function. Throws IllegalTransition for moves the state
// machine does not allow.
inline ClutchPattern apply_event(ClutchPattern pattern, const ClutchEvent& event) {
    const std::size_t i = index_of(event.clutch);
    const ClutchState from = pattern.states[i];
    const auto illegal = [&] {
        return IllegalTransition(std::string(to_string(event.transition)) + " is not allowed on " +
                                 std::string(to_string(event.clutch)) + " while " + std::string(to_string(from)));
    };
    switch (event.transition) {
        case Transition::Activate:
            if (from != ClutchState::Inactive) throw illegal();
            pattern.states[i] = ClutchState::Active;
            break;
        case Transition::Deactivate:
            if (from != ClutchState::Active) throw illegal();
            pattern.states[i] = ClutchState::Inactive;
            pattern.polarity[i] = pattern.polarity[i] == Polarity::Positive ? Polarity::Negative : Polarity::Positive;
            break;
        case Transition::Slip:
            if (from != ClutchState::Active) throw illegal();
            pattern.states[i] = ClutchState::Slipped;
            break;
        case Transition::Reset:
            if (from != ClutchState::Slipped) throw illegal();
            pattern.states[i] = ClutchState::Inactive;
            break;
    }
    return pattern;
}

// Generic electroadhesive shear capacity, 8 N/cm^2.
inline constexpr double kDefaultSlipThreshold = 8e4;  // Pa

using ShearMap = std::map<ClutchId, double>;

// Active clutches whose interfacial shear strictly exceeds the threshold
// become Slipped. Clutches missing from the map carry no load.
inline ClutchPattern check_slip(ClutchPattern pattern, const ShearMap& interfacial_shear,
                                double threshold = kDefaultSlipThreshold) {
    for (const auto& [id, shear] : interfacial_shear) {
        if (shear < 0.0) throw InvalidInput("check_slip: negative shear");
        if (pattern.active(id) && shear > threshold) pattern.states[index_of(id)] = ClutchState::Slipped;
    }
    return pattern;
}

// ---------------------------------------------------------------------------
// Event schedule CSV: time_s,clutch_id,transition
// ---------------------------------------------------------------------------

inline std::vector<ClutchEvent> read_event_schedule(std::istream& is) {
    std::vector<ClutchEvent> events;
    std::string line;
    bool header = true;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            header = false;
            if (line.rfind("time_s", 0) == 0) continue;
        }
        std::stringstream ss(line);
        std::string t, id, tr;
        if (!std::getline(ss, t, ',') || !std::getline(ss, id, ',') || !std::getline(ss, tr)) {
            throw InvalidInput("event schedule line " + std::to_string(line_no) + ": expected 3 columns");
        }
        ClutchEvent e;
        try {
            e.time = std::stod(t);
        } catch (const std::exception&) {
            throw InvalidInput("event schedule line " + std::to_string(line_no) + ": bad time");
        }
        e.clutch = parse_clutch_id(id);
        e.transition = parse_transition(tr);
        if (!events.empty() && e.time < events.back().time) {
            throw InvalidInput("event schedule line " + std::to_string(line_no) + ": events out of time order");
        }
        events.push_back(e);
    }
    return events;
}

inline std::vector<ClutchEvent> read_event_schedule(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw InvalidInput("cannot open event schedule '" + path + "'");
    return read_event_schedule(is);
}

inline void write_event_schedule(std::ostream& os, const std::vector<ClutchEvent>& events) {
    os << "time_s,clutch_id,transition\n";
    os.precision(17);
    for (const auto& e : events) {
        os << e.time << ',' << to_string(e.clutch) << ',' << to_string(e.transition) << '\n';
    }
}

inline nlohmann::json pattern_to_json(const ClutchPattern& p) {
    nlohmann::json j;
    j["voltage"] = p.voltage;
    for (ClutchId id : kAllClutches) {
        j["states"][std::string(to_string(id))] = to_string(p.state(id));
        j["polarity"][std::string(to_string(id))] = to_string(p.polarity_of(id));
    }
    return j;
}

}  // namespace clutchshape
