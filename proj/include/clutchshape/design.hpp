#pragma once

// Membrane geometry, materials and clutch layout.
//
// The actuator is a clamped disk of silicone. Concentric annuli alternate
// between unstiffened silicone ("soft") and fabric-stabilized silicone
// ("stabilized"). Electroadhesive clutches bridge soft annuli; when active
// they bond the two stabilized annuli on either side and stop the soft
// annulus between them from stretching.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <nlohmann/json.hpp>

#include "clutchshape/errors.hpp"

namespace clutchshape {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = std::numbers::pi;

enum class Material { Soft, Stabilized };

enum class ClutchId { Inboard, OutboardN, OutboardE, OutboardS, OutboardW };

inline constexpr std::array<ClutchId, 5> kAllClutches = {
    ClutchId::Inboard, ClutchId::OutboardN, ClutchId::OutboardE, ClutchId::OutboardS,
    ClutchId::OutboardW};

inline constexpr std::array<ClutchId, 4> kOutboardClutches = {
    ClutchId::OutboardN, ClutchId::OutboardE, ClutchId::OutboardS, ClutchId::OutboardW};

inline std::string_view to_string(Material m) {
    return m == Material::Soft ? "soft" : "stabilized";
}

inline std::string_view to_string(ClutchId id) {
    switch (id) {
        case ClutchId::Inboard: return "Inboard";
        case ClutchId::OutboardN: return "OutboardN";
        case ClutchId::OutboardE: return "OutboardE";
        case ClutchId::OutboardS: return "OutboardS";
        case ClutchId::OutboardW: return "OutboardW";
    }
    return "?";
}

inline Material parse_material(std::string_view s) {
    if (s == "soft") return Material::Soft;
    if (s == "stabilized") return Material::Stabilized;
    throw InvalidInput("unknown material tag '" + std::string(s) + "'");
}

inline ClutchId parse_clutch_id(std::string_view s) {
    for (ClutchId id : kAllClutches) {
        if (s == to_string(id)) return id;
    }
    // Short aliases used in event schedules.
    if (s == "inboard") return ClutchId::Inboard;
    if (s == "N") return ClutchId::OutboardN;
    if (s == "E") return ClutchId::OutboardE;
    if (s == "S") return ClutchId::OutboardS;
    if (s == "W") return ClutchId::OutboardW;
    throw InvalidInput("unknown clutch id '" + std::string(s) + "'");
}

inline std::size_t index_of(ClutchId id) { return static_cast<std::size_t>(id); }

// Quarter-turn (counter-clockwise, about +z) image of an outboard clutch.
inline ClutchId rotate_quarter(ClutchId id) {
    switch (id) {
        case ClutchId::OutboardE: return ClutchId::OutboardN;
        case ClutchId::OutboardN: return ClutchId::OutboardW;
        case ClutchId::OutboardW: return ClutchId::OutboardS;
        case ClutchId::OutboardS: return ClutchId::OutboardE;
        case ClutchId::Inboard: return ClutchId::Inboard;
    }
    return id;
}

// ---------------------------------------------------------------------------
// Materials
// ---------------------------------------------------------------------------

// One Ogden term. Strain energy per unit volume contributed by the term is
// (mu / alpha) * (l1^alpha + l2^alpha + l3^alpha - 3).
struct OgdenTerm {
    double mu = 0.0;     // Pa
    double alpha = 1.0;  // dimensionless
};

struct MaterialModel {
    enum class Kind { Ogden3, LinearElastic };

    Kind kind = Kind::LinearElastic;
    std::array<OgdenTerm, 3> ogden{};
    double youngs_modulus = 0.0;  // Pa, LinearElastic only
    double poisson_ratio = 0.0;
    double density = 1070.0;  // kg/m^3

    // Small-strain shear modulus. For Ogden this is sum(mu_i * alpha_i) / 2.
    double shear_modulus() const {
        if (kind == Kind::Ogden3) {
            double s = 0.0;
            for (const auto& t : ogden) s += t.mu * t.alpha;
            return 0.5 * s;
        }
        return youngs_modulus / (2.0 * (1.0 + poisson_ratio));
    }

    void validate(std::string_view what) const {
        const std::string name(what);
        if (!(density > 0.0)) throw InvalidInput(name + ": density must be positive");
        if (kind == Kind::Ogden3) {
            for (const auto& t : ogden) {
                if (t.alpha == 0.0 || !std::isfinite(t.alpha) || !std::isfinite(t.mu)) {
                    throw InvalidInput(name + ": Ogden alpha must be finite and non-zero");
                }
            }
            if (!(shear_modulus() > 0.0)) {
                throw InvalidInput(name + ": Ogden ground-state shear modulus must be positive");
            }
        } else {
            if (!(youngs_modulus > 0.0)) throw InvalidInput(name + ": modulus must be positive");
            if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
                throw InvalidInput(name + ": Poisson ratio must lie in (-1, 0.5)");
            }
        }
    }
};

// Ecoflex 00-30, three-term Ogden fit. The published fit uses the
// 2 mu / alpha^2 normalisation; the values below are converted to the
// mu / alpha form used here (mu_here = 2 mu_pub / alpha).
inline MaterialModel ecoflex_0030() {
    MaterialModel m;
    m.kind = MaterialModel::Kind::Ogden3;
    const std::array<std::pair<double, double>, 3> published = {
        std::pair{24361.0, 1.7138}, std::pair{66.703, 7.0679}, std::pair{453.81, -3.3659}};
    for (std::size_t i = 0; i < 3; ++i) {
        m.ogden[i] = {2.0 * published[i].first / published[i].second, published[i].second};
    }
    m.density = 1070.0;
    return m;
}

// Fabric stabilizer cured into silicone.
inline MaterialModel stabilized_fabric() {
    MaterialModel m;
    m.kind = MaterialModel::Kind::LinearElastic;
    m.youngs_modulus = 8e6;
    m.poisson_ratio = 0.3;
    m.density = 1070.0;
    return m;
}

// Clutch plates, dielectric and adhesive treated as one laminate.
inline MaterialModel clutch_laminate() {
    MaterialModel m;
    m.kind = MaterialModel::Kind::LinearElastic;
    m.youngs_modulus = 1e8;
    m.poisson_ratio = 0.3;
    m.density = 1390.0;
    return m;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct AnnulusSpec {
    double inner = 0.0;  // m
    double outer = 0.0;  // m
    Material material = Material::Soft;
};

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

struct ClutchFootprint {
    ClutchId id = ClutchId::Inboard;
    double r_inner = 0.0;     // m
    double r_outer = 0.0;     // m
    double azimuth = 0.0;     // rad, centre of the angular span
    double half_angle = kPi;  // rad; pi means a full annulus
    std::array<int, 2> anchor_rings{0, 0};

    bool full_annulus() const { return half_angle >= kPi; }

    bool contains(const Vec2& p) const {
        const double r = p.norm();
        if (r < r_inner || r > r_outer) return false;
        if (full_annulus()) return true;
        if (r == 0.0) return false;
        const double d = wrap_angle(std::atan2(p.y(), p.x()) - azimuth);
        return std::abs(d) <= half_angle;
    }

    double area() const {
        const double sweep = full_annulus() ? 2.0 * kPi : 2.0 * half_angle;
        return 0.5 * sweep * (r_outer * r_outer - r_inner * r_inner);
    }
};

struct MembraneDesign {
    double radius = 0.075;              // m
    double silicone_thickness = 0.001;  // m
    double clutch_thickness = 0.0002;   // m
    std::vector<AnnulusSpec> rings;
    std::vector<ClutchFootprint> clutch_footprints;
    MaterialModel silicone = ecoflex_0030();
    MaterialModel stabilized = stabilized_fabric();
    MaterialModel clutch = clutch_laminate();

    const MaterialModel& material_for(Material m) const {
        return m == Material::Soft ? silicone : stabilized;
    }

    const ClutchFootprint* footprint(ClutchId id) const {
        for (const auto& f : clutch_footprints) {
            if (f.id == id) return &f;
        }
        return nullptr;
    }

    int soft_ring_count() const {
        return static_cast<int>(std::count_if(rings.begin(), rings.end(), [](const AnnulusSpec& a) {
            return a.material == Material::Soft;
        }));
    }
};

inline void validate(const MembraneDesign& d) {
    if (!(d.radius > 0.0)) throw InvalidInput("design: radius must be positive");
    if (!(d.silicone_thickness > 0.0)) throw InvalidInput("design: silicone_thickness must be positive");
    if (!(d.clutch_thickness > 0.0)) throw InvalidInput("design: clutch_thickness must be positive");
    if (d.rings.empty()) throw InvalidInput("design: no rings");

    const double tol = 1e-9 * d.radius;
    double cursor = 0.0;
    for (std::size_t i = 0; i < d.rings.size(); ++i) {
        const auto& a = d.rings[i];
        if (std::abs(a.inner - cursor) > tol) {
            throw InvalidInput("design: ring " + std::to_string(i) +
                               " does not start where the previous ring ends (gap or overlap)");
        }
        if (!(a.outer - a.inner > tol)) {
            throw InvalidInput("design: ring " + std::to_string(i) + " has zero or negative width");
        }
        cursor = a.outer;
    }
    if (std::abs(cursor - d.radius) > tol) {
        throw InvalidInput("design: rings do not reach the clamped radius");
    }

    d.silicone.validate("silicone");
    d.stabilized.validate("stabilized");
    d.clutch.validate("clutch");
    if (d.silicone.kind != MaterialModel::Kind::Ogden3) {
        throw InvalidInput("design: silicone must use the Ogden3 model");
    }

    std::array<int, 5> seen{};
    for (const auto& f : d.clutch_footprints) {
        if (++seen[index_of(f.id)] > 1) {
            throw InvalidInput("design: duplicate footprint " + std::string(to_string(f.id)));
        }
        if (!(f.r_outer > f.r_inner) || f.r_inner < 0.0 || f.r_outer > d.radius + tol) {
            throw InvalidInput("design: footprint " + std::string(to_string(f.id)) +
                               " has an invalid radial span");
        }
        if (!(f.half_angle > 0.0)) {
            throw InvalidInput("design: footprint " + std::string(to_string(f.id)) +
                               " has a non-positive angular span");
        }
        bool bridges = false;
        for (const auto& a : d.rings) {
            if (a.material == Material::Soft && f.r_inner <= a.inner + tol && f.r_outer >= a.outer - tol) {
                bridges = true;
            }
        }
        if (!bridges) {
            throw InvalidInput("design: footprint " + std::string(to_string(f.id)) +
                               " does not bridge a full soft annulus");
        }
        for (int ring : f.anchor_rings) {
            if (ring < 0 || ring >= static_cast<int>(d.rings.size()) ||
                d.rings[static_cast<std::size_t>(ring)].material != Material::Stabilized) {
                throw InvalidInput("design: footprint " + std::string(to_string(f.id)) +
                                   " must anchor to stabilized rings");
            }
        }
    }
}

// Parameters of the default concentric layout. Radii are measured from the
// membrane centre; the layout is stab | soft | stab | soft | stab | soft | stab.
// Ring widths are not published; these give soft annuli of 6.0, 6.5 and
// 6.5 mm, chosen so the three shape primitives reach the reported heights.
struct DefaultLayout {
    double radius = 0.075;
    std::array<double, 6> ring_edges{0.014, 0.020, 0.034, 0.0405, 0.053, 0.0595};
    double outboard_half_angle = 30.0 * kPi / 180.0;
};

inline MembraneDesign build_design(const DefaultLayout& layout) {
    MembraneDesign d;
    d.radius = layout.radius;
    double inner = 0.0;
    for (std::size_t i = 0; i <= layout.ring_edges.size(); ++i) {
        const double outer = i < layout.ring_edges.size() ? layout.ring_edges[i] : layout.radius;
        d.rings.push_back({inner, outer, i % 2 == 0 ? Material::Stabilized : Material::Soft});
        inner = outer;
    }
    const auto mid = [&](int ring) {
        const auto& a = d.rings[static_cast<std::size_t>(ring)];
        return 0.5 * (a.inner + a.outer);
    };

    // Inboard clutch: full annulus over the innermost soft ring, bonded to
    // the central disk and the first stabilized ring.
    d.clutch_footprints.push_back({ClutchId::Inboard, mid(0), mid(2), 0.0, kPi, {0, 2}});

    // Outboard clutches: sectors bridging the two outer soft rings.
    const std::array<std::pair<ClutchId, double>, 4> outboard = {
        std::pair{ClutchId::OutboardE, 0.0}, std::pair{ClutchId::OutboardN, 0.5 * kPi},
        std::pair{ClutchId::OutboardW, kPi}, std::pair{ClutchId::OutboardS, 1.5 * kPi}};
    for (const auto& [id, az] : outboard) {
        d.clutch_footprints.push_back({id, mid(2), mid(6), az, layout.outboard_half_angle, {2, 6}});
    }
    validate(d);
    return d;
}

inline MembraneDesign build_default_design() { return build_design(DefaultLayout{}); }

// Rotates every outboard footprint a quarter turn counter-clockwise and
// relabels it with the id of the slot it lands in.
inline MembraneDesign rotate_footprints_quarter(MembraneDesign d) {
    for (auto& f : d.clutch_footprints) {
        if (f.full_annulus()) continue;
        f.azimuth = wrap_angle(f.azimuth + 0.5 * kPi);
        f.id = rotate_quarter(f.id);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Region lookup
// ---------------------------------------------------------------------------

struct RegionTag {
    int ring = 0;
    Material material = Material::Soft;
    std::vector<ClutchId> clutches;  // footprints covering the point

    bool clutch_covered() const { return !clutches.empty(); }
};

// Ring boundaries belong to the outer ring; the rim belongs to the last ring.
inline RegionTag region_lookup(const MembraneDesign& d, const Vec2& p) {
    const double r = p.norm();
    if (!(r <= d.radius * (1.0 + 1e-12))) {
        throw InvalidInput("region_lookup: point lies outside the membrane");
    }
    RegionTag tag;
    tag.ring = static_cast<int>(d.rings.size()) - 1;
    for (std::size_t i = 0; i + 1 < d.rings.size(); ++i) {
        if (r < d.rings[i].outer) {
            tag.ring = static_cast<int>(i);
            break;
        }
    }
    tag.material = d.rings[static_cast<std::size_t>(tag.ring)].material;
    for (const auto& f : d.clutch_footprints) {
        if (f.contains(p)) tag.clutches.push_back(f.id);
    }
    return tag;
}

// ---------------------------------------------------------------------------
// JSON design file
// ---------------------------------------------------------------------------

inline constexpr int kDesignSchemaVersion = 1;

inline nlohmann::json material_to_json(const MaterialModel& m) {
    nlohmann::json j;
    j["density"] = m.density;
    if (m.kind == MaterialModel::Kind::Ogden3) {
        j["kind"] = "Ogden3";
        j["ogden"] = nlohmann::json::array();
        for (const auto& t : m.ogden) j["ogden"].push_back({{"mu", t.mu}, {"alpha", t.alpha}});
    } else {
        j["kind"] = "LinearElastic";
        j["youngs_modulus"] = m.youngs_modulus;
        j["poisson_ratio"] = m.poisson_ratio;
    }
    return j;
}

inline MaterialModel material_from_json(const nlohmann::json& j, const MaterialModel& fallback) {
    MaterialModel m = fallback;
    const std::string kind = j.value("kind", m.kind == MaterialModel::Kind::Ogden3 ? "Ogden3" : "LinearElastic");
    m.density = j.value("density", m.density);
    if (kind == "Ogden3") {
        m.kind = MaterialModel::Kind::Ogden3;
        if (j.contains("ogden")) {
            const auto& terms = j.at("ogden");
            if (!terms.is_array() || terms.size() != 3) {
                throw InvalidInput("material: Ogden3 requires exactly 3 (mu, alpha) terms");
            }
            for (std::size_t i = 0; i < 3; ++i) {
                m.ogden[i] = {terms[i].at("mu").get<double>(), terms[i].at("alpha").get<double>()};
            }
        }
    } else if (kind == "LinearElastic") {
        m.kind = MaterialModel::Kind::LinearElastic;
        m.youngs_modulus = j.value("youngs_modulus", m.youngs_modulus);
        m.poisson_ratio = j.value("poisson_ratio", m.poisson_ratio);
    } else {
        throw InvalidInput("material: unknown kind '" + kind + "'");
    }
    return m;
}

inline nlohmann::json design_to_json(const MembraneDesign& d) {
    nlohmann::json j;
    j["schema_version"] = kDesignSchemaVersion;
    j["radius"] = d.radius;
    j["silicone_thickness"] = d.silicone_thickness;
    j["clutch_thickness"] = d.clutch_thickness;
    j["rings"] = nlohmann::json::array();
    for (const auto& a : d.rings) {
        j["rings"].push_back({{"inner", a.inner}, {"outer", a.outer}, {"material", to_string(a.material)}});
    }
    j["clutch_footprints"] = nlohmann::json::array();
    for (const auto& f : d.clutch_footprints) {
        j["clutch_footprints"].push_back({{"id", to_string(f.id)},
                                          {"r_inner", f.r_inner},
                                          {"r_outer", f.r_outer},
                                          {"azimuth_rad", f.azimuth},
                                          {"half_angle_rad", f.half_angle},
                                          {"anchor_rings", f.anchor_rings}});
    }
    j["materials"] = {{"silicone", material_to_json(d.silicone)},
                      {"stabilized", material_to_json(d.stabilized)},
                      {"clutch", material_to_json(d.clutch)}};
    return j;
}

// Missing fields keep their defaults, so a design file may override only
// what it needs.
inline MembraneDesign design_from_json(const nlohmann::json& j) {
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != kDesignSchemaVersion) {
            throw InvalidInput("design: unsupported schema_version " + std::to_string(version));
        }
        MembraneDesign d = build_default_design();
        d.radius = j.value("radius", d.radius);
        d.silicone_thickness = j.value("silicone_thickness", d.silicone_thickness);
        d.clutch_thickness = j.value("clutch_thickness", d.clutch_thickness);
        if (j.contains("rings")) {
            d.rings.clear();
            for (const auto& r : j.at("rings")) {
                d.rings.push_back({r.at("inner").get<double>(), r.at("outer").get<double>(),
                                   parse_material(r.at("material").get<std::string>())});
            }
        }
        if (j.contains("clutch_footprints")) {
            d.clutch_footprints.clear();
            for (const auto& f : j.at("clutch_footprints")) {
                ClutchFootprint fp;
                fp.id = parse_clutch_id(f.at("id").get<std::string>());
                fp.r_inner = f.at("r_inner").get<double>();
                fp.r_outer = f.at("r_outer").get<double>();
                fp.azimuth = f.value("azimuth_rad", 0.0);
                fp.half_angle = f.value("half_angle_rad", kPi);
                fp.anchor_rings = f.at("anchor_rings").get<std::array<int, 2>>();
                d.clutch_footprints.push_back(fp);
            }
        }
        if (j.contains("materials")) {
            const auto& m = j.at("materials");
            if (m.contains("silicone")) d.silicone = material_from_json(m.at("silicone"), d.silicone);
            if (m.contains("stabilized")) d.stabilized = material_from_json(m.at("stabilized"), d.stabilized);
            if (m.contains("clutch")) d.clutch = material_from_json(m.at("clutch"), d.clutch);
        }
        validate(d);
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("design file: ") + e.what());
    }
}

}  // namespace clutchshape
