#pragma once

// Triangulation of the clamped disk.
//
// Vertices sit on concentric circles. Every ring boundary and every clutch
// footprint radius is a circle of vertices, so annulus areas are resolved up
// to chord error. Circles carry a multiple of four vertices and a fixed
// angular phase, which makes the mesh invariant under quarter turns.

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "clutchshape/design.hpp"

namespace clutchshape {

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<Material> region_of_triangle;
    std::vector<int> ring_of_triangle;
    std::vector<std::optional<ClutchId>> clutch_of_triangle;
    std::vector<int> boundary_vertices;
    double edge_length = 0.0;  // target used to build the mesh

    std::size_t vertex_count() const { return vertices.size(); }
    std::size_t triangle_count() const { return triangles.size(); }

    double triangle_area(std::size_t t) const {
        const auto& tri = triangles[t];
        const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
        const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
        return 0.5 * e1.cross(e2).norm();
    }

    double total_area() const {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
        return a;
    }

    double ring_area(int ring) const {
        double a = 0.0;
        for (std::size_t t = 0; t < triangles.size(); ++t) {
            if (ring_of_triangle[t] == ring) a += triangle_area(t);
        }
        return a;
    }

    std::vector<bool> boundary_mask() const {
        std::vector<bool> mask(vertices.size(), false);
        for (int v : boundary_vertices) mask[static_cast<std::size_t>(v)] = true;
        return mask;
    }
};

namespace detail {

struct Circle {
    double radius = 0.0;
    int count = 1;   // vertices on the circle (1 for the centre)
    int phase = 0;   // 0: first vertex at angle 0, 1: offset by half a step
    int first = 0;   // index of the first vertex
};

inline double circle_angle(const Circle& c, int j) {
    return kPi * (2.0 * j + c.phase) / c.count;
}

// Zips two neighbouring circles into a strip of triangles. Angles are
// compared in exact integer arithmetic so the strip repeats identically in
// each quarter.
inline void zip_circles(const Circle& in, const Circle& out, std::vector<std::array<int, 3>>& tris) {
    int i = 0;
    int j = 0;
    const auto vin = [&](int k) { return in.first + (k % in.count); };
    const auto vout = [&](int k) { return out.first + (k % out.count); };
    while (i < in.count || j < out.count) {
        bool advance_inner;
        if (i == in.count) {
            advance_inner = false;
        } else if (j == out.count) {
            advance_inner = true;
        } else {
            // angle(in, i+1) <= angle(out, j+1) ?
            const std::int64_t lhs = static_cast<std::int64_t>(2 * (i + 1) + in.phase) * out.count;
            const std::int64_t rhs = static_cast<std::int64_t>(2 * (j + 1) + out.phase) * in.count;
            advance_inner = lhs <= rhs;
        }
        if (advance_inner) {
            tris.push_back({vin(i), vout(j), vin(i + 1)});
            ++i;
        } else {
            tris.push_back({vin(i), vout(j), vout(j + 1)});
            ++j;
        }
    }
}

}  // namespace detail

// Builds the disk mesh. Edge lengths stay at or below target_edge_length
// (up to the fixed minimum of eight vertices on the innermost circle).
inline Mesh generate_mesh(const MembraneDesign& design, double target_edge_length) {
    validate(design);
    if (!(target_edge_length > 0.0) || !(target_edge_length < design.radius / 4.0)) {
        throw InvalidInput("generate_mesh: target_edge_length must lie in (0, radius/4)");
    }

    const double tangential = 0.85 * target_edge_length;
    const double radial = tangential * std::sqrt(3.0) / 2.0;

    // Break radii: ring boundaries and clutch footprint ends.
    std::vector<double> breaks{0.0, design.radius};
    for (const auto& a : design.rings) breaks.push_back(a.outer);
    for (const auto& f : design.clutch_footprints) {
        breaks.push_back(f.r_inner);
        breaks.push_back(f.r_outer);
    }
    std::sort(breaks.begin(), breaks.end());
    const double merge_tol = 1e-3 * target_edge_length;
    std::vector<double> unique_breaks;
    for (double b : breaks) {
        if (b < 0.0 || b > design.radius) continue;
        if (unique_breaks.empty() || b - unique_breaks.back() > merge_tol) unique_breaks.push_back(b);
    }
    unique_breaks.back() = design.radius;

    std::vector<double> radii{0.0};
    for (std::size_t s = 0; s + 1 < unique_breaks.size(); ++s) {
        const double a = unique_breaks[s];
        const double b = unique_breaks[s + 1];
        const int m = std::max(1, static_cast<int>(std::ceil((b - a) / radial - 1e-9)));
        for (int k = 1; k <= m; ++k) radii.push_back(a + (b - a) * k / m);
    }

    Mesh mesh;
    mesh.edge_length = target_edge_length;
    std::vector<detail::Circle> circles;
    circles.push_back({0.0, 1, 0, 0});
    mesh.vertices.push_back(Vec3::Zero());
    for (std::size_t k = 1; k < radii.size(); ++k) {
        const double r = radii[k];
        const int quarters = std::max(2, static_cast<int>(std::ceil(2.0 * kPi * r / (4.0 * tangential))));
        detail::Circle c{r, 4 * quarters, static_cast<int>(k % 2), static_cast<int>(mesh.vertices.size())};
        for (int j = 0; j < c.count; ++j) {
            const double th = detail::circle_angle(c, j);
            mesh.vertices.emplace_back(r * std::cos(th), r * std::sin(th), 0.0);
        }
        circles.push_back(c);
    }

    // Centre fan.
    const auto& first = circles[1];
    for (int j = 0; j < first.count; ++j) {
        mesh.triangles.push_back({0, first.first + j, first.first + (j + 1) % first.count});
    }
    for (std::size_t k = 1; k + 1 < circles.size(); ++k) {
        detail::zip_circles(circles[k], circles[k + 1], mesh.triangles);
    }

    // Orient every face with +z normal and tag it by centroid containment.
    for (auto& tri : mesh.triangles) {
        const Vec3 e1 = mesh.vertices[tri[1]] - mesh.vertices[tri[0]];
        const Vec3 e2 = mesh.vertices[tri[2]] - mesh.vertices[tri[0]];
        if (e1.cross(e2).z() < 0.0) std::swap(tri[1], tri[2]);
        const Vec3 c = (mesh.vertices[tri[0]] + mesh.vertices[tri[1]] + mesh.vertices[tri[2]]) / 3.0;
        const RegionTag tag = region_lookup(design, c.head<2>());
        mesh.region_of_triangle.push_back(tag.material);
        mesh.ring_of_triangle.push_back(tag.ring);
        mesh.clutch_of_triangle.push_back(tag.clutches.empty() ? std::nullopt
                                                                : std::optional<ClutchId>(tag.clutches.front()));
    }

    const auto& rim = circles.back();
    for (int j = 0; j < rim.count; ++j) mesh.boundary_vertices.push_back(rim.first + j);
    return mesh;
}

// ---------------------------------------------------------------------------
// PLY export
// ---------------------------------------------------------------------------

// Region codes written to PLY: 0 soft, 1 stabilized, 2 clutch-covered.
inline int region_code(const Mesh& mesh, std::size_t t) {
    if (mesh.clutch_of_triangle[t]) return 2;
    return mesh.region_of_triangle[t] == Material::Soft ? 0 : 1;
}

// Writes the mesh (optionally displaced) as ASCII PLY with per-face
// "region" and "clutch" (-1 when uncovered) properties.
inline void write_ply(std::ostream& os, const Mesh& mesh, std::span<const Vec3> displacement = {}) {
    os << "ply\nformat ascii 1.0\n";
    os << "element vertex " << mesh.vertices.size() << "\n";
    os << "property double x\nproperty double y\nproperty double z\n";
    os << "element face " << mesh.triangles.size() << "\n";
    os << "property list uchar int vertex_indices\nproperty uchar region\nproperty char clutch\n";
    os << "end_header\n";
    os.precision(17);
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        Vec3 p = mesh.vertices[v];
        if (!displacement.empty()) p += displacement[v];
        os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    }
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tri = mesh.triangles[t];
        const int clutch = mesh.clutch_of_triangle[t] ? static_cast<int>(index_of(*mesh.clutch_of_triangle[t])) : -1;
        os << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << ' ' << region_code(mesh, t) << ' ' << clutch
           << '\n';
    }
}

inline void write_ply(const std::string& path, const Mesh& mesh, std::span<const Vec3> displacement = {}) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    write_ply(os, mesh, displacement);
}

}  // namespace clutchshape
