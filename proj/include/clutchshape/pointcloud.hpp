#pragma once

// Point-cloud preprocessing and rigid registration used to compare simulated
// and measured membrane shapes.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>
#include <zlib.h>

#include "clutchshape/errors.hpp"
#include "clutchshape/kdtree.hpp"

namespace clutchshape {

struct PointCloud {
    enum class Source { Simulation, DepthCamera, Synthetic };

    std::vector<Eigen::Vector3d> points;
    Source source = Source::Synthetic;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }

    Eigen::Vector3d centroid() const {
        Eigen::Vector3d c = Eigen::Vector3d::Zero();
        for (const auto& p : points) c += p;
        return points.empty() ? c : Eigen::Vector3d(c / static_cast<double>(points.size()));
    }
};

inline void require_valid(const PointCloud& cloud, const char* op) {
    if (cloud.empty()) throw InvalidInput(std::string(op) + ": empty point cloud");
    for (const auto& p : cloud.points) {
        if (!p.allFinite()) throw InvalidInput(std::string(op) + ": non-finite coordinate");
    }
}

struct RigidTransform {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation * p + translation; }

    // (*this) after `first`.
    RigidTransform compose(const RigidTransform& first) const {
        return {rotation * first.rotation, rotation * first.translation + translation};
    }

    RigidTransform inverse() const {
        const Eigen::Matrix3d rt = rotation.transpose();
        return {rt, -rt * translation};
    }

    PointCloud apply(const PointCloud& c) const {
        PointCloud out{{}, c.source};
        out.points.reserve(c.size());
        for (const auto& p : c.points) out.points.push_back(apply(p));
        return out;
    }
};

// ---------------------------------------------------------------------------
// Filters
// ---------------------------------------------------------------------------

// Mean distance of every point to its k nearest neighbours (itself excluded).
inline std::vector<double> mean_knn_distance(const PointCloud& cloud, std::size_t k) {
    const KdTree tree(cloud.points);
    std::vector<double> out(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nn = tree.knn(cloud.points[i], k, static_cast<int>(i));
        double s = 0.0;
        for (const auto& n : nn) s += std::sqrt(n.dist2);
        out[i] = s / static_cast<double>(k);
    }
    return out;
}

// Drops points whose mean k-NN distance exceeds mean + std_multiplier * std
// of that statistic over the cloud. A relative slack of 1e-9 absorbs
// rounding when the statistic is uniform.
inline PointCloud statistical_outlier_removal(const PointCloud& cloud, std::size_t k, double std_multiplier) {
    require_valid(cloud, "statistical_outlier_removal");
    if (k < 1) throw InvalidInput("statistical_outlier_removal: k must be at least 1");
    if (cloud.size() < k + 1) throw InvalidInput("statistical_outlier_removal: cloud has fewer than k+1 points");
    const auto stat = mean_knn_distance(cloud, k);
    const double n = static_cast<double>(stat.size());
    const double mean = std::accumulate(stat.begin(), stat.end(), 0.0) / n;
    double var = 0.0;
    for (double s : stat) var += (s - mean) * (s - mean);
    const double sd = std::sqrt(var / n);
    const double limit = mean + std_multiplier * sd + 1e-9 * mean;
    PointCloud out{{}, cloud.source};
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (stat[i] <= limit) out.points.push_back(cloud.points[i]);
    }
    return out;
}

// Replaces each point by the centroid of itself and its k nearest neighbours.
inline PointCloud knn_noise_filter(const PointCloud& cloud, std::size_t k) {
    require_valid(cloud, "knn_noise_filter");
    if (k < 1) throw InvalidInput("knn_noise_filter: k must be at least 1");
    if (cloud.size() < k + 1) throw InvalidInput("knn_noise_filter: cloud has fewer than k+1 points");
    const KdTree tree(cloud.points);
    PointCloud out{{}, cloud.source};
    out.points.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto nn = tree.knn(cloud.points[i], k, static_cast<int>(i));
        Eigen::Vector3d c = cloud.points[i];
        for (const auto& n : nn) c += cloud.points[static_cast<std::size_t>(n.index)];
        out.points.push_back(c / static_cast<double>(k + 1));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Registration
// ---------------------------------------------------------------------------

// Least-squares rotation and translation taking src[i] onto dst[i]
// (Kabsch). Reflections are rejected. Throws if the points are collinear.
inline RigidTransform best_fit_transform(const std::vector<Eigen::Vector3d>& src,
                                         const std::vector<Eigen::Vector3d>& dst) {
    if (src.size() != dst.size() || src.size() < 3) {
        throw InvalidInput("best_fit_transform: need at least 3 correspondences");
    }
    Eigen::Vector3d cs = Eigen::Vector3d::Zero(), cd = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) {
        cs += src[i];
        cd += dst[i];
    }
    cs /= static_cast<double>(src.size());
    cd /= static_cast<double>(src.size());
    Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
    for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();

    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (!(sv(1) > 1e-12 * std::max(sv(0), 1e-300))) {
        throw InvalidInput("best_fit_transform: degenerate correspondence geometry (collinear points)");
    }
    const Eigen::Matrix3d u = svd.matrixU();
    const Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
    if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    RigidTransform t;
    t.rotation = v * d * u.transpose();
    t.translation = cd - t.rotation * cs;
    return t;
}

struct IcpResult {
    RigidTransform transform;  // maps source into the target frame
    double rmse = 0.0;         // m, over the final correspondences
    int iterations = 0;
};

struct IcpOptions {
    int max_iters = 100;
    double tol = 1e-7;           // m, stop when the RMSE improves by less
    bool align_centroids = true; // start from the centroid offset instead of identity
};

// Point-to-point ICP.
inline IcpResult icp_align(const PointCloud& source, const PointCloud& target, const IcpOptions& opt = {}) {
    require_valid(source, "icp_align");
    require_valid(target, "icp_align");
    if (source.size() < 3 || target.size() < 3) throw InvalidInput("icp_align: clouds need at least 3 points");
    const KdTree tree(target.points);

    IcpResult res;
    if (opt.align_centroids) res.transform.translation = target.centroid() - source.centroid();

    std::vector<Eigen::Vector3d> moved(source.size()), matched(source.size());
    double prev = std::numeric_limits<double>::infinity();
    const auto correspond = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < source.size(); ++i) {
            moved[i] = res.transform.apply(source.points[i]);
            const Neighbor n = tree.nearest(moved[i]);
            matched[i] = target.points[static_cast<std::size_t>(n.index)];
            s += n.dist2;
        }
        return std::sqrt(s / static_cast<double>(source.size()));
    };

    double rmse = correspond();
    while (res.iterations < opt.max_iters) {
        ++res.iterations;
        const RigidTransform step = best_fit_transform(moved, matched);
        res.transform = step.compose(res.transform);
        prev = rmse;
        rmse = correspond();
        if (std::abs(prev - rmse) < opt.tol) break;
    }
    // Re-orthonormalise against accumulated rounding.
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(res.transform.rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
    res.transform.rotation = svd.matrixU() * svd.matrixV().transpose();
    res.rmse = rmse;
    return res;
}

inline IcpResult icp_align(const PointCloud& source, const PointCloud& target, int max_iters, double tol) {
    IcpOptions opt;
    opt.max_iters = max_iters;
    opt.tol = tol;
    return icp_align(source, target, opt);
}

// Root-mean-square nearest-neighbour distance from each point of a to b.
inline double rmse(const PointCloud& a, const PointCloud& b) {
    require_valid(a, "rmse");
    if (b.empty()) throw InvalidInput("rmse: reference cloud is empty");
    const KdTree tree(b.points);
    double s = 0.0;
    for (const auto& p : a.points) s += tree.nearest(p).dist2;
    return std::sqrt(s / static_cast<double>(a.size()));
}

// ---------------------------------------------------------------------------
// File I/O: ASCII PLY and CSV, gzip-compressed when the name ends in ".gz"
// ---------------------------------------------------------------------------

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::string strip_gz(const std::string& path) {
    return ends_with(path, ".gz") ? path.substr(0, path.size() - 3) : path;
}

inline std::string read_text(const std::string& path) {
    if (ends_with(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "rb");
        if (!f) throw InvalidInput("cannot open '" + path + "'");
        std::string out;
        char buf[1 << 15];
        int n;
        while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
        const bool bad = n < 0;
        gzclose(f);
        if (bad) throw InvalidInput("corrupt gzip stream in '" + path + "'");
        return out;
    }
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InvalidInput("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline void write_text(const std::string& path, const std::string& text) {
    if (ends_with(path, ".gz")) {
        gzFile f = gzopen(path.c_str(), "wb");
        if (!f) throw InvalidInput("cannot open '" + path + "' for writing");
        const int n = gzwrite(f, text.data(), static_cast<unsigned>(text.size()));
        gzclose(f);
        if (n != static_cast<int>(text.size())) throw InvalidInput("write failed for '" + path + "'");
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open '" + path + "' for writing");
    os << text;
}

inline PointCloud parse_ply(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    std::getline(is, line);
    if (line.rfind("ply", 0) != 0) throw InvalidInput("PLY: missing magic");
    std::size_t vertex_count = 0;
    std::vector<std::string> props;
    bool in_vertex = false;
    int xi = -1, yi = -1, zi = -1;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (word == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt != "ascii") throw InvalidInput("PLY: only ascii format is supported");
        } else if (word == "element") {
            std::string name;
            std::size_t count = 0;
            ls >> name >> count;
            in_vertex = name == "vertex";
            if (in_vertex) vertex_count = count;
        } else if (word == "property" && in_vertex) {
            std::string type, name;
            ls >> type >> name;
            if (type == "list") throw InvalidInput("PLY: list property on vertices");
            if (name == "x") xi = static_cast<int>(props.size());
            if (name == "y") yi = static_cast<int>(props.size());
            if (name == "z") zi = static_cast<int>(props.size());
            props.push_back(name);
        } else if (word == "end_header") {
            break;
        }
    }
    if (xi < 0 || yi < 0 || zi < 0) throw InvalidInput("PLY: vertex element lacks x, y, z");
    PointCloud cloud;
    cloud.points.reserve(vertex_count);
    std::vector<double> vals(props.size());
    for (std::size_t v = 0; v < vertex_count; ++v) {
        for (auto& val : vals) {
            if (!(is >> val)) throw InvalidInput("PLY: truncated vertex data");
        }
        cloud.points.emplace_back(vals[static_cast<std::size_t>(xi)], vals[static_cast<std::size_t>(yi)],
                                  vals[static_cast<std::size_t>(zi)]);
    }
    return cloud;
}

inline PointCloud parse_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    PointCloud cloud;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z)) {
            if (first) {
                first = false;
                continue;  // header
            }
            throw InvalidInput("CSV: malformed row '" + line + "'");
        }
        first = false;
        cloud.points.emplace_back(x, y, z);
    }
    return cloud;
}

}  // namespace detail

inline PointCloud read_point_cloud(const std::string& path, PointCloud::Source source = PointCloud::Source::DepthCamera) {
    const std::string base = detail::strip_gz(path);
    const std::string text = detail::read_text(path);
    PointCloud cloud;
    if (detail::ends_with(base, ".ply")) {
        cloud = detail::parse_ply(text);
    } else if (detail::ends_with(base, ".csv")) {
        cloud = detail::parse_csv(text);
    } else {
        throw InvalidInput("point cloud '" + path + "': expected .ply, .csv or a .gz of either");
    }
    cloud.source = source;
    require_valid(cloud, "read_point_cloud");
    return cloud;
}

inline void write_point_cloud(const std::string& path, const PointCloud& cloud) {
    const std::string base = detail::strip_gz(path);
    std::ostringstream os;
    os.precision(17);
    if (detail::ends_with(base, ".ply")) {
        os << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
           << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    } else if (detail::ends_with(base, ".csv")) {
        os << "x,y,z\n";
    } else {
        throw InvalidInput("point cloud '" + path + "': expected .ply, .csv or a .gz of either");
    }
    const char sep = detail::ends_with(base, ".csv") ? ',' : ' ';
    for (const auto& p : cloud.points) os << p.x() << sep << p.y() << sep << p.z() << '\n';
    detail::write_text(path, os.str());
}

}  // namespace clutchshape
