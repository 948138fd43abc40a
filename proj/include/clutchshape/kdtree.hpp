#pragma once

// Exact k-nearest-neighbour search over a fixed set of 3D points.
// Equal distances are ordered by point index so results are reproducible.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace clutchshape {

struct Neighbor {
    double dist2 = 0.0;
    int index = -1;

    friend bool operator<(const Neighbor& a, const Neighbor& b) {
        return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
};

class KdTree {
public:
    KdTree() = default;

    explicit KdTree(std::span<const Eigen::Vector3d> points) : points_(points.begin(), points.end()) {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0);
        if (!points_.empty()) {
            nodes_.reserve(2 * points_.size() / kLeafSize + 2);
            build(0, static_cast<int>(order_.size()));
        }
    }

    std::size_t size() const { return points_.size(); }
    const Eigen::Vector3d& point(int i) const { return points_[static_cast<std::size_t>(i)]; }

    // k nearest points to q, closest first. `exclude` removes one index from
    // consideration (used when querying a point against its own cloud).
    std::vector<Neighbor> knn(const Eigen::Vector3d& q, std::size_t k, int exclude = -1) const {
        std::vector<Neighbor> heap;
        heap.reserve(k + 1);
        if (k == 0 || nodes_.empty()) return heap;
        search(0, q, k, exclude, heap);
        std::sort_heap(heap.begin(), heap.end());
        return heap;
    }

    Neighbor nearest(const Eigen::Vector3d& q) const {
        const auto r = knn(q, 1);
        return r.empty() ? Neighbor{} : r.front();
    }

private:
    static constexpr int kLeafSize = 12;

    struct Node {
        int begin = 0, end = 0;     // range in order_
        int left = -1, right = -1;  // children, -1 for leaves
        int axis = 0;
        double split = 0.0;
        Eigen::Vector3d lo, hi;  // bounding box
    };

    int build(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        Node node;
        node.begin = begin;
        node.end = end;
        node.lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
        node.hi = -node.lo;
        for (int i = begin; i < end; ++i) {
            node.lo = node.lo.cwiseMin(points_[order_[i]]);
            node.hi = node.hi.cwiseMax(points_[order_[i]]);
        }
        if (end - begin > kLeafSize) {
            Eigen::Index axis = 0;
            (node.hi - node.lo).maxCoeff(&axis);
            node.axis = static_cast<int>(axis);
            const int mid = begin + (end - begin) / 2;
            std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                             [&](int a, int b) {
                                 const double pa = points_[a][axis];
                                 const double pb = points_[b][axis];
                                 return pa < pb || (pa == pb && a < b);
                             });
            node.split = points_[order_[mid]][axis];
            node.left = build(begin, mid);
            node.right = build(mid, end);
        }
        nodes_[static_cast<std::size_t>(id)] = node;
        return id;
    }

    static double box_dist2(const Node& n, const Eigen::Vector3d& q) {
        const Eigen::Vector3d d = (n.lo - q).cwiseMax(q - n.hi).cwiseMax(0.0);
        return d.squaredNorm();
    }

    void search(int id, const Eigen::Vector3d& q, std::size_t k, int exclude, std::vector<Neighbor>& heap) const {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        if (heap.size() == k && box_dist2(n, q) > heap.front().dist2) return;
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const int idx = order_[static_cast<std::size_t>(i)];
                if (idx == exclude) continue;
                const Neighbor cand{(points_[static_cast<std::size_t>(idx)] - q).squaredNorm(), idx};
                if (heap.size() < k) {
                    heap.push_back(cand);
                    std::push_heap(heap.begin(), heap.end());
                } else if (cand < heap.front()) {
                    std::pop_heap(heap.begin(), heap.end());
                    heap.back() = cand;
                    std::push_heap(heap.begin(), heap.end());
                }
            }
            return;
        }
        const bool go_left = q[n.axis] < n.split;
        search(go_left ? n.left : n.right, q, k, exclude, heap);
        search(go_left ? n.right : n.left, q, k, exclude, heap);
    }

    std::vector<Eigen::Vector3d> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace clutchshape
