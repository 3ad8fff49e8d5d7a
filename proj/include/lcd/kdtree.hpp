#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "lcd/errors.hpp"

namespace lcd {

// Exact nearest-neighbour kd-tree over runtime-dimensional points.
// Ties on distance are broken by the smallest point index, and pruning is
// strict (>) so an equal-distance, smaller-index point is never skipped.
// Queries are const and safe to run concurrently once built.
class KdTree {
public:
    KdTree() = default;

    // data is n*dim scalars, row-major. The tree keeps its own copy.
    KdTree(std::span<const double> data, std::size_t dim) { build(data, dim); }

    void build(std::span<const double> data, std::size_t dim) {
        if (dim == 0) throw InvariantViolation("KdTree: dim must be positive");
        if (data.empty() || data.size() % dim != 0) {
            throw InvariantViolation("KdTree: data size must be a non-zero multiple of dim");
        }
        dim_ = dim;
        points_.assign(data.begin(), data.end());
        const std::size_t n = size();
        order_.resize(n);
        for (std::size_t i = 0; i < n; ++i) order_[i] = i;
        nodes_.clear();
        nodes_.reserve(2 * n / kLeafSize + 2);
        root_ = build_node(0, n);
    }

    std::size_t size() const { return dim_ ? points_.size() / dim_ : 0; }
    std::size_t dim() const { return dim_; }

    struct Hit {
        std::size_t index = 0;
        double sq_dist = std::numeric_limits<double>::infinity();
    };

    // Single nearest neighbour of query (must have tree dimension).
    Hit nearest(std::span<const double> query) const {
        check_query(query);
        Hit best;
        nearest_rec(root_, query, best);
        return best;
    }

    // k nearest neighbours, ascending by (sq_dist, index).
    std::vector<Hit> knearest(std::span<const double> query, std::size_t k) const {
        check_query(query);
        if (k == 0) return {};
        std::vector<Hit> heap; // max-heap on (sq_dist, index)
        heap.reserve(k + 1);
        knearest_rec(root_, query, k, heap);
        std::sort(heap.begin(), heap.end(), hit_less);
        return heap;
    }

    // All point indices with ||p - query|| <= radius, ascending by index.
    std::vector<std::size_t> radius_indices(std::span<const double> query, double radius) const {
        check_query(query);
        std::vector<std::size_t> out;
        radius_rec(root_, query, radius * radius, out);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    static constexpr std::size_t kLeafSize = 12;

    struct Node {
        double split = 0.0;
        std::size_t axis = 0;
        int left = -1;
        int right = -1;
        std::size_t begin = 0; // leaf range into order_
        std::size_t end = 0;
        bool leaf = false;
    };

    static bool hit_less(const Hit& a, const Hit& b) {
        if (a.sq_dist != b.sq_dist) return a.sq_dist < b.sq_dist;
        return a.index < b.index;
    }

    void check_query(std::span<const double> query) const {
        if (query.size() != dim_) throw DimensionMismatch("KdTree: query dimension mismatch");
        if (nodes_.empty()) throw InvariantViolation("KdTree: not built");
    }

    const double* point(std::size_t i) const { return points_.data() + i * dim_; }

    int build_node(std::size_t begin, std::size_t end) {
        Node node;
        if (end - begin <= kLeafSize) {
            node.leaf = true;
            node.begin = begin;
            node.end = end;
            // Keep leaf entries in index order so equal-distance scans hit
            // the smaller index first.
            std::sort(order_.begin() + begin, order_.begin() + end);
            nodes_.push_back(node);
            return static_cast<int>(nodes_.size() - 1);
        }

        // Split on the widest-spread axis at the median.
        std::size_t axis = 0;
        double best_spread = -1.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            for (std::size_t i = begin; i < end; ++i) {
                const double v = point(order_[i])[d];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            if (hi - lo > best_spread) {
                best_spread = hi - lo;
                axis = d;
            }
        }

        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::size_t a, std::size_t b) { return point(a)[axis] < point(b)[axis]; });
        node.axis = axis;
        node.split = point(order_[mid])[axis];
        const int self = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        const int left = build_node(begin, mid);
        const int right = build_node(mid, end);
        nodes_[self].left = left;
        nodes_[self].right = right;
        return self;
    }

    double sq_dist(std::span<const double> query, std::size_t i) const {
        const double* p = point(i);
        double acc = 0.0;
        for (std::size_t d = 0; d < dim_; ++d) {
            const double diff = query[d] - p[d];
            acc += diff * diff;
        }
        return acc;
    }

    void nearest_rec(int node_id, std::span<const double> query, Hit& best) const {
        const Node& node = nodes_[node_id];
        if (node.leaf) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                Hit h{order_[i], sq_dist(query, order_[i])};
                if (hit_less(h, best)) best = h;
            }
            return;
        }
        const double delta = query[node.axis] - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        nearest_rec(near, query, best);
        if (delta * delta <= best.sq_dist) nearest_rec(far, query, best);
    }

    void knearest_rec(int node_id, std::span<const double> query, std::size_t k,
                      std::vector<Hit>& heap) const {
        const Node& node = nodes_[node_id];
        if (node.leaf) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                Hit h{order_[i], sq_dist(query, order_[i])};
                if (heap.size() < k) {
                    heap.push_back(h);
                    std::push_heap(heap.begin(), heap.end(), hit_less);
                } else if (hit_less(h, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), hit_less);
                    heap.back() = h;
                    std::push_heap(heap.begin(), heap.end(), hit_less);
                }
            }
            return;
        }
        const double delta = query[node.axis] - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        knearest_rec(near, query, k, heap);
        if (heap.size() < k || delta * delta <= heap.front().sq_dist) {
            knearest_rec(far, query, k, heap);
        }
    }

    void radius_rec(int node_id, std::span<const double> query, double sq_radius,
                    std::vector<std::size_t>& out) const {
        const Node& node = nodes_[node_id];
        if (node.leaf) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                if (sq_dist(query, order_[i]) <= sq_radius) out.push_back(order_[i]);
            }
            return;
        }
        const double delta = query[node.axis] - node.split;
        const int near = delta < 0.0 ? node.left : node.right;
        const int far = delta < 0.0 ? node.right : node.left;
        radius_rec(near, query, sq_radius, out);
        if (delta * delta <= sq_radius) radius_rec(far, query, sq_radius, out);
    }

    std::size_t dim_ = 0;
    std::vector<double> points_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

// kd-tree over the xyz coordinates of a point cloud.
class PointKdTree {
public:
    explicit PointKdTree(const std::vector<Eigen::Vector3d>& points) {
        std::vector<double> flat;
        flat.reserve(points.size() * 3);
        for (const auto& p : points) {
            flat.push_back(p.x());
            flat.push_back(p.y());
            flat.push_back(p.z());
        }
        tree_.build(flat, 3);
    }

    KdTree::Hit nearest(const Eigen::Vector3d& q) const {
        const double query[3] = {q.x(), q.y(), q.z()};
        return tree_.nearest(std::span<const double>(query, 3));
    }

    std::vector<KdTree::Hit> knearest(const Eigen::Vector3d& q, std::size_t k) const {
        const double query[3] = {q.x(), q.y(), q.z()};
        return tree_.knearest(std::span<const double>(query, 3), k);
    }

    std::vector<std::size_t> radius_indices(const Eigen::Vector3d& q, double radius) const {
        const double query[3] = {q.x(), q.y(), q.z()};
        return tree_.radius_indices(std::span<const double>(query, 3), radius);
    }

private:
    KdTree tree_;
};

} // namespace lcd
