// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/types.hpp"

#include <algorithm>
#include <numeric>

namespace splatdyn {

/// Static 3D k-d tree for k-nearest queries. Results are ordered by distance with
/// ties broken by lowest point index, so queries are deterministic.
template <typename Scalar>
class KdTree {
public:
    struct Neighbor {
        std::uint32_t index;
        Scalar distance_squared;
    };

    KdTree() = default;
    explicit KdTree(std::vector<Vec3<Scalar>> points) : points_(std::move(points))
    {
        order_.resize(points_.size());
        std::iota(order_.begin(), order_.end(), 0u);
        if (!points_.empty()) build(0, std::uint32_t(order_.size()));
    }

    std::size_t size() const { return points_.size(); }
    const std::vector<Vec3<Scalar>>& points() const { return points_; }

    std::vector<Neighbor> knn(const Vec3<Scalar>& q, std::size_t k) const
    {
        k = std::min(k, points_.size());
        std::vector<Neighbor> heap; // max-heap under `closer`
        heap.reserve(k + 1);
        if (k > 0) search(0, q, k, heap);
        std::sort_heap(heap.begin(), heap.end(), closer);
        return heap;
    }

    Neighbor nearest(const Vec3<Scalar>& q) const { return knn(q, 1).front(); }

private:
    static bool closer(const Neighbor& a, const Neighbor& b)
    {
        return a.distance_squared != b.distance_squared ? a.distance_squared < b.distance_squared : a.index < b.index;
    }

    struct Node {
        std::uint32_t begin = 0, end = 0;
        int axis = -1; // -1 marks a leaf
        Scalar split = 0;
        std::uint32_t left = 0, right = 0;
    };

    static constexpr std::uint32_t kLeafSize = 8;

    std::uint32_t build(std::uint32_t begin, std::uint32_t end)
    {
        const auto id = std::uint32_t(nodes_.size());
        nodes_.push_back({begin, end});
        if (end - begin <= kLeafSize) return id;
        Vec3<Scalar> lo = points_[order_[begin]], hi = lo;
        for (auto i = begin; i < end; ++i) {
            lo = lo.cwiseMin(points_[order_[i]]);
            hi = hi.cwiseMax(points_[order_[i]]);
        }
        int axis;
        (hi - lo).maxCoeff(&axis);
        const std::uint32_t mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
        const Scalar split = points_[order_[mid]][axis];
        const std::uint32_t left = build(begin, mid);
        const std::uint32_t right = build(mid, end);
        nodes_[id].axis = axis;
        nodes_[id].split = split;
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void search(std::uint32_t id, const Vec3<Scalar>& q, std::size_t k, std::vector<Neighbor>& heap) const
    {
        const Node& node = nodes_[id];
        if (node.axis < 0) {
            for (auto i = node.begin; i < node.end; ++i) {
                const std::uint32_t idx = order_[i];
                const Neighbor n{idx, (points_[idx] - q).squaredNorm()};
                if (heap.size() < k) {
                    heap.push_back(n);
                    std::push_heap(heap.begin(), heap.end(), closer);
                } else if (closer(n, heap.front())) {
                    std::pop_heap(heap.begin(), heap.end(), closer);
                    heap.back() = n;
                    std::push_heap(heap.begin(), heap.end(), closer);
                }
            }
            return;
        }
        const Scalar diff = q[node.axis] - node.split;
        const std::uint32_t near = diff < 0 ? node.left : node.right;
        const std::uint32_t far = diff < 0 ? node.right : node.left;
        search(near, q, k, heap);
        // <= keeps equidistant candidates reachable for the index tie-break.
        if (heap.size() < k || diff * diff <= heap.front().distance_squared) search(far, q, k, heap);
    }

    std::vector<Vec3<Scalar>> points_;
    std::vector<std::uint32_t> order_;
    std::vector<Node> nodes_;
};

} // namespace splatdyn
