#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "lcd/descriptor_set.hpp"
#include "lcd/kdtree.hpp"

namespace lcd {

// Mutual-NN matches between two descriptor sets, plus the sizes of the
// sets they index into. Each side's index appears at most once, so
// |pairs| <= min(size_a, size_b).
struct CorrespondenceSet {
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::size_t size_a = 0;
    std::size_t size_b = 0;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

// Exact L2 nearest-neighbour index over a descriptor set; equidistant
// hits resolve to the smallest index. Immutable once built, so
// concurrent queries are safe.
class NNIndex {
public:
    explicit NNIndex(const DescriptorSet& descs);

    std::size_t size() const { return tree_.size(); }
    std::size_t dim() const { return tree_.dim(); }

    // Index of the nearest descriptor to query (length dim()).
    std::size_t nearest(std::span<const float> query) const;

private:
    KdTree tree_;
};

NNIndex build_index(const DescriptorSet& descs);

// Pairs (i, j) where j is i's nearest neighbour in b and i is j's
// nearest neighbour in a. Output sorted by i.
CorrespondenceSet mutual_nn(const DescriptorSet& a, const DescriptorSet& b);

// Variant reusing prebuilt indexes (ia over a, ib over b).
CorrespondenceSet mutual_nn(const DescriptorSet& a, const NNIndex& ia, const DescriptorSet& b,
                            const NNIndex& ib);

// |C.pairs| / min(size_a, size_b).
double mnn_overlap(const CorrespondenceSet& c);

} // namespace lcd
