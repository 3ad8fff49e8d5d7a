#include "lcd/matching.hpp"

#include <algorithm>

#include "lcd/errors.hpp"

namespace lcd {

NNIndex::NNIndex(const DescriptorSet& descs) {
    if (descs.empty()) throw InvariantViolation("NNIndex: empty descriptor set");
    std::vector<double> flat(descs.data().begin(), descs.data().end());
    tree_.build(flat, descs.dim());
}

std::size_t NNIndex::nearest(std::span<const float> query) const {
    if (query.size() != tree_.dim()) {
        throw DimensionMismatch("NNIndex: query dim " + std::to_string(query.size()) +
                                " != index dim " + std::to_string(tree_.dim()));
    }
    std::vector<double> q(query.begin(), query.end());
    return tree_.nearest(q).index;
}

NNIndex build_index(const DescriptorSet& descs) { return NNIndex(descs); }

CorrespondenceSet mutual_nn(const DescriptorSet& a, const DescriptorSet& b) {
    return mutual_nn(a, NNIndex(a), b, NNIndex(b));
}

CorrespondenceSet mutual_nn(const DescriptorSet& a, const NNIndex& ia, const DescriptorSet& b,
                            const NNIndex& ib) {
    if (a.empty() || b.empty()) throw InvariantViolation("mutual_nn: empty descriptor set");
    if (a.dim() != b.dim()) {
        throw DimensionMismatch("mutual_nn: dims " + std::to_string(a.dim()) + " vs " +
                                std::to_string(b.dim()));
    }

    std::vector<std::size_t> nn_ab(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) nn_ab[i] = ib.nearest(a.vec(i));
    std::vector<std::size_t> nn_ba(b.size());
    for (std::size_t j = 0; j < b.size(); ++j) nn_ba[j] = ia.nearest(b.vec(j));

    CorrespondenceSet out;
    out.size_a = a.size();
    out.size_b = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t j = nn_ab[i];
        if (nn_ba[j] == i) out.pairs.emplace_back(i, j);
    }
    return out;
}

double mnn_overlap(const CorrespondenceSet& c) {
    const std::size_t smaller = std::min(c.size_a, c.size_b);
    if (smaller == 0) throw InvariantViolation("mnn_overlap: correspondence set lacks set sizes");
    return static_cast<double>(c.pairs.size()) / static_cast<double>(smaller);
}

} // namespace lcd
