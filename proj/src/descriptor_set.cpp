#include "lcd/descriptor_set.hpp"

#include <cmath>
#include <string>

namespace lcd {

namespace {

double vec_norm(std::span<const float> v) {
    double acc = 0.0;
    for (const float x : v) acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
}

} // namespace

void DescriptorSet::check_unit_norm(double tol) const {
    for (std::size_t i = 0; i < size(); ++i) {
        const double norm = vec_norm(vec(i));
        if (std::abs(norm - 1.0) > tol) {
            throw InvariantViolation("descriptor " + std::to_string(i) + " has L2 norm " +
                                     std::to_string(norm) + ", expected 1 within " +
                                     std::to_string(tol));
        }
    }
}

void DescriptorSet::normalize() {
    for (std::size_t i = 0; i < size(); ++i) {
        float* row = data_.data() + i * dim_;
        const double norm = vec_norm(std::span<const float>(row, dim_));
        if (norm <= 0.0) {
            throw InvariantViolation("descriptor " + std::to_string(i) +
                                     " has zero norm and cannot be normalized");
        }
        for (std::size_t d = 0; d < dim_; ++d) {
            row[d] = static_cast<float>(static_cast<double>(row[d]) / norm);
        }
    }
}

DescriptorSet DescriptorSet::subset(const std::vector<std::size_t>& indices) const {
    std::vector<float> data;
    data.reserve(indices.size() * dim_);
    for (const std::size_t i : indices) {
        const auto row = vec(i);
        data.insert(data.end(), row.begin(), row.end());
    }
    return DescriptorSet(dim_, std::move(data));
}

} // namespace lcd
