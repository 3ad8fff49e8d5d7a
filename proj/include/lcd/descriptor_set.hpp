#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lcd/errors.hpp"

namespace lcd {

// N unit-norm d-dimensional float vectors, index-aligned with the
// subsampled point set they were computed from.
class DescriptorSet {
public:
    static constexpr double kNormTolerance = 1e-6;

    DescriptorSet() = default;

    DescriptorSet(std::size_t dim, std::vector<float> data) : dim_(dim), data_(std::move(data)) {
        if (dim_ == 0) throw InvariantViolation("DescriptorSet: dim must be positive");
        if (data_.empty() || data_.size() % dim_ != 0) {
            throw InvariantViolation("DescriptorSet: data must hold N >= 1 full vectors");
        }
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return dim_ ? data_.size() / dim_ : 0; }
    bool empty() const { return data_.empty(); }

    std::span<const float> vec(std::size_t i) const {
        return std::span<const float>(data_.data() + i * dim_, dim_);
    }

    const std::vector<float>& data() const { return data_; }

    // Throws InvariantViolation if any vector deviates from unit L2 norm
    // by more than tol.
    void check_unit_norm(double tol = kNormTolerance) const;

    // Scales every vector to exact unit norm (double-precision arithmetic).
    void normalize();

    DescriptorSet subset(const std::vector<std::size_t>& indices) const;

private:
    std::size_t dim_ = 0;
    std::vector<float> data_;
};

} // namespace lcd
