#pragma once

#include <cstddef>
#include <vector>

#include "sphm/matrix.hpp"

namespace sphm {

/// N feature rows paired with N integer class labels; the unit of training
/// and evaluation.
struct LabeledBatch {
    Matrix features;              // N x d
    std::vector<int> labels;      // each in [0, class_count)
    std::size_t class_count = 0;

    std::size_t size() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }

    /// Throws std::invalid_argument on label/shape inconsistencies.
    void validate() const;

    friend bool operator==(const LabeledBatch& a, const LabeledBatch& b) = default;
};

}  // namespace sphm
