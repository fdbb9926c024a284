#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "unmix/tensor.hpp"

namespace unmix::opdetail {

using NodePtr = std::shared_ptr<detail::TensorNode>;

inline float* grad_of(const NodePtr& n) { return n->grad.data(); }
inline const float* data_of(const NodePtr& n) { return n->data.data(); }

// Product of all extents except the last (the "row" count of a tensor viewed
// as a matrix over its last axis).
inline std::int64_t leading_numel(const Shape& s) {
    std::int64_t n = 1;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) n *= s[i];
    return n;
}

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

}  // namespace unmix::opdetail
