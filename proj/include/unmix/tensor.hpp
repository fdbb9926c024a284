#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "unmix/common.hpp"

namespace unmix {

// Dense row-major extents, at most 5 axes.
using Shape = std::vector<int>;

std::int64_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {

struct TensorNode {
    Shape shape;
    std::vector<float> data;
    std::vector<float> grad;  // sized only while gradients are tracked
    bool requires_grad = false;
};

}  // namespace detail

// Value-semantic handle on a dense float32 tensor. Data is immutable after an
// op creates it; only the grad buffer is written afterwards (by Tape::backward)
// and leaf data (by the optimizer, between forward passes).
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, float value);
    static Tensor from_data(Shape shape, std::vector<float> values, bool requires_grad = false);
    static Tensor scalar(float value);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const;
    int rank() const;
    int extent(int axis) const;
    std::int64_t numel() const;

    float* data();
    const float* data() const;
    std::span<const float> values() const;

    bool requires_grad() const;
    std::span<float> grad();  // allocates (zeroed) on first use
    std::span<const float> grad() const;
    bool has_grad() const;
    void zero_grad();

    float item() const;
    float at(std::initializer_list<int> idx) const;

    Tensor detached_copy() const;

    const std::shared_ptr<detail::TensorNode>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<detail::TensorNode> node_;
};

// Eager reverse-mode tape. While a tape is active (it installs itself for the
// current thread on construction), every differentiable op whose inputs are
// tracked appends one backward closure. backward() zeroes the grads of all
// touched nodes, seeds the scalar loss with 1 and replays the closures once in
// reverse order, so every tracked leaf ends up with its full gradient exactly
// once per call. A tape is single-owner: it must stay on the thread that
// created it.
class Tape {
public:
    Tape();
    ~Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    static Tape* active();

    void record(std::vector<std::shared_ptr<detail::TensorNode>> touched,
                std::function<void()> backward);
    void backward(const Tensor& loss);
    std::size_t size() const { return entries_.size(); }

private:
    struct Entry {
        std::vector<std::shared_ptr<detail::TensorNode>> touched;
        std::function<void()> fn;
    };
    std::vector<Entry> entries_;
    Tape* previous_ = nullptr;
};

// True when the tensor participates in the active tape's graph.
inline bool tracked(const Tensor& t) {
    return t.defined() && t.requires_grad() && Tape::active() != nullptr;
}

// Throws NumericError if any entry is NaN/Inf; every forward op calls this on
// its output (finite values are a tensor invariant).
void check_finite(const Tensor& t, const char* op_name);

}  // namespace unmix
