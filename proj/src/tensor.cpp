#include "unmix/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

namespace unmix {

std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (int e : shape) n *= e;
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

namespace {

std::shared_ptr<detail::TensorNode> make_node(Shape shape, bool requires_grad) {
    require_shape(shape.size() >= 1 && shape.size() <= 5,
                  "tensor rank must be 1..5, got " + shape_str(shape));
    for (int e : shape) require_shape(e >= 1, "tensor extents must be positive: " + shape_str(shape));
    auto node = std::make_shared<detail::TensorNode>();
    node->shape = std::move(shape);
    node->requires_grad = requires_grad;
    return node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
    auto node = make_node(std::move(shape), requires_grad);
    node->data.assign(static_cast<std::size_t>(shape_numel(node->shape)), 0.0f);
    return Tensor(std::move(node));
}

Tensor Tensor::full(Shape shape, float value) {
    auto node = make_node(std::move(shape), false);
    node->data.assign(static_cast<std::size_t>(shape_numel(node->shape)), value);
    return Tensor(std::move(node));
}

Tensor Tensor::from_data(Shape shape, std::vector<float> values, bool requires_grad) {
    auto node = make_node(std::move(shape), requires_grad);
    require_shape(static_cast<std::int64_t>(values.size()) == shape_numel(node->shape),
                  "data length does not match shape " + shape_str(node->shape));
    node->data = std::move(values);
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value) {
    return from_data({1}, {value});
}

const Shape& Tensor::shape() const { return node_->shape; }
int Tensor::rank() const { return static_cast<int>(node_->shape.size()); }

int Tensor::extent(int axis) const {
    if (axis < 0) axis += rank();
    require_shape(axis >= 0 && axis < rank(), "axis out of range");
    return node_->shape[static_cast<std::size_t>(axis)];
}

std::int64_t Tensor::numel() const { return shape_numel(node_->shape); }

float* Tensor::data() { return node_->data.data(); }
const float* Tensor::data() const { return node_->data.data(); }
std::span<const float> Tensor::values() const { return {node_->data.data(), node_->data.size()}; }

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::span<float> Tensor::grad() {
    if (node_->grad.size() != node_->data.size()) node_->grad.assign(node_->data.size(), 0.0f);
    return {node_->grad.data(), node_->grad.size()};
}

std::span<const float> Tensor::grad() const {
    return {node_->grad.data(), node_->grad.size()};
}

bool Tensor::has_grad() const { return node_ && node_->grad.size() == node_->data.size(); }

void Tensor::zero_grad() {
    if (node_) node_->grad.assign(node_->data.size(), 0.0f);
}

float Tensor::item() const {
    require_shape(numel() == 1, "item() requires a single-element tensor");
    return node_->data[0];
}

float Tensor::at(std::initializer_list<int> idx) const {
    require_shape(static_cast<int>(idx.size()) == rank(), "index rank mismatch");
    std::int64_t flat = 0;
    int axis = 0;
    for (int i : idx) {
        const int e = node_->shape[static_cast<std::size_t>(axis)];
        require_shape(i >= 0 && i < e, "index out of bounds");
        flat = flat * e + i;
        ++axis;
    }
    return node_->data[static_cast<std::size_t>(flat)];
}

Tensor Tensor::detached_copy() const {
    return Tensor::from_data(node_->shape, node_->data, false);
}

namespace {
thread_local Tape* g_active_tape = nullptr;
}

Tape::Tape() {
    previous_ = g_active_tape;
    g_active_tape = this;
}

Tape::~Tape() { g_active_tape = previous_; }

Tape* Tape::active() { return g_active_tape; }

void Tape::record(std::vector<std::shared_ptr<detail::TensorNode>> touched,
                  std::function<void()> backward) {
    entries_.push_back(Entry{std::move(touched), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
    require_shape(loss.defined() && loss.numel() == 1, "backward() needs a scalar loss");
    require_value(loss.requires_grad(), "loss does not depend on any tracked tensor");

    std::unordered_set<detail::TensorNode*> seen;
    for (auto& entry : entries_) {
        for (auto& node : entry.touched) {
            if (!node->requires_grad) continue;
            if (seen.insert(node.get()).second) {
                node->grad.assign(node->data.size(), 0.0f);
            }
        }
    }

    auto loss_node = loss.node();
    loss_node->grad.assign(loss_node->data.size(), 0.0f);
    loss_node->grad[0] = 1.0f;

    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        it->fn();
    }
}

void check_finite(const Tensor& t, const char* op_name) {
    for (float v : t.values()) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string(op_name) + " produced a non-finite value");
        }
    }
}

}  // namespace unmix
