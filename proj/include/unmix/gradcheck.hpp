#pragma once

#include <functional>
#include <string>
#include <vector>

#include "unmix/tensor.hpp"

namespace unmix {

// Compares tape gradients of the scalar-valued f against central finite
// differences, elementwise over x. Returns the max relative error with
// denominator max(|g|, |g_fd|, 1e-6). eps should sit in [1e-4, 1e-2] for
// 32-bit data.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps);

// One named finite-difference check; run(eps) returns the max relative error.
struct GradCheckCase {
    std::string name;
    double tolerance;
    std::function<double(double)> run;
};

// Every differentiable op plus both transformer block types, at toy shapes
// with inputs kept away from subgradient kinks.
const std::vector<GradCheckCase>& gradcheck_suite();

}  // namespace unmix
