#include "unmix/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace unmix {

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double eps) {
    require_value(eps > 0.0, "grad_check: eps must be positive");
    Tensor probe = Tensor::from_data(x.shape(), std::vector<float>(x.data(), x.data() + x.numel()),
                                     /*requires_grad=*/true);

    std::vector<float> analytic;
    {
        Tape tape;
        Tensor y = f(probe);
        require_shape(y.numel() == 1, "grad_check: f must be scalar-valued");
        if (!std::isfinite(y.item())) throw NumericError("grad_check: f is non-finite");
        tape.backward(y);
        auto g = probe.grad();
        analytic.assign(g.begin(), g.end());
    }

    // central differences, evaluated without a tape
    double max_rel = 0.0;
    float* px = probe.data();
    const std::int64_t n = probe.numel();
    for (std::int64_t i = 0; i < n; ++i) {
        const float saved = px[i];
        px[i] = saved + static_cast<float>(eps);
        const double fp = static_cast<double>(f(probe).item());
        px[i] = saved - static_cast<float>(eps);
        const double fm = static_cast<double>(f(probe).item());
        px[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: f is non-finite at a perturbed point");
        const double fd = (fp - fm) / (2.0 * eps);
        const double g = static_cast<double>(analytic[static_cast<std::size_t>(i)]);
        const double denom = std::max({std::abs(g), std::abs(fd), 1e-6});
        max_rel = std::max(max_rel, std::abs(g - fd) / denom);
    }
    return max_rel;
}

}  // namespace unmix
