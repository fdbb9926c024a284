#include "unmix/hsi_types.hpp"

#include <cmath>

namespace unmix {

HsiCube HsiCube::wrap(Tensor t) {
    require_shape(t.defined() && t.rank() == 3, "HsiCube expects a (rows,cols,bands) tensor");
    HsiCube c;
    c.rows = t.extent(0);
    c.cols = t.extent(1);
    c.bands = t.extent(2);
    c.data = std::move(t);
    return c;
}

EndmemberMatrix EndmemberMatrix::wrap(Tensor t) {
    require_shape(t.defined() && t.rank() == 2, "EndmemberMatrix expects an (R,L) tensor");
    EndmemberMatrix m;
    m.count = t.extent(0);
    m.bands = t.extent(1);
    m.values = std::move(t);
    m.validate();
    return m;
}

void EndmemberMatrix::validate() const {
    const float* p = values.data();
    for (int r = 0; r < count; ++r) {
        bool all_zero = true;
        for (int l = 0; l < bands; ++l) {
            const float v = p[static_cast<std::int64_t>(r) * bands + l];
            require_value(v >= 0.0f, "endmember " + std::to_string(r) + " has a negative entry");
            if (v != 0.0f) all_zero = false;
        }
        require_value(!all_zero, "endmember " + std::to_string(r) + " is identically zero");
    }
}

void AbundanceTensor::validate(float tol) const {
    require_shape(values.defined() && values.rank() == 3, "abundances must be (rows,cols,R)");
    const int r = values.extent(2);
    const std::int64_t pixels = static_cast<std::int64_t>(values.extent(0)) * values.extent(1);
    const float* p = values.data();
    for (std::int64_t i = 0; i < pixels; ++i) {
        float sum = 0.0f;
        for (int c = 0; c < r; ++c) {
            const float v = p[i * r + c];
            require_value(v >= 0.0f, "abundance negativity violated at pixel " + std::to_string(i));
            sum += v;
        }
        require_value(std::abs(sum - 1.0f) <= tol,
                      "abundance sum-to-one violated at pixel " + std::to_string(i));
    }
}

}  // namespace unmix
