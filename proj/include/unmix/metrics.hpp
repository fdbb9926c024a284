#pragma once

#include <optional>
#include <vector>

#include "unmix/hsi_types.hpp"

namespace unmix {

struct EvalReport {
    double rmse_abun = 0.0;
    double sad_end = 0.0;
    std::optional<double> rmse_b;
    std::vector<int> permutation;  // estimated index aligned to each true index
};

// Bijection minimising the total spectral angle between estimated and true
// rows (optimal assignment on the R x R SAD cost matrix). perm[t] is the
// estimated row matched to true row t.
std::vector<int> match_endmembers(const EndmemberMatrix& estimated,
                                  const EndmemberMatrix& truth);

// sqrt( ||A_hat_perm - A||_F^2 / (pixel_count * R) )
double rmse_abun(const AbundanceTensor& estimated, const AbundanceTensor& truth,
                 const std::vector<int>& perm);

// mean spectral angle over aligned endmember pairs, radians
double sad_end(const EndmemberMatrix& estimated, const EndmemberMatrix& truth,
               const std::vector<int>& perm);

// sqrt( ||B_hat - B||_F^2 / pixel_count )
double rmse_b(const NonlinearField& estimated, const NonlinearField& truth);

struct Histogram {
    std::vector<double> bin_centers;
    std::vector<std::int64_t> counts;
};

// Equal-width histogram over [min, max] of the field values.
Histogram b_histogram(const NonlinearField& b, int bins);

}  // namespace unmix
