#pragma once

#include <complex>
#include <cstdint>
#include <vector>

namespace unmix::linalg {

// Symmetric eigendecomposition by cyclic Jacobi rotations. a is n*n row-major
// and is not modified. Eigenvalues come back ascending; eigvecs is n*n
// row-major with column j holding the eigenvector of eigvals[j].
void sym_eig(const std::vector<double>& a, int n, std::vector<double>& eigvals,
             std::vector<double>& eigvecs);

// In-place radix-2 FFT; size must be a power of two. inverse applies the 1/n
// scaling.
void fft_inplace(std::vector<std::complex<double>>& v, bool inverse);

int next_pow2(int n);

}  // namespace unmix::linalg
