#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace vdlab {

bool is_power_of_two(std::size_t n);

// In-place iterative radix-2 FFT. Size must be a power of two. The inverse
// transform includes the 1/n scaling.
void fft_inplace(std::vector<std::complex<double>>& a, bool inverse);

// Real-input forward FFT; returns bins 0..n/2 (n/2 + 1 values).
std::vector<std::complex<double>> rfft(const double* x, std::size_t n);

}  // namespace vdlab
