#ifndef PRISM_FFT_HPP
#define PRISM_FFT_HPP

#include <span>
#include <vector>

#include "prism/types.hpp"

namespace prism::fft {

/// In-place forward DFT (engineering sign convention, unnormalized).
void forward(std::span<cplx> x);

/// In-place inverse DFT, normalized by 1/N.
void inverse(std::span<cplx> x);

/// In-place unnormalized backward DFT; callers fold 1/N into their own
/// frequency-domain multipliers.
void backward_raw(std::span<cplx> x);
void backward_raw(std::vector<cplx>& x);

void forward(std::vector<cplx>& x);
void inverse(std::vector<cplx>& x);

/// Frequency of bin k for an N-point DFT at the given sample rate, in Hz.
/// Bins above N/2 map to negative frequencies.
double bin_frequency(std::size_t k, std::size_t n, double sample_rate);

}  // namespace prism::fft

#endif
