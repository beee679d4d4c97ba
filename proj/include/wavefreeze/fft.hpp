#pragma once

#include <complex>
#include <vector>

namespace wavefreeze {

// In-place unnormalized complex DFT over a row-major array of the given
// shape. Plans are cached process-wide; execution is reentrant.
void fft_forward(const std::vector<int>& shape, std::complex<double>* data);
void fft_inverse(const std::vector<int>& shape, std::complex<double>* data);

}  // namespace wavefreeze
