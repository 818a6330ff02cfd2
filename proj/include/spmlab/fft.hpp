#pragma once

#include <complex>

namespace spmlab {

// Unnormalized inverse DFT: out[j] = Re sum_m spec[m] exp(+2 pi i m.j / n).
// Thread-safe (FFTW planning is serialized internally).
void inverse_fft(const std::complex<double>* spec, int d, int n, double* out);

}  // namespace spmlab
