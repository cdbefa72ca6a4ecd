#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace cardiograph::fft {

// Spectra use the real-input Hermitian layout: full storage on every axis
// except the last, which is halved to n/2+1 bins. Fields and spectra are
// row-major with the last axis fastest; batched calls lay `howmany`
// transforms out contiguously.

std::size_t real_size(const std::vector<int>& dims);
std::size_t spec_size(const std::vector<int>& dims);
std::vector<int> spec_dims(const std::vector<int>& dims);

// Unnormalized forward transform of real fields.
void rfft(const std::vector<int>& dims, std::size_t howmany, const double* x,
          std::complex<double>* spec);

// 1/J-normalized inverse. Self-mirror planes of the stored spectrum (last-axis
// index 0 and n/2) are Hermitian-averaged first, so the map is well defined —
// and exactly invertible — on arbitrary stored values.
void irfft(const std::vector<int>& dims, std::size_t howmany, const std::complex<double>* spec,
           double* x);

// Adjoint of rfft under the pairing sum(Re a Re b + Im a Im b) over stored
// bins: the real part of the unnormalized inverse DFT of the unmirrored half
// spectrum.
void rfft_adjoint(const std::vector<int>& dims, std::size_t howmany,
                  const std::complex<double>* spec, double* x);

// Adjoint of irfft: (w_k / J) * rfft(x at bin k, with w_k = 2 on bins whose
// last-axis mirror is unstored and 1 on the self-mirror planes, and the
// imaginary part zeroed at fully self-conjugate bins.
void irfft_adjoint(const std::vector<int>& dims, std::size_t howmany, const double* x,
                   std::complex<double>* spec);

}  // namespace cardiograph::fft
