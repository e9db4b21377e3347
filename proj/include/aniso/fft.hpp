#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "aniso/grid.hpp"

namespace aniso::fftutil {

using cvec = std::vector<std::complex<double>>;

// Raw in-place complex DFT over a row-major nd array; sign is FFTW_FORWARD
// (-1) or FFTW_BACKWARD (+1), unnormalized.
void dft(const std::vector<int>& shape, cvec& data, int sign);

// Frequency grid of a space grid: same shape, halfwidth pi/h per axis,
// coordinate xi_m = (m - N/2) * pi/L.
std::vector<double> dual_halfwidth(const GridFunction& space);

// Continuous-Fourier-transform samples F(xi_m) = h^n sum_j f(x_j) e^{-i x_j xi_m}
// of a real space field, as a centered complex buffer.
cvec analyze(const GridFunction& f);

// Inverse of analyze; imaginary residue is discarded (inputs used here have
// even real spectra). Returns a real space field on the given grid.
GridFunction synthesize(const GridFunction& like, const cvec& spectrum);

// Spectrum buffer as a complex frequency-domain GridFunction (for I/O).
GridFunction spectrum_field(const GridFunction& space, const cvec& spec);

// Periodic convolution scaled by cell volume: (f*g)(x) = h^n sum f(y) g(x-y).
GridFunction convolve(const GridFunction& f, const GridFunction& g);

// f * m^vee where the multiplier m(xi) is evaluated analytically on the
// frequency grid (must be even for a real result).
GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<double(const double*)>& mhat);
cvec multiplied_spectrum(const GridFunction& like, const cvec& spec,
                         const std::function<double(const double*)>& mhat);

}  // namespace aniso::fftutil
