#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

// Data-parallel inner loops shared by the transform and estimator modules.
// Every kernel exists twice: a plain serial reference in kernels::serial and
// an OpenMP variant in kernels::par. The dispatching wrappers at namespace
// level pick one at runtime from the configured thread count. All reductions
// use a fixed 4096-element blocking so the parallel results are bit-identical
// to the serial ones for any thread count.

namespace aniso::kernels {

// Global execution knob (set from --threads). 1 selects the serial path.
void set_threads(int n);
int threads();

inline constexpr std::size_t kBlock = 4096;

using cplx = std::complex<double>;

namespace serial {

void scale(double* x, std::size_t n, double a);
void axpy(double* y, const double* x, std::size_t n, double a);
void mul(double* out, const double* a, const double* b, std::size_t n);
void mul(cplx* out, const cplx* a, const cplx* b, std::size_t n);
void abs2(double* out, const cplx* a, std::size_t n);
// out[i] += a[i]^2 (accumulation for square-function sums, fixed k-order)
void add_sq(double* out, const double* a, std::size_t n);
void max_inplace(double* out, const double* a, std::size_t n);

double block_sum(const double* x, std::size_t n);
double block_max_abs(const double* x, std::size_t n);
// sum of |x[i]|^p * w[i] (w may be null for w == 1)
double block_pow_sum(const double* x, const double* w, std::size_t n, double p);

// Periodic sliding maximum along contiguous lines of length `len`, window
// offsets in [-lo, +hi] cells. `lines` independent lines, unit stride.
void sliding_max_lines(double* out, const double* in, std::size_t lines, std::size_t len,
                       int lo, int hi);

}  // namespace serial

namespace par {

void scale(double* x, std::size_t n, double a);
void axpy(double* y, const double* x, std::size_t n, double a);
void mul(double* out, const double* a, const double* b, std::size_t n);
void mul(cplx* out, const cplx* a, const cplx* b, std::size_t n);
void abs2(double* out, const cplx* a, std::size_t n);
void add_sq(double* out, const double* a, std::size_t n);
void max_inplace(double* out, const double* a, std::size_t n);

double block_sum(const double* x, std::size_t n);
double block_max_abs(const double* x, std::size_t n);
double block_pow_sum(const double* x, const double* w, std::size_t n, double p);

void sliding_max_lines(double* out, const double* in, std::size_t lines, std::size_t len,
                       int lo, int hi);

}  // namespace par

void scale(double* x, std::size_t n, double a);
void axpy(double* y, const double* x, std::size_t n, double a);
void mul(double* out, const double* a, const double* b, std::size_t n);
void mul(cplx* out, const cplx* a, const cplx* b, std::size_t n);
void abs2(double* out, const cplx* a, std::size_t n);
void add_sq(double* out, const double* a, std::size_t n);
void max_inplace(double* out, const double* a, std::size_t n);
double block_sum(const double* x, std::size_t n);
double block_max_abs(const double* x, std::size_t n);
double block_pow_sum(const double* x, const double* w, std::size_t n, double p);
void sliding_max_lines(double* out, const double* in, std::size_t lines, std::size_t len,
                       int lo, int hi);

inline double block_sum(const std::vector<double>& v) { return block_sum(v.data(), v.size()); }

// Parallel loop over [0, n) with independent bodies (one write slot per index).
template <typename F>
void for_each_index(std::size_t n, F&& body);

}  // namespace aniso::kernels

// Implementation of the template wrapper.
#include <omp.h>

namespace aniso::kernels {

template <typename F>
void for_each_index(std::size_t n, F&& body) {
    if (threads() > 1) {
#pragma omp parallel for schedule(static) num_threads(threads())
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
            body(static_cast<std::size_t>(i));
    } else {
        for (std::size_t i = 0; i < n; ++i) body(i);
    }
}

}  // namespace aniso::kernels
