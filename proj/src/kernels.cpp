#include "aniso/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <omp.h>

namespace aniso::kernels {

namespace {
int g_threads = omp_get_max_threads();
}

void set_threads(int n) { g_threads = n < 1 ? 1 : n; }
int threads() { return g_threads; }

// ---------------------------------------------------------------- serial

namespace serial {

void scale(double* x, std::size_t n, double a) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void axpy(double* y, const double* x, std::size_t n, double a) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void mul(cplx* out, const cplx* a, const cplx* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] * b[i];
}

void abs2(double* out, const cplx* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::norm(a[i]);
}

void add_sq(double* out, const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] += a[i] * a[i];
}

void max_inplace(double* out, const double* a, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::max(out[i], a[i]);
}

double block_sum(const double* x, std::size_t n) {
    const std::size_t nb = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        double s = 0.0;
        for (std::size_t i = b * kBlock; i < end; ++i) s += x[i];
        partial[b] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

double block_max_abs(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

double block_pow_sum(const double* x, const double* w, std::size_t n, double p) {
    const std::size_t nb = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
    for (std::size_t b = 0; b < nb; ++b) {
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        double s = 0.0;
        for (std::size_t i = b * kBlock; i < end; ++i) {
            const double v = std::pow(std::fabs(x[i]), p);
            s += w ? v * w[i] : v;
        }
        partial[b] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

namespace {

// Periodic sliding max over one line: out[j] = max_{-lo <= d <= hi} in[(j+d) mod len].
// Monotone-deque over the doubled line, O(len).
void sliding_max_one(double* out, const double* in, std::size_t len, int lo, int hi) {
    const int w = lo + hi + 1;
    if (w >= static_cast<int>(len)) {
        double m = in[0];
        for (std::size_t i = 1; i < len; ++i) m = std::max(m, in[i]);
        for (std::size_t i = 0; i < len; ++i) out[i] = m;
        return;
    }
    std::deque<int> q;  // indices into the virtual doubled array, values decreasing
    auto val = [&](int i) { return in[i % len]; };
    // window for j covers [j - lo, j + hi]; start filling for j = 0 shifted by +len
    const int start = static_cast<int>(len) - lo;
    int right = start - 1;
    for (int j = 0; j < static_cast<int>(len); ++j) {
        const int lohit = start + j;          // left edge (inclusive)
        const int hihit = start + j + lo + hi;  // right edge (inclusive)
        while (right < hihit) {
            ++right;
            while (!q.empty() && val(q.back()) <= val(right)) q.pop_back();
            q.push_back(right);
        }
        while (q.front() < lohit) q.pop_front();
        out[j] = val(q.front());
    }
}

}  // namespace

void sliding_max_lines(double* out, const double* in, std::size_t lines, std::size_t len,
                       int lo, int hi) {
    for (std::size_t l = 0; l < lines; ++l)
        sliding_max_one(out + l * len, in + l * len, len, lo, hi);
}

}  // namespace serial

// ------------------------------------------------------------------ par

namespace par {

#define ANISO_OMP_FOR _Pragma("omp parallel for schedule(static) num_threads(g_threads)")

void scale(double* x, std::size_t n, double a) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) x[i] *= a;
}

void axpy(double* y, const double* x, std::size_t n, double a) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) y[i] += a * x[i];
}

void mul(double* out, const double* a, const double* b, std::size_t n) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = a[i] * b[i];
}

void mul(cplx* out, const cplx* a, const cplx* b, std::size_t n) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = a[i] * b[i];
}

void abs2(double* out, const cplx* a, std::size_t n) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] = std::norm(a[i]);
}

void add_sq(double* out, const double* a, std::size_t n) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) out[i] += a[i] * a[i];
}

void max_inplace(double* out, const double* a, std::size_t n) {
    ANISO_OMP_FOR
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        out[i] = std::max(out[i], a[i]);
}

double block_sum(const double* x, std::size_t n) {
    const std::size_t nb = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
    ANISO_OMP_FOR
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        double s = 0.0;
        for (std::size_t i = b * kBlock; i < end; ++i) s += x[i];
        partial[b] = s;
    }
    double total = 0.0;  // block order fixed: bit-identical to serial
    for (double s : partial) total += s;
    return total;
}

double block_max_abs(const double* x, std::size_t n) {
    double m = 0.0;
#pragma omp parallel for schedule(static) num_threads(g_threads) reduction(max : m)
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i)
        m = std::max(m, std::fabs(x[i]));
    return m;
}

double block_pow_sum(const double* x, const double* w, std::size_t n, double p) {
    const std::size_t nb = (n + kBlock - 1) / kBlock;
    std::vector<double> partial(nb, 0.0);
    ANISO_OMP_FOR
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(nb); ++b) {
        const std::size_t end = std::min(n, (b + 1) * kBlock);
        double s = 0.0;
        for (std::size_t i = b * kBlock; i < end; ++i) {
            const double v = std::pow(std::fabs(x[i]), p);
            s += w ? v * w[i] : v;
        }
        partial[b] = s;
    }
    double total = 0.0;
    for (double s : partial) total += s;
    return total;
}

void sliding_max_lines(double* out, const double* in, std::size_t lines, std::size_t len,
                       int lo, int hi) {
#pragma omp parallel for schedule(static) num_threads(g_threads)
    for (std::int64_t l = 0; l < static_cast<std::int64_t>(lines); ++l)
        serial::sliding_max_lines(out + l * len, in + l * len, 1, len, lo, hi);
}

#undef ANISO_OMP_FOR

}  // namespace par

// ------------------------------------------------------------- dispatch

#define ANISO_DISPATCH(fn, ...) \
    return g_threads > 1 ? par::fn(__VA_ARGS__) : serial::fn(__VA_ARGS__)

void scale(double* x, std::size_t n, double a) { ANISO_DISPATCH(scale, x, n, a); }
void axpy(double* y, const double* x, std::size_t n, double a) { ANISO_DISPATCH(axpy, y, x, n, a); }
void mul(double* out, const double* a, const double* b, std::size_t n) {
    ANISO_DISPATCH(mul, out, a, b, n);
}
void mul(cplx* out, const cplx* a, const cplx* b, std::size_t n) {
    ANISO_DISPATCH(mul, out, a, b, n);
}
void abs2(double* out, const cplx* a, std::size_t n) { ANISO_DISPATCH(abs2, out, a, n); }
void add_sq(double* out, const double* a, std::size_t n) { ANISO_DISPATCH(add_sq, out, a, n); }
void max_inplace(double* out, const double* a, std::size_t n) {
    ANISO_DISPATCH(max_inplace, out, a, n);
}
double block_sum(const double* x, std::size_t n) { ANISO_DISPATCH(block_sum, x, n); }
double block_max_abs(const double* x, std::size_t n) { ANISO_DISPATCH(block_max_abs, x, n); }
double block_pow_sum(const double* x, const double* w, std::size_t n, double p) {
    ANISO_DISPATCH(block_pow_sum, x, w, n, p);
}
void sliding_max_lines(double* out, const double* in, std::size_t lines, std::size_t len,
                       int lo, int hi) {
    ANISO_DISPATCH(sliding_max_lines, out, in, lines, len, lo, hi);
}

#undef ANISO_DISPATCH

}  // namespace aniso::kernels
