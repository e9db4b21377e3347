#include "aniso/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

#include "aniso/kernels.hpp"

namespace aniso::fftutil {

namespace {

std::mutex g_plan_mutex;
std::map<std::pair<std::vector<int>, int>, fftw_plan> g_plans;

fftw_plan plan_for(const std::vector<int>& shape, int sign, fftw_complex* buf) {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    const auto key = std::make_pair(shape, sign);
    auto it = g_plans.find(key);
    if (it != g_plans.end()) return it->second;
    fftw_plan p = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(), buf, buf,
                                sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    require(p != nullptr, "NonFinite", "FFTW planning failed");
    g_plans.emplace(key, p);
    return p;
}

// Multiply data[i] by scale * (-1)^(sum of per-axis indices of i).
void checkerboard_scale(const std::vector<int>& shape, cvec& data, double scale) {
    const int d = static_cast<int>(shape.size());
    kernels::for_each_index(data.size(), [&](std::size_t i) {
        std::size_t f = i;
        int parity = 0;
        for (int a = d - 1; a >= 0; --a) {
            parity += static_cast<int>(f % shape[a]);
            f /= shape[a];
        }
        data[i] *= (parity & 1) ? -scale : scale;
    });
}

}  // namespace

void dft(const std::vector<int>& shape, cvec& data, int sign) {
    std::size_t n = 1;
    for (int s : shape) {
        require(s % 4 == 0, "ResolutionTooCoarse", "grid axes must be divisible by 4");
        n *= static_cast<std::size_t>(s);
    }
    require(data.size() == n, "GridMismatch", "dft buffer size mismatch");
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan_for(shape, sign, buf), buf, buf);
}

std::vector<double> dual_halfwidth(const GridFunction& space) {
    std::vector<double> hw(space.dim());
    for (int a = 0; a < space.dim(); ++a) hw[a] = M_PI / space.spacing(a);
    return hw;
}

cvec analyze(const GridFunction& f) {
    cvec data(f.size());
    kernels::for_each_index(f.size(), [&](std::size_t i) {
        data[i] = {f.values[i], f.is_complex() ? f.imag[i] : 0.0};
    });
    checkerboard_scale(f.shape, data, 1.0);
    dft(f.shape, data, -1);
    checkerboard_scale(f.shape, data, f.cell_volume());
    return data;
}

GridFunction synthesize(const GridFunction& like, const cvec& spectrum) {
    require(spectrum.size() == like.size(), "GridMismatch", "spectrum size mismatch");
    cvec data = spectrum;
    checkerboard_scale(like.shape, data, 1.0);
    dft(like.shape, data, +1);
    const double scale = 1.0 / (static_cast<double>(like.size()) * like.cell_volume());
    checkerboard_scale(like.shape, data, scale);
    GridFunction out = GridFunction::like(like);
    out.domain = Domain::Space;
    kernels::for_each_index(out.size(), [&](std::size_t i) { out.values[i] = data[i].real(); });
    return out;
}

GridFunction spectrum_field(const GridFunction& space, const cvec& spec) {
    GridFunction g(space.shape, dual_halfwidth(space), Domain::Frequency);
    g.imag.assign(g.size(), 0.0);
    kernels::for_each_index(g.size(), [&](std::size_t i) {
        g.values[i] = spec[i].real();
        g.imag[i] = spec[i].imag();
    });
    return g;
}

GridFunction convolve(const GridFunction& f, const GridFunction& g) {
    require(f.same_grid(g), "GridMismatch", "convolve requires identical grids");
    cvec F = analyze(f);
    const cvec G = analyze(g);
    kernels::mul(F.data(), F.data(), G.data(), F.size());
    return synthesize(f, F);
}

cvec multiplied_spectrum(const GridFunction& like, const cvec& spec,
                         const std::function<double(const double*)>& mhat) {
    GridFunction freq(like.shape, dual_halfwidth(like), Domain::Frequency);
    cvec out(spec.size());
    kernels::for_each_index(spec.size(), [&](std::size_t i) {
        double xi[8];
        freq.point_at(i, xi);
        out[i] = spec[i] * mhat(xi);
    });
    return out;
}

GridFunction apply_multiplier(const GridFunction& f,
                              const std::function<double(const double*)>& mhat) {
    const cvec F = analyze(f);
    return synthesize(f, multiplied_spectrum(f, F, mhat));
}

}  // namespace aniso::fftutil
