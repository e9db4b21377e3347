#include "aniso/grid.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "aniso/kernels.hpp"

namespace aniso {

GridFunction::GridFunction(std::vector<int> shape_, std::vector<double> halfwidth_,
                           Domain dom)
    : shape(std::move(shape_)), halfwidth(std::move(halfwidth_)), domain(dom) {
    require(!shape.empty() && shape.size() == halfwidth.size(), "GridMismatch",
            "shape/halfwidth size mismatch");
    std::size_t n = 1;
    for (int s : shape) {
        require(is_power_of_two(s) && s >= 4, "ResolutionTooCoarse",
                "points per axis must be a power of two >= 4");
        n *= static_cast<std::size_t>(s);
    }
    values.assign(n, 0.0);
}

double GridFunction::cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < dim(); ++a) v *= spacing(a);
    return v;
}

std::size_t GridFunction::flat(const std::vector<int>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a < dim(); ++a) f = f * shape[a] + idx[a];
    return f;
}

std::vector<int> GridFunction::unflat(std::size_t f) const {
    std::vector<int> idx(dim());
    for (int a = dim() - 1; a >= 0; --a) {
        idx[a] = static_cast<int>(f % shape[a]);
        f /= shape[a];
    }
    return idx;
}

void GridFunction::point_at(std::size_t f, double* x) const {
    for (int a = dim() - 1; a >= 0; --a) {
        x[a] = coord(a, static_cast<int>(f % shape[a]));
        f /= shape[a];
    }
}

int GridFunction::nearest_index(int axis, double x) const {
    return static_cast<int>(std::lround((x + halfwidth[axis]) / spacing(axis)));
}

bool GridFunction::same_grid(const GridFunction& other) const {
    return shape == other.shape && halfwidth == other.halfwidth;
}

void GridFunction::fill(const std::function<double(const double*)>& f) {
    const int d = dim();
    kernels::for_each_index(size(), [&](std::size_t i) {
        double x[8];
        point_at(i, x);
        (void)d;
        values[i] = f(x);
    });
}

double GridFunction::interpolate(const double* x) const {
    const int d = dim();
    // base cell and weights per axis
    int base[8];
    double w[8];
    for (int a = 0; a < d; ++a) {
        const double u = (x[a] + halfwidth[a]) / spacing(a);
        const double fl = std::floor(u);
        base[a] = static_cast<int>(fl);
        w[a] = u - fl;
        if (base[a] < -1 || base[a] > shape[a] - 1) return 0.0;  // fully outside
    }
    double acc = 0.0;
    const int corners = 1 << d;
    for (int cmask = 0; cmask < corners; ++cmask) {
        double weight = 1.0;
        std::size_t f = 0;
        bool outside = false;
        for (int a = 0; a < d; ++a) {
            const int off = (cmask >> a) & 1;
            const int idx = base[a] + off;
            weight *= off ? w[a] : 1.0 - w[a];
            if (idx < 0 || idx >= shape[a]) {
                outside = true;
                break;
            }
            f = f * shape[a] + idx;
        }
        if (!outside && weight != 0.0) acc += weight * values[f];
    }
    return acc;
}

double GridFunction::max_abs() const { return kernels::block_max_abs(values.data(), size()); }

double GridFunction::l1() const {
    return kernels::block_pow_sum(values.data(), nullptr, size(), 1.0) * cell_volume();
}

double GridFunction::l2() const {
    return std::sqrt(kernels::block_pow_sum(values.data(), nullptr, size(), 2.0) *
                     cell_volume());
}

double GridFunction::integral() const {
    return kernels::block_sum(values.data(), size()) * cell_volume();
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

template <typename T>
void put(std::FILE* f, const T& v) {
    require(std::fwrite(&v, sizeof(T), 1, f) == 1, "NonFinite", "short write");
}

template <typename T>
T get(std::FILE* f) {
    T v;
    require(std::fread(&v, sizeof(T), 1, f) == 1, "NonFinite", "short read");
    return v;
}

}  // namespace

void write_agf1(const GridFunction& g, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    require(f != nullptr, "NonFinite", "cannot open " + path);
    require(std::fwrite("AGF1", 1, 4, f.get()) == 4, "NonFinite", "short write");
    put<std::uint32_t>(f.get(), static_cast<std::uint32_t>(g.dim()));
    for (int s : g.shape) put<std::uint32_t>(f.get(), static_cast<std::uint32_t>(s));
    for (double L : g.halfwidth) put<double>(f.get(), L);
    put<std::uint8_t>(f.get(), static_cast<std::uint8_t>(g.domain));
    put<std::uint8_t>(f.get(), g.is_complex() ? 1 : 0);
    if (g.is_complex()) {
        for (std::size_t i = 0; i < g.size(); ++i) {
            put<double>(f.get(), g.values[i]);
            put<double>(f.get(), g.imag[i]);
        }
    } else {
        require(std::fwrite(g.values.data(), sizeof(double), g.size(), f.get()) == g.size(),
                "NonFinite", "short write");
    }
}

GridFunction read_agf1(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    require(f != nullptr, "NonFinite", "cannot open " + path);
    char magic[4];
    require(std::fread(magic, 1, 4, f.get()) == 4 && std::memcmp(magic, "AGF1", 4) == 0,
            "NonFinite", "bad AGF1 magic in " + path);
    const auto dim = get<std::uint32_t>(f.get());
    require(dim >= 1 && dim <= 8, "NonFinite", "bad AGF1 dim");
    std::vector<int> shape(dim);
    for (auto& s : shape) s = static_cast<int>(get<std::uint32_t>(f.get()));
    std::vector<double> halfwidth(dim);
    for (auto& L : halfwidth) L = get<double>(f.get());
    const auto dom = static_cast<Domain>(get<std::uint8_t>(f.get()));
    const bool cplx = get<std::uint8_t>(f.get()) != 0;
    GridFunction g(shape, halfwidth, dom);
    if (cplx) {
        g.imag.assign(g.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            g.values[i] = get<double>(f.get());
            g.imag[i] = get<double>(f.get());
        }
    } else {
        require(std::fread(g.values.data(), sizeof(double), g.size(), f.get()) == g.size(),
                "NonFinite", "short read");
    }
    return g;
}

}  // namespace aniso
