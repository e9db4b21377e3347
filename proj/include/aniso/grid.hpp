#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "aniso/common.hpp"

namespace aniso {

enum class Domain : std::uint8_t { Space = 0, Frequency = 1 };

// Scalar field sampled on a uniform grid over a centered box: axis i has
// shape[i] points (a power of two), halfwidth L_i, spacing h_i = 2L_i/N_i,
// coordinate x_j = -L_i + j h_i. Row-major storage. Optionally complex
// (imag non-empty). The universal function representation of the library.
struct GridFunction {
    std::vector<int> shape;
    std::vector<double> halfwidth;
    Domain domain = Domain::Space;
    std::vector<double> values;
    std::vector<double> imag;  // empty for real fields

    GridFunction() = default;
    GridFunction(std::vector<int> shape_, std::vector<double> halfwidth_,
                 Domain dom = Domain::Space);

    int dim() const { return static_cast<int>(shape.size()); }
    std::size_t size() const { return values.size(); }
    bool is_complex() const { return !imag.empty(); }
    double spacing(int axis) const { return 2.0 * halfwidth[axis] / shape[axis]; }
    double cell_volume() const;
    double coord(int axis, int index) const {
        return -halfwidth[axis] + spacing(axis) * index;
    }

    // Row-major index arithmetic.
    std::size_t flat(const std::vector<int>& idx) const;
    std::vector<int> unflat(std::size_t flat_index) const;
    void point_at(std::size_t flat_index, double* x) const;

    // Nearest grid index of a coordinate per axis (rounds, unclamped).
    int nearest_index(int axis, double x) const;

    bool same_grid(const GridFunction& other) const;

    // Fill from a pointwise evaluator f(x), x of length dim(). Parallel.
    void fill(const std::function<double(const double*)>& f);

    // Multilinear interpolation at an arbitrary point; zero outside the box.
    double interpolate(const double* x) const;

    double max_abs() const;
    double l1() const;  // sum |f| h^n
    double l2() const;  // (sum |f|^2 h^n)^1/2
    double integral() const;

    static GridFunction like(const GridFunction& g) {
        return GridFunction(g.shape, g.halfwidth, g.domain);
    }
};

// AGF1 binary format: magic "AGF1", u32 dim, u32 N per axis, f64 L per axis,
// u8 domain tag, u8 complex flag, then raw little-endian doubles (complex
// interleaved re,im).
void write_agf1(const GridFunction& g, const std::string& path);
GridFunction read_agf1(const std::string& path);

}  // namespace aniso
