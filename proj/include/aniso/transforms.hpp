#pragma once

#include <functional>
#include <map>
#include <optional>

#include "aniso/calderon.hpp"
#include "aniso/dilation.hpp"
#include "aniso/fft.hpp"
#include "aniso/grid.hpp"

namespace aniso {

struct ScaleWindow {
    int lo = 0, hi = 0;
    int size() const { return hi - lo + 1; }
};

// Materialized coefficient family f*phi_k (one-parameter) or f*phi_{k1,k2}
// (product). Streaming pipelines below avoid materializing it for big runs.
struct ScaleDecomposition {
    GridFunction grid;  // template (values unused)
    bool product = false;
    ScaleWindow w1, w2;
    std::vector<GridFunction> coeffs;  // row-major over (k1, k2)
    double truncation_energy_fraction = 0.0;

    const GridFunction& at(int k1) const { return coeffs[k1 - w1.lo]; }
    const GridFunction& at(int k1, int k2) const {
        return coeffs[(k1 - w1.lo) * w2.size() + (k2 - w2.lo)];
    }
};

using CoeffSource = std::function<GridFunction(int k1, int k2)>;

// phi_k(x) = b^-k phi(A^-k x) by multilinear resampling. Integral-preserving
// up to quadrature. Resolution warnings reported through the optional sink.
GridFunction dilate_kernel(const GridFunction& phi, const Dilation& d, int k,
                           std::string* warning = nullptr);

// f * phi_k via the pair's analytic spectral multiplier (exact dilation).
GridFunction scale_coefficient(const GridFunction& f, const CalderonPair& p, int k);
GridFunction scale_coefficient_product(const GridFunction& f, const CalderonPair& p1,
                                       const CalderonPair& p2, int k1, int k2);

ScaleDecomposition decompose_scales(const GridFunction& f, const CalderonPair& p,
                                    ScaleWindow w);
ScaleDecomposition decompose_scales_product(const GridFunction& f, const CalderonPair& p1,
                                            const CalderonPair& p2, ScaleWindow w1,
                                            ScaleWindow w2);

// Caches rasterized ball-indicator spectra across scales; one instance per
// (grid, dilation pair). split = number of leading axes belonging to factor 1;
// split == dim means a single factor.
class BallAverager {
public:
    BallAverager(const GridFunction& like, Dilation d1, std::optional<Dilation> d2,
                 int split);

    // Pointwise average of `field` over the translated ball (product of balls):
    // (1/#B) sum_{y in B_k1 x B_k2} field(x - y), periodic.
    GridFunction average(const GridFunction& field, int k1, int k2 = 0);

    // Index radii of the rasterized factor balls (for max-pooling footprints).
    std::vector<int> index_radii(int which_factor, int k) const;

private:
    const fftutil::cvec& kernel_spectrum(int k1, int k2);

    GridFunction like_;
    Dilation d1_;
    std::optional<Dilation> d2_;
    int split_;
    std::map<std::pair<int, int>, fftutil::cvec> cache_;
};

// Littlewood-Paley g-function: pointwise l2 over scales of f*phi_k.
GridFunction g_function(const GridFunction& f, const CalderonPair& p, ScaleWindow w);
GridFunction g_function_product(const GridFunction& f, const CalderonPair& p1,
                                const CalderonPair& p2, ScaleWindow w1, ScaleWindow w2);

// Lusin area function: ball-averaged l2 over scales.
GridFunction area_function(const GridFunction& f, const CalderonPair& p, ScaleWindow w);
GridFunction area_function_product(const GridFunction& f, const CalderonPair& p1,
                                   const CalderonPair& p2, ScaleWindow w1, ScaleWindow w2);

// H-norm of an arbitrary doubly indexed coefficient family (streamed).
GridFunction h_norm_field(const GridFunction& like, const Dilation& d1, const Dilation& d2,
                          ScaleWindow w1, ScaleWindow w2, const CoeffSource& src);
GridFunction h_norm_field(const ScaleDecomposition& coeffs, const Dilation& d1,
                          const Dilation& d2);

// Strong maximal function over products of dilated balls at window scales.
GridFunction strong_maximal(const GridFunction& f, const Dilation& d1, const Dilation& d2,
                            ScaleWindow w);

// (sum |f|^p w h^n)^(1/p); w == nullptr means w == 1.
double lebesgue_norm(const GridFunction& f, double p, const GridFunction* w = nullptr);

// Fraction of spectral energy of f outside the window's partition coverage.
double truncation_energy_fraction(const GridFunction& f, const CalderonPair& p,
                                  ScaleWindow w);
double truncation_energy_fraction_product(const GridFunction& f, const CalderonPair& p1,
                                          const CalderonPair& p2, ScaleWindow w1,
                                          ScaleWindow w2);

// Periodic max-pool of `field` along `axis` with index offsets in [-r, r].
GridFunction sliding_max_axis(const GridFunction& field, int axis, int r);

}  // namespace aniso
