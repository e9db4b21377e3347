#pragma once

#include <optional>
#include <string>
#include <vector>

#include "aniso/dilation.hpp"
#include "aniso/grid.hpp"

namespace aniso {

// Positive weight sampled on a grid, with the dilation(s) it is adapted to.
// split = number of leading axes forming factor 1 (== dim for one-parameter).
struct WeightField {
    GridFunction samples;
    Dilation d1;
    std::optional<Dilation> d2;
    int split = 0;
    std::string analytic_tag;  // e.g. "power:alpha=0.5"

    bool product() const { return d2.has_value(); }
};

// Named analytic weight families:
//   "one"                                  w == 1
//   "power:alpha=A"                        rho(x)^A (one-parameter)
//   "powerprod:alpha1=A,alpha2=B"          rho1(x1)^A * rho2(x2)^B
//   "powersum:alpha1=A,alpha2=B"           rho1(x1)^A + rho2(x2)^B
// The origin node (rho = 0) takes the value of a half-cell representative.
WeightField weight_from_spec(const std::string& spec, const GridFunction& grid,
                             const Dilation& d1,
                             const std::optional<Dilation>& d2 = std::nullopt);

struct ApEstimate {
    double p = 0.0;
    double value = 0.0;  // max over sampled (x, k); a lower bound on the constant
    int k_min = 0, k_max = 0;
    int translates = 0;
    int skipped_pairs = 0;                 // (x,k) not fitting the grid box
    std::vector<double> trend;             // cumulative max as k_max grows
    std::vector<double> slice_profile;     // product case: per-slice constants
};

// One-parameter Muckenhoupt constant estimate: max over translate centers x
// and scales k of <w>_{x+B_k} <w^{-1/(p-1)}>_{x+B_k}^{p-1} (p > 1), or
// <w> * max(1/w) on the ball (p = 1). Averages use rasterized-count masks.
ApEstimate ap_constant_estimate(const WeightField& w, double p, int k_min, int k_max,
                                int translates);

// Product constant: max over sampled slices of the one-parameter estimates on
// the other factor, per Definition "C(w) = max{ess sup ...}".
ApEstimate product_ap_estimate(const WeightField& w, double p, int k_min1, int k_max1,
                               int k_min2, int k_max2, int translates);

struct CriticalIndexEstimate {
    double value = 0.0;
    std::string flag = "upper-bracket";
    bool all_stable = false;
    std::vector<double> p_grid;
    std::vector<bool> stable;
};

// Smallest p in p_grid whose estimate is stable (< 10% change) under doubling
// of the scale window. Throws Unstable if no p stabilizes.
CriticalIndexEstimate critical_index_estimate(const WeightField& w,
                                              const std::vector<double>& p_grid,
                                              int k_min, int k_max, int translates);

}  // namespace aniso
