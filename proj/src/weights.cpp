#include "aniso/weights.hpp"

#include <cmath>

#include "aniso/kernels.hpp"

namespace aniso {

namespace {

double parse_param(const std::string& spec, const std::string& key) {
    const auto pos = spec.find(key + "=");
    require(pos != std::string::npos, "NonFinite", "weight spec missing " + key);
    return std::stod(spec.substr(pos + key.size() + 1));
}

// rho with the origin node replaced by a half-cell representative value
double rho_clamped(const Dilation& d, const Eigen::VectorXd& x, double rho_half) {
    if (x.norm() == 0.0) return rho_half;
    return d.quasi_norm(x);
}

double half_cell_rho(const Dilation& d, const GridFunction& g, int axis_offset) {
    Eigen::VectorXd p(d.dim());
    for (int a = 0; a < d.dim(); ++a) p[a] = 0.5 * g.spacing(axis_offset + a);
    return d.quasi_norm(p);
}

}  // namespace

WeightField weight_from_spec(const std::string& spec, const GridFunction& grid,
                             const Dilation& d1, const std::optional<Dilation>& d2) {
    WeightField w{GridFunction::like(grid), d1, d2,
                  d2 ? d1.dim() : grid.dim(), spec};
    require(w.split + (d2 ? d2->dim() : 0) == grid.dim(), "GridMismatch",
            "weight grid does not match dilation dims");

    if (spec == "one") {
        std::fill(w.samples.values.begin(), w.samples.values.end(), 1.0);
        return w;
    }
    if (spec.rfind("power:", 0) == 0) {
        require(!d2, "GridMismatch", "power: is a one-parameter family");
        const double alpha = parse_param(spec, "alpha");
        const double rh = half_cell_rho(d1, grid, 0);
        w.samples.fill([&](const double* x) {
            Eigen::Map<const Eigen::VectorXd> v(x, grid.dim());
            return std::pow(rho_clamped(d1, v, rh), alpha);
        });
        return w;
    }
    if (spec.rfind("powerprod:", 0) == 0 || spec.rfind("powersum:", 0) == 0) {
        require(d2.has_value(), "GridMismatch", "product weight needs two dilations");
        const bool prod = spec.rfind("powerprod:", 0) == 0;
        const double a1 = parse_param(spec, "alpha1");
        const double a2 = parse_param(spec, "alpha2");
        const double rh1 = half_cell_rho(d1, grid, 0);
        const double rh2 = half_cell_rho(*d2, grid, d1.dim());
        const int n1 = d1.dim();
        w.samples.fill([&](const double* x) {
            Eigen::Map<const Eigen::VectorXd> x1(x, n1);
            Eigen::Map<const Eigen::VectorXd> x2(x + n1, grid.dim() - n1);
            const double r1 = std::pow(rho_clamped(d1, x1, rh1), a1);
            const double r2 = std::pow(rho_clamped(*d2, x2, rh2), a2);
            return prod ? r1 * r2 : r1 + r2;
        });
        return w;
    }
    fail("NonFinite", "unknown weight spec: " + spec);
}

namespace {

// Evenly spread lattice of sample indices along each axis.
std::vector<std::vector<int>> translate_lattice(const GridFunction& g, int count) {
    const int dim = g.dim();
    const int per_axis = std::max(1, static_cast<int>(std::round(
                                          std::pow(static_cast<double>(count),
                                                   1.0 / dim))));
    std::vector<std::vector<int>> pts;
    std::vector<int> idx(dim, 0);
    const auto total = static_cast<std::size_t>(std::pow(per_axis, dim));
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t r = f;
        for (int a = dim - 1; a >= 0; --a) {
            const int i = static_cast<int>(r % per_axis);
            r /= per_axis;
            idx[a] = static_cast<int>((i + 0.5) * g.shape[a] / per_axis);
        }
        pts.push_back(idx);
    }
    return pts;
}

struct BallSums {
    double sum_w = 0.0;
    double sum_winv = 0.0;  // w^{-1/(p-1)} for p > 1, max of 1/w for p = 1
    double count = 0.0;
    bool fits = false;
};

// Average sums of w over x + B_k; fits = the bounding box of x + B_k is
// inside the grid box.
BallSums ball_sums(const GridFunction& w, const Dilation& d, double p,
                   const std::vector<int>& center, int k) {
    BallSums s;
    const int dim = w.dim();
    const Eigen::MatrixXd Q = d.ball_form(k);
    const double c = d.ellipsoid_level();
    const Eigen::MatrixXd Qinv = Q.inverse();
    std::vector<int> lo(dim), hi(dim);
    for (int a = 0; a < dim; ++a) {
        const double rad = std::sqrt(std::max(0.0, c * Qinv(a, a)));
        const int ir = static_cast<int>(std::ceil(rad / w.spacing(a)));
        lo[a] = center[a] - ir;
        hi[a] = center[a] + ir;
        if (lo[a] < 0 || hi[a] >= w.shape[a]) return s;  // does not fit
    }
    s.fits = true;
    const bool p1 = p == 1.0;
    std::vector<int> idx = lo;
    Eigen::VectorXd dx(dim);
    while (true) {
        for (int a = 0; a < dim; ++a)
            dx[a] = (idx[a] - center[a]) * w.spacing(a);
        if (dx.dot(Q * dx) < c) {
            std::size_t f = 0;
            for (int a = 0; a < dim; ++a) f = f * w.shape[a] + idx[a];
            const double v = w.values[f];
            s.sum_w += v;
            if (p1)
                s.sum_winv = std::max(s.sum_winv, 1.0 / v);
            else
                s.sum_winv += std::pow(v, -1.0 / (p - 1.0));
            s.count += 1.0;
        }
        int a = dim - 1;
        while (a >= 0 && ++idx[a] > hi[a]) idx[a] = lo[a], --a;
        if (a < 0) break;
    }
    return s;
}

ApEstimate estimate_impl(const GridFunction& samples, const Dilation& d, double p,
                         int k_min, int k_max, int translates) {
    require(p >= 1.0, "NonFinite", "A_p needs p >= 1");
    ApEstimate est;
    est.p = p;
    est.k_min = k_min;
    est.k_max = k_max;
    const auto centers = translate_lattice(samples, translates);
    est.translates = static_cast<int>(centers.size());
    int fitted = 0;
    for (int k = k_min; k <= k_max; ++k) {
        std::vector<double> per_center(centers.size(), 0.0);
        std::vector<char> fit_flags(centers.size(), 0);
        kernels::for_each_index(centers.size(), [&](std::size_t ci) {
            const BallSums s = ball_sums(samples, d, p, centers[ci], k);
            if (!s.fits || s.count == 0.0) return;
            fit_flags[ci] = 1;
            const double avg_w = s.sum_w / s.count;
            const double other =
                p == 1.0 ? s.sum_winv : std::pow(s.sum_winv / s.count, p - 1.0);
            per_center[ci] = avg_w * other;
        });
        double level_max = est.trend.empty() ? 0.0 : est.trend.back();
        for (std::size_t ci = 0; ci < centers.size(); ++ci) {
            if (fit_flags[ci]) {
                ++fitted;
                level_max = std::max(level_max, per_center[ci]);
            } else {
                ++est.skipped_pairs;
            }
        }
        est.trend.push_back(level_max);
    }
    require(fitted > 0, "EmptyWindow", "no (x,k) pair fits the grid");
    est.value = est.trend.back();
    return est;
}

}  // namespace

ApEstimate ap_constant_estimate(const WeightField& w, double p, int k_min, int k_max,
                                int translates) {
    require(!w.product(), "GridMismatch", "use product_ap_estimate for product weights");
    for (double v : w.samples.values)
        require(v > 0.0, "NonPositive", "weight has a nonpositive sample");
    return estimate_impl(w.samples, w.d1, p, k_min, k_max, translates);
}

namespace {

GridFunction slice_field(const GridFunction& g, int split, bool fix_factor1,
                         const std::vector<int>& fixed_idx) {
    const int dim = g.dim();
    std::vector<int> shape, axes;
    std::vector<double> hw;
    for (int a = 0; a < dim; ++a) {
        const bool in_f1 = a < split;
        if (in_f1 != fix_factor1) {
            shape.push_back(g.shape[a]);
            hw.push_back(g.halfwidth[a]);
            axes.push_back(a);
        }
    }
    GridFunction out(shape, hw, Domain::Space);
    std::vector<int> full(dim);
    for (int a = 0, fi = 0; a < dim; ++a) {
        const bool in_f1 = a < split;
        if (in_f1 == fix_factor1) full[a] = fixed_idx[fi++];
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto sub = out.unflat(i);
        for (std::size_t j = 0; j < axes.size(); ++j) full[axes[j]] = sub[j];
        out.values[i] = g.values[g.flat(full)];
    }
    return out;
}

}  // namespace

ApEstimate product_ap_estimate(const WeightField& w, double p, int k_min1, int k_max1,
                               int k_min2, int k_max2, int translates) {
    require(w.product(), "GridMismatch", "product_ap_estimate needs a product weight");
    for (double v : w.samples.values)
        require(v > 0.0, "NonPositive", "weight has a nonpositive sample");

    ApEstimate best;
    best.p = p;
    best.k_min = std::min(k_min1, k_min2);
    best.k_max = std::max(k_max1, k_max2);

    // slices in x1 are weights on factor 2 and vice versa
    GridFunction f1_template = slice_field(w.samples, w.split, false,
                                           std::vector<int>(w.samples.dim() - w.split, 0));
    GridFunction f2_template = slice_field(w.samples, w.split, true,
                                           std::vector<int>(w.split, 0));

    const auto centers1 = translate_lattice(f1_template, translates);
    for (const auto& c1 : centers1) {
        GridFunction sl = slice_field(w.samples, w.split, true, c1);
        const ApEstimate e = estimate_impl(sl, *w.d2, p, k_min2, k_max2, translates);
        best.slice_profile.push_back(e.value);
        best.value = std::max(best.value, e.value);
        best.skipped_pairs += e.skipped_pairs;
    }
    const auto centers2 = translate_lattice(f2_template, translates);
    for (const auto& c2 : centers2) {
        GridFunction sl = slice_field(w.samples, w.split, false, c2);
        const ApEstimate e = estimate_impl(sl, w.d1, p, k_min1, k_max1, translates);
        best.slice_profile.push_back(e.value);
        best.value = std::max(best.value, e.value);
        best.skipped_pairs += e.skipped_pairs;
    }
    best.translates = static_cast<int>(centers1.size() + centers2.size());
    best.trend.push_back(best.value);
    return best;
}

CriticalIndexEstimate critical_index_estimate(const WeightField& w,
                                              const std::vector<double>& p_grid,
                                              int k_min, int k_max, int translates) {
    require(!p_grid.empty(), "NonFinite", "empty p grid");
    for (std::size_t i = 0; i + 1 < p_grid.size(); ++i)
        require(p_grid[i] < p_grid[i + 1] && p_grid[i] > 1.0, "NonFinite",
                "p_grid must be sorted, all > 1");

    CriticalIndexEstimate out;
    out.p_grid = p_grid;
    const int k_half = k_min + (k_max - k_min) / 2;
    bool found = false;
    for (double p : p_grid) {
        double e1, e2;
        if (!w.product()) {
            e1 = ap_constant_estimate(w, p, k_min, k_half, translates).value;
            e2 = ap_constant_estimate(w, p, k_min, k_max, translates).value;
        } else {
            e1 = product_ap_estimate(w, p, k_min, k_half, k_min, k_half, translates).value;
            e2 = product_ap_estimate(w, p, k_min, k_max, k_min, k_max, translates).value;
        }
        const bool stable = std::fabs(e2 - e1) < 0.10 * e1;
        out.stable.push_back(stable);
        if (stable && !found) {
            out.value = p;
            found = true;
        }
    }
    require(found, "Unstable", "no p in the grid stabilizes under window doubling");
    out.all_stable = true;
    for (bool s : out.stable) out.all_stable = out.all_stable && s;
    return out;
}

}  // namespace aniso
