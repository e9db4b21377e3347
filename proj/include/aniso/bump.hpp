#pragma once

#include <functional>
#include <optional>

#include "aniso/dilation.hpp"
#include "aniso/grid.hpp"

namespace aniso {

using PointEval = std::function<double(const Eigen::VectorXd&)>;

// Smooth cutoff adapted to a dilation: 1 on B_{-1}, 0 outside B_0, a C-inf
// falling step in the Lyapunov form level. Note a height-1 cutoff on a
// unit-volume ellipsoid necessarily has slope > 1 in low dimensions; the
// measured derivative bounds are reported and absorbed into the bump
// normalization constant downstream.
class CutoffTheta {
public:
    explicit CutoffTheta(const Dilation& d);

    double value(const Eigen::VectorXd& x) const;
    // theta(A^-k x)
    double value_scaled(const Eigen::VectorXd& x, int k) const;
    double inner_level() const { return c_mid_; }
    // analytic bound on max |grad theta| (profile oracle)
    double slope_bound() const;

    GridFunction sample(const GridFunction& like) const;

private:
    Dilation d_;
    double c_mid_ = 0.0;
};

GridFunction make_cutoff_theta(const Dilation& d, int bump_order, const GridFunction& like);

struct BumpReport {
    bool ok = false;
    double worst_derivative = 0.0;   // sup over |alpha| <= N of |d^a [f(A^k.)]|
    double support_leak = 0.0;       // max |f| outside B_k relative to max |f|
    bool support_violation = false;
    bool derivative_uncertain = false;  // refinement changed the value > 1%
};

// Checks supp f subset B_k and the rescaled derivative bounds of Definition
// "N-normalized bump". With an analytic evaluator, order-4 centered finite
// differences; otherwise spectral derivatives of the sampled field.
BumpReport is_normalized_bump(const GridFunction& f, const Dilation& d, int bump_order,
                              int k, const PointEval& eval = nullptr);

struct BumpTermAudit {
    double d_k = 0.0;
    double s_k = 0.0;
    double mean_residual = 0.0;      // |int term| / ||term||_L1
    double support_leak = 0.0;
    double worst_chart_derivative = 0.0;
};

struct BumpDecomposition {
    double M = 0.0;
    int bump_order = 0;
    int k_max = 0;
    double c = 0.0;                    // measured uniform bump constant
    double reconstruction_error = 0.0; // sup |sum b^-kM psi_k - psi| / sup |psi|
    double tail_bound = 0.0;           // certified bound on the dropped tail
    GridFunction theta;
    std::vector<GridFunction> terms;   // psi^(k) = b^{Mk} D~_k
    std::vector<GridFunction> raw;     // D_k before corrections
    std::vector<double> d;             // d_k = int D_k
    std::vector<double> s;             // s_k = sum_{j<k} d_j
    std::vector<BumpTermAudit> audit;
};

// Telescoping decomposition psi = sum_k b^{-kM} psi^(k) with each term a
// constant multiple of an N-normalized bump on B_k; the mean-zero correction
// uses grid-exactly normalized dilates of theta.
BumpDecomposition decompose_bump(const GridFunction& psi, const Dilation& d, double M,
                                 int bump_order, int k_max);

// sup over a chart lattice of |d^alpha [f(A^k .)]| over all |alpha| <= order,
// order-4 centered differences of the analytic evaluator.
double bump_chart_sup(const PointEval& f, const Dilation& d, int k, int order,
                      double fd_step = 1e-2, int per_axis = 65);

struct Bump {
    PointEval eval;
    std::string name;
    int order = 0;
    double worst_derivative = 0.0;
};

// Small family of validated N-normalized bumps on B_0 (even, odd, offset),
// amplitudes scaled so the measured derivative sup is 0.95.
std::vector<Bump> standard_bump_set(const Dilation& d, int bump_order);

}  // namespace aniso
