#include "aniso/bump.hpp"

#include <cmath>

#include "aniso/fft.hpp"
#include "aniso/kernels.hpp"

namespace aniso {

namespace {

double falling_step(double u) {
    // C-inf, 1 for u <= 0, 0 for u >= 1
    if (u <= 0.0) return 1.0;
    if (u >= 1.0) return 0.0;
    const double a = std::exp(-1.0 / (1.0 - u));
    const double b = std::exp(-1.0 / u);
    return a / (a + b);
}

// max |d/du| of falling_step (evaluated once by a fine scan)
double falling_step_max_slope() {
    static const double slope = [] {
        double worst = 0.0;
        const int n = 20000;
        for (int i = 1; i < n; ++i) {
            const double u = static_cast<double>(i) / n;
            const double h = 0.5 / n;
            worst = std::max(worst,
                             std::fabs(falling_step(u + h) - falling_step(u - h)) / (2 * h));
        }
        return worst;
    }();
    return slope;
}

}  // namespace

CutoffTheta::CutoffTheta(const Dilation& d) : d_(d) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d.ellipsoid_form());
    const double pmax = es.eigenvalues().maxCoeff();
    // B_{-1} subset {x'Px <= c (1 - 1/lmax(P))} subset B_0
    c_mid_ = d.ellipsoid_level() * (1.0 - 1.0 / pmax);
}

double CutoffTheta::value(const Eigen::VectorXd& x) const {
    const double v = x.dot(d_.ellipsoid_form() * x);
    return falling_step((v - c_mid_) / (d_.ellipsoid_level() - c_mid_));
}

double CutoffTheta::value_scaled(const Eigen::VectorXd& x, int k) const {
    const double v = d_.level_form(x, k);
    return falling_step((v - c_mid_) / (d_.ellipsoid_level() - c_mid_));
}

double CutoffTheta::slope_bound() const {
    // |grad theta| = step'(u) |2Px| / (c - c_mid), |2Px| <= 2 sqrt(lmax(P) v)
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(d_.ellipsoid_form());
    const double pmax = es.eigenvalues().maxCoeff();
    const double c = d_.ellipsoid_level();
    return falling_step_max_slope() * 2.0 * std::sqrt(pmax * c) / (c - c_mid_);
}

GridFunction CutoffTheta::sample(const GridFunction& like) const {
    GridFunction out = GridFunction::like(like);
    const int n = d_.dim();
    out.fill([&](const double* x) {
        Eigen::Map<const Eigen::VectorXd> v(x, n);
        return value(v);
    });
    return out;
}

GridFunction make_cutoff_theta(const Dilation& d, int /*bump_order*/,
                               const GridFunction& like) {
    return CutoffTheta(d).sample(like);
}

namespace {

// ---- derivative machinery ------------------------------------------------

// chart sample points: lattice over the bounding box of B_0, slightly enlarged
std::vector<Eigen::VectorXd> chart_points(const Dilation& d, int per_axis) {
    const Eigen::MatrixXd Pinv = d.ellipsoid_form().inverse();
    const double c = d.ellipsoid_level();
    const int n = d.dim();
    std::vector<double> ext(n);
    for (int a = 0; a < n; ++a) ext[a] = 1.05 * std::sqrt(c * Pinv(a, a));
    std::vector<Eigen::VectorXd> pts;
    std::vector<int> idx(n, 0);
    while (true) {
        Eigen::VectorXd x(n);
        for (int a = 0; a < n; ++a)
            x[a] = -ext[a] + 2.0 * ext[a] * idx[a] / (per_axis - 1);
        pts.push_back(x);
        int a = n - 1;
        while (a >= 0 && ++idx[a] >= per_axis) idx[a] = 0, --a;
        if (a < 0) break;
    }
    return pts;
}

// order-4 centered first-difference along axis `a` of a point evaluator
double fd1(const PointEval& g, const Eigen::VectorXd& x, int a, double h) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e[a] = 1.0;
    return (-g(x + 2 * h * e) + 8.0 * g(x + h * e) - 8.0 * g(x - h * e) +
            g(x - 2 * h * e)) /
           (12.0 * h);
}

// nested order-4 stencils for a mixed partial given by an axis sequence
double fd_mixed(const PointEval& g, const Eigen::VectorXd& x,
                const std::vector<int>& axes, std::size_t pos, double h) {
    if (pos == axes.size()) return g(x);
    const PointEval inner = [&](const Eigen::VectorXd& y) {
        return fd_mixed(g, y, axes, pos + 1, h);
    };
    return fd1(inner, x, axes[pos], h);
}

std::vector<int> alpha_to_axes(const std::vector<int>& alpha) {
    std::vector<int> axes;
    for (std::size_t a = 0; a < alpha.size(); ++a)
        for (int i = 0; i < alpha[a]; ++i) axes.push_back(static_cast<int>(a));
    return axes;
}

// sup over chart points of |d^alpha [f(A^k .)]| for all |alpha| <= order,
// using analytic finite differences
double chart_sup_analytic(const PointEval& f, const Dilation& d, int k, int order,
                          double fd_h, int per_axis) {
    const auto pts = chart_points(d, per_axis);
    const auto alphas = multi_indices_up_to(d.dim(), order);
    const PointEval g = [&](const Eigen::VectorXd& u) { return f(d.pow_apply(k, u)); };
    std::vector<double> worst_per(pts.size(), 0.0);
    kernels::for_each_index(pts.size(), [&](std::size_t i) {
        double w = 0.0;
        for (const auto& alpha : alphas) {
            const auto axes = alpha_to_axes(alpha);
            const double v = axes.empty() ? g(pts[i]) : fd_mixed(g, pts[i], axes, 0, fd_h);
            w = std::max(w, std::fabs(v));
        }
        worst_per[i] = w;
    });
    return kernels::block_max_abs(worst_per.data(), worst_per.size());
}

// spectral derivative fields d^beta f for all |beta| <= order
std::vector<GridFunction> spectral_derivatives(const GridFunction& f, int order,
                                               std::vector<std::vector<int>>* betas_out) {
    const auto betas = multi_indices_up_to(f.dim(), order);
    if (betas_out) *betas_out = betas;
    const fftutil::cvec F = fftutil::analyze(f);
    GridFunction freq(f.shape, fftutil::dual_halfwidth(f), Domain::Frequency);
    std::vector<GridFunction> out;
    for (const auto& beta : betas) {
        fftutil::cvec D(F.size());
        kernels::for_each_index(F.size(), [&](std::size_t i) {
            double xi[8];
            freq.point_at(i, xi);
            std::complex<double> m(1.0, 0.0);
            for (int a = 0; a < f.dim(); ++a)
                for (int p = 0; p < beta[a]; ++p) m *= std::complex<double>(0.0, xi[a]);
            D[i] = F[i] * m;
        });
        out.push_back(fftutil::synthesize(f, D));
    }
    return out;
}

// chain-rule coefficients: d^alpha [f o A](u) = sum_beta coef(beta) d^beta f(Au)
// where the sum runs over axis sequences (b_1..b_m) with histogram beta
void chain_rule_accumulate(const Eigen::MatrixXd& Ak, const std::vector<int>& axes,
                           std::size_t pos, std::vector<int>& hist, double coef,
                           std::vector<std::pair<std::vector<int>, double>>& out) {
    const int n = static_cast<int>(Ak.rows());
    if (pos == axes.size()) {
        for (auto& [b, c] : out)
            if (b == hist) {
                c += coef;
                return;
            }
        out.emplace_back(hist, coef);
        return;
    }
    for (int b = 0; b < n; ++b) {
        ++hist[b];
        chain_rule_accumulate(Ak, axes, pos + 1, hist, coef * Ak(b, axes[pos]), out);
        --hist[b];
    }
}

double chart_sup_spectral(const GridFunction& f, const Dilation& d, int k, int order,
                          int per_axis) {
    std::vector<std::vector<int>> betas;
    const auto dfields = spectral_derivatives(f, order, &betas);
    Eigen::MatrixXd Ak = Eigen::MatrixXd::Identity(d.dim(), d.dim());
    const Eigen::MatrixXd& S = k >= 0 ? d.matrix() : d.inverse();
    for (int i = 0; i < std::abs(k); ++i) Ak = S * Ak;

    const auto pts = chart_points(d, per_axis);
    const auto alphas = multi_indices_up_to(d.dim(), order);

    // precompute chain-rule expansion per alpha
    std::vector<std::vector<std::pair<std::size_t, double>>> expansions;
    for (const auto& alpha : alphas) {
        const auto axes = alpha_to_axes(alpha);
        std::vector<std::pair<std::vector<int>, double>> raw;
        std::vector<int> hist(d.dim(), 0);
        chain_rule_accumulate(Ak, axes, 0, hist, 1.0, raw);
        std::vector<std::pair<std::size_t, double>> exp;
        for (const auto& [beta, coef] : raw) {
            for (std::size_t bi = 0; bi < betas.size(); ++bi)
                if (betas[bi] == beta) {
                    exp.emplace_back(bi, coef);
                    break;
                }
        }
        expansions.push_back(std::move(exp));
    }

    std::vector<double> worst_per(pts.size(), 0.0);
    kernels::for_each_index(pts.size(), [&](std::size_t i) {
        const Eigen::VectorXd y = Ak * pts[i];
        double w = 0.0;
        for (const auto& exp : expansions) {
            double v = 0.0;
            for (const auto& [bi, coef] : exp) v += coef * dfields[bi].interpolate(y.data());
            w = std::max(w, std::fabs(v));
        }
        worst_per[i] = w;
    });
    return kernels::block_max_abs(worst_per.data(), worst_per.size());
}

double support_leak(const GridFunction& f, const Dilation& d, int k) {
    const double mx = f.max_abs();
    if (mx == 0.0) return 0.0;
    const Eigen::MatrixXd Q = d.ball_form(k);
    const double c = d.ellipsoid_level();
    std::vector<double> leak(f.size(), 0.0);
    kernels::for_each_index(f.size(), [&](std::size_t i) {
        double x[8];
        f.point_at(i, x);
        Eigen::Map<const Eigen::VectorXd> v(x, f.dim());
        if (v.dot(Q * v) >= c) leak[i] = std::fabs(f.values[i]);
    });
    return kernels::block_max_abs(leak.data(), leak.size()) / mx;
}

}  // namespace

BumpReport is_normalized_bump(const GridFunction& f, const Dilation& d, int bump_order,
                              int k, const PointEval& eval) {
    BumpReport rep;
    rep.support_leak = support_leak(f, d, k);
    rep.support_violation = rep.support_leak > 1e-12;

    const int per_axis = d.dim() == 1 ? 129 : 33;
    if (eval) {
        const double h = 1e-2;
        rep.worst_derivative = chart_sup_analytic(eval, d, k, bump_order, h, per_axis);
        const double again = chart_sup_analytic(eval, d, k, bump_order, h / 2, per_axis);
        rep.derivative_uncertain =
            std::fabs(again - rep.worst_derivative) > 0.01 * std::max(1e-30, rep.worst_derivative);
        rep.worst_derivative = std::max(rep.worst_derivative, again);
    } else {
        rep.worst_derivative = chart_sup_spectral(f, d, k, bump_order, per_axis);
        const double again = chart_sup_spectral(f, d, k, bump_order, 2 * per_axis - 1);
        rep.derivative_uncertain =
            std::fabs(again - rep.worst_derivative) > 0.01 * std::max(1e-30, rep.worst_derivative);
        rep.worst_derivative = std::max(rep.worst_derivative, again);
    }
    rep.ok = !rep.support_violation && rep.worst_derivative <= 1.0 + 1e-9;
    return rep;
}

BumpDecomposition decompose_bump(const GridFunction& psi, const Dilation& d, double M,
                                 int bump_order, int k_max) {
    require(M > 0.0, "NonFinite", "decomposition exponent M must be positive");
    require(k_max >= 1, "NonFinite", "k_max >= 1");
    const double l1 = psi.l1();
    require(l1 > 0.0, "NotMeanZero", "psi vanishes identically");
    const double mean = psi.integral();
    require(std::fabs(mean) <= 1e-8 * l1, "NotMeanZero",
            "int psi = " + std::to_string(mean) + " exceeds tolerance");

    // tail of |psi| outside B_{k_max - 1}
    {
        const Eigen::MatrixXd Q = d.ball_form(k_max - 1);
        const double c = d.ellipsoid_level();
        std::vector<double> tail(psi.size(), 0.0);
        kernels::for_each_index(psi.size(), [&](std::size_t i) {
            double x[8];
            psi.point_at(i, x);
            Eigen::Map<const Eigen::VectorXd> v(x, psi.dim());
            if (v.dot(Q * v) >= c) tail[i] = std::fabs(psi.values[i]);
        });
        const double tmass = kernels::block_sum(tail.data(), tail.size()) * psi.cell_volume();
        require(tmass <= 1e-10 * l1, "TailTooHeavy",
                "psi mass outside B_{k_max-1} is " + std::to_string(tmass / l1) +
                    " of ||psi||_1");
    }

    const CutoffTheta theta(d);
    const double b = d.det_abs();
    const int n = psi.dim();

    BumpDecomposition dec;
    dec.M = M;
    dec.bump_order = bump_order;
    dec.k_max = k_max;
    dec.theta = theta.sample(psi);

    // theta(A^-k x) fields and their grid-exact normalizations T_k
    std::vector<GridFunction> theta_k(k_max + 1, GridFunction::like(psi));
    std::vector<GridFunction> T(k_max + 1, GridFunction::like(psi));
    std::vector<double> I(k_max + 1, 0.0);
    for (int k = 0; k <= k_max; ++k) {
        theta_k[k].fill([&](const double* x) {
            Eigen::Map<const Eigen::VectorXd> v(x, n);
            return theta.value_scaled(v, k);
        });
        GridFunction scaled = theta_k[k];
        kernels::scale(scaled.values.data(), scaled.size(), std::pow(b, -k));
        I[k] = scaled.integral();
        require(I[k] > 0.0, "ResolutionTooCoarse", "cutoff not resolved at scale k");
        kernels::scale(scaled.values.data(), scaled.size(), 1.0 / I[k]);
        T[k] = std::move(scaled);  // int T_k = 1 exactly on the grid
    }

    // raw pieces D_k and their means
    dec.raw.reserve(k_max + 1);
    for (int k = 0; k <= k_max; ++k) {
        GridFunction D = GridFunction::like(psi);
        kernels::for_each_index(D.size(), [&](std::size_t i) {
            const double cut = k == 0 ? theta_k[0].values[i]
                                      : theta_k[k].values[i] - theta_k[k - 1].values[i];
            D.values[i] = psi.values[i] * cut;
        });
        dec.raw.push_back(std::move(D));
        dec.d.push_back(dec.raw.back().integral());
        dec.s.push_back(dec.s.empty() ? 0.0 : dec.s.back() + dec.d[dec.d.size() - 2]);
    }

    // corrected terms psi^(k) = b^{Mk} (D_k - d_k T_k + s_k (T_{k-1} - T_k))
    for (int k = 0; k <= k_max; ++k) {
        GridFunction term = dec.raw[k];
        kernels::axpy(term.values.data(), T[k].values.data(), term.size(), -dec.d[k]);
        if (k >= 1) {
            kernels::axpy(term.values.data(), T[k - 1].values.data(), term.size(), dec.s[k]);
            kernels::axpy(term.values.data(), T[k].values.data(), term.size(), -dec.s[k]);
        }
        kernels::scale(term.values.data(), term.size(), std::pow(b, M * k));
        dec.terms.push_back(std::move(term));
    }

    // audits and the uniform constant c
    double worst = 0.0;
    for (int k = 0; k <= k_max; ++k) {
        BumpTermAudit a;
        a.d_k = dec.d[k];
        a.s_k = dec.s[k];
        const double tl1 = dec.terms[k].l1();
        a.mean_residual = tl1 > 0.0 ? std::fabs(dec.terms[k].integral()) / tl1 : 0.0;
        a.support_leak = support_leak(dec.terms[k], d, k);
        a.worst_chart_derivative =
            dec.terms[k].max_abs() == 0.0
                ? 0.0
                : chart_sup_spectral(dec.terms[k], d, k, bump_order, n == 1 ? 129 : 33);
        worst = std::max(worst, a.worst_chart_derivative);
        dec.audit.push_back(a);
    }
    dec.c = worst;

    // reconstruction residual
    GridFunction rec = GridFunction::like(psi);
    for (int k = 0; k <= k_max; ++k)
        kernels::axpy(rec.values.data(), dec.terms[k].values.data(), rec.size(),
                      std::pow(b, -M * k));
    std::vector<double> diff(rec.size());
    kernels::for_each_index(rec.size(), [&](std::size_t i) {
        diff[i] = rec.values[i] - psi.values[i];
    });
    dec.reconstruction_error = kernels::block_max_abs(diff.data(), diff.size());

    // certified tail: |sum_{k > k_max}| <= C b^{-(k_max+1)M} / (1 - b^-M)
    double fitted_c = 0.0;
    for (int k = 1; k <= k_max; ++k)
        fitted_c = std::max(fitted_c, dec.terms[k].max_abs());
    dec.tail_bound = fitted_c * std::pow(b, -(k_max + 1) * M) / (1.0 - std::pow(b, -M));
    return dec;
}

double bump_chart_sup(const PointEval& f, const Dilation& d, int k, int order,
                      double fd_step, int per_axis) {
    return chart_sup_analytic(f, d, k, order, fd_step, per_axis);
}

std::vector<Bump> standard_bump_set(const Dilation& d, int bump_order) {
    const CutoffTheta theta(d);
    const int n = d.dim();
    // pedestal profile: 1 at the center, 0 outside B_0 (same as the cutoff)
    const PointEval pedestal = [theta](const Eigen::VectorXd& x) { return theta.value(x); };
    const double off = 0.1 * std::sqrt(d.ellipsoid_level());

    std::vector<std::pair<std::string, PointEval>> shapes;
    shapes.emplace_back("even", pedestal);
    shapes.emplace_back("odd", [theta](const Eigen::VectorXd& x) {
        return x[0] * theta.value(x);
    });
    shapes.emplace_back("offset", [theta, off, n](const Eigen::VectorXd& x) {
        Eigen::VectorXd y = x;
        y[0] -= off;
        return theta.value(x) * theta.value(y);
    });

    std::vector<Bump> out;
    for (auto& [name, shape] : shapes) {
        const double sup = bump_chart_sup(shape, d, 0, bump_order);
        const double amp = 0.95 / sup;
        Bump b;
        b.name = name;
        b.order = bump_order;
        b.eval = [shape, amp](const Eigen::VectorXd& x) { return amp * shape(x); };
        b.worst_derivative = 0.95;
        out.push_back(std::move(b));
    }
    return out;
}

}  // namespace aniso
