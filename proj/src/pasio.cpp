#include "aniso/pasio.hpp"

#include <cmath>
#include <limits>
#include <mutex>
#include <unordered_map>

#include "aniso/fft.hpp"
#include "aniso/kernels.hpp"

namespace aniso {

namespace {

// midpoint lattice over the bounding box of B_j; never hits coordinate zero
struct BoxQuad {
    std::vector<double> ext;  // half-extent per axis
    int per_axis = 0;
    int dim = 0;

    BoxQuad(const Dilation& d, int j, int per_axis_) : per_axis(per_axis_), dim(d.dim()) {
        const Eigen::MatrixXd Q = d.ball_form(j);
        const Eigen::MatrixXd Qinv = Q.inverse();
        ext.resize(dim);
        for (int a = 0; a < dim; ++a)
            ext[a] = std::sqrt(std::max(0.0, d.ellipsoid_level() * Qinv(a, a)));
    }

    std::size_t size() const {
        std::size_t s = 1;
        for (int a = 0; a < dim; ++a) s *= static_cast<std::size_t>(per_axis);
        return s;
    }

    double cell() const {
        double c = 1.0;
        for (int a = 0; a < dim; ++a) c *= 2.0 * ext[a] / per_axis;
        return c;
    }

    Eigen::VectorXd point(std::size_t f) const {
        Eigen::VectorXd x(dim);
        for (int a = dim - 1; a >= 0; --a) {
            const int i = static_cast<int>(f % per_axis);
            f /= per_axis;
            x[a] = -ext[a] + (i + 0.5) * (2.0 * ext[a] / per_axis);
        }
        return x;
    }
};

// nodes of a factor quadrature weighted by a bump, with their shell indices
struct FactorNodes {
    std::vector<Eigen::VectorXd> pts;
    std::vector<double> weight;  // bump * cell
    std::vector<int> shell;
    int shell_max = 0;
};

FactorNodes bump_nodes(const Dilation& d, const Bump& bump, int support_level,
                       int per_axis) {
    BoxQuad q(d, support_level, per_axis);
    FactorNodes out;
    out.shell_max = std::numeric_limits<int>::min();
    const double cell = q.cell();
    for (std::size_t i = 0; i < q.size(); ++i) {
        const Eigen::VectorXd u = q.point(i);
        const double v = bump.eval(u);
        if (v == 0.0) continue;
        out.pts.push_back(u);
        out.weight.push_back(v * cell);
        const int s = d.shell_index(u);
        out.shell.push_back(s);
        out.shell_max = std::max(out.shell_max, s);
    }
    require(!out.pts.empty(), "ResolutionTooCoarse", "bump quadrature has no nodes");
    return out;
}

// Cauchy analysis of a PV ladder of binned contributions. bins[m] holds the
// contribution at truncation depth m; partial(m) = sum_{j<=m} bins[j].
struct LadderResult {
    double value = 0.0;
    double max_ratio = 0.0;
    std::vector<double> partial;
    bool convergent = true;
};

LadderResult analyze_ladder(const std::vector<double>& bins) {
    LadderResult r;
    double acc = 0.0;
    for (double b : bins) {
        acc += b;
        r.partial.push_back(acc);
    }
    r.value = acc;
    std::vector<double> gaps;
    for (std::size_t m = 1; m < bins.size(); ++m) gaps.push_back(std::fabs(bins[m]));
    double gmax = 0.0;
    for (double g : gaps) gmax = std::max(gmax, g);
    if (gmax == 0.0) return r;  // nothing beyond rung 0: trivially convergent
    const double floor = std::max(1e-13 * std::fabs(acc), 1e-13 * gmax);
    int streak = 0;
    for (std::size_t m = 1; m + 1 < gaps.size(); ++m) {
        if (gaps[m] <= floor && gaps[m + 1] <= floor) break;
        if (gaps[m] > floor) {
            const double ratio = gaps[m + 1] / gaps[m];
            r.max_ratio = std::max(r.max_ratio, ratio);
            if (ratio >= 0.95)
                ++streak;
            else
                streak = 0;
            if (streak >= 3) r.convergent = false;
        }
    }
    return r;
}

Eigen::VectorXd concat(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    Eigen::VectorXd out(a.size() + b.size());
    out << a, b;
    return out;
}

// order-4 centered mixed partial of a callable via nested stencils
double fd_mixed_eval(const std::function<double(const Eigen::VectorXd&)>& g,
                     const Eigen::VectorXd& x, const std::vector<int>& axes,
                     std::size_t pos, double h) {
    if (pos == axes.size()) return g(x);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
    e[axes[pos]] = 1.0;
    auto at = [&](double off) {
        return fd_mixed_eval(g, x + off * e, axes, pos + 1, h);
    };
    return (-at(2 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2 * h)) / (12.0 * h);
}

std::vector<int> axes_of(const std::vector<int>& alpha, int offset) {
    std::vector<int> axes;
    for (std::size_t a = 0; a < alpha.size(); ++a)
        for (int i = 0; i < alpha[a]; ++i) axes.push_back(offset + static_cast<int>(a));
    return axes;
}

double chart_radius(const Dilation& d) {
    const Eigen::MatrixXd Qinv = d.ball_form(1).inverse();
    double r = 0.0;
    for (int a = 0; a < d.dim(); ++a)
        r = std::max(r, std::sqrt(std::max(0.0, d.ellipsoid_level() * Qinv(a, a))));
    return r;
}

}  // namespace

// -------------------------------------------------------------- factories

KernelModel make_tensor_cz_kernel(const Dilation& d1, const Dilation& d2,
                                  const ProfileEval& profile1, const ProfileEval& profile2,
                                  const std::string& family_tag, int declared_s1,
                                  int declared_s2, bool continuous_norm) {
    // validate the profiles: dilation-periodic and shell-mean-zero
    for (int which = 0; which < 2; ++which) {
        const Dilation& d = which == 0 ? d1 : d2;
        const ProfileEval& p = which == 0 ? profile1 : profile2;
        std::mt19937_64 rng(0xabcdef12 + which);
        for (int i = 0; i < 200; ++i) {
            const Eigen::VectorXd x = d.sample_shell(-2, 3, rng);
            const double a = p(x);
            const double b = p(d.matrix() * x);
            require(std::fabs(a - b) <= 1e-10 * std::max(1.0, std::fabs(a)),
                    "ProfileNotPeriodic", "profile is not dilation-periodic");
        }
        // shell quadrature over B_1 \ B_0
        BoxQuad q(d, 1, d.dim() == 1 ? 65536 : 512);
        double sum = 0.0, mass = 0.0;
        const Eigen::MatrixXd Q0 = d.ball_form(0), Q1 = d.ball_form(1);
        const double c = d.ellipsoid_level();
        for (std::size_t i = 0; i < q.size(); ++i) {
            const Eigen::VectorXd x = q.point(i);
            if (x.dot(Q1 * x) >= c || x.dot(Q0 * x) < c) continue;
            sum += p(x) * q.cell();
            mass += std::fabs(p(x)) * q.cell();
        }
        require(std::fabs(sum) <= 1e-10 + 1e-6 * mass, "ProfileNotMeanZero",
                "profile shell mean is " + std::to_string(sum));
    }

    KernelModel k{d1, d2};
    k.s1 = declared_s1;
    k.s2 = declared_s2;
    k.eps1 = d1.zeta_minus() * (1.0 - 1e-3);
    k.eps2 = d2.zeta_minus() * (1.0 - 1e-3);
    k.family = family_tag;
    const Dilation dc1 = d1, dc2 = d2;
    if (continuous_norm) {
        k.eval = [dc1, dc2, profile1, profile2](const Eigen::VectorXd& x1,
                                                const Eigen::VectorXd& x2) {
            const double r1 = std::pow(dc1.det_abs(), dc1.continuous_level(x1));
            const double r2 = std::pow(dc2.det_abs(), dc2.continuous_level(x2));
            return profile1(x1) * profile2(x2) / (r1 * r2);
        };
    } else {
        k.eval = [dc1, dc2, profile1, profile2](const Eigen::VectorXd& x1,
                                                const Eigen::VectorXd& x2) {
            return profile1(x1) * profile2(x2) / (dc1.quasi_norm(x1) * dc2.quasi_norm(x2));
        };
    }
    return k;
}

KernelModel kernel_from_spec(const std::string& spec, const Dilation& d1,
                             const Dilation& d2) {
    if (spec == "tensorcz:profile=sign") {
        require(d1.dim() == 1 && d2.dim() == 1, "GridMismatch",
                "sign profile is one-dimensional");
        const ProfileEval sgn = [](const Eigen::VectorXd& x) {
            return x[0] > 0 ? 1.0 : -1.0;
        };
        return make_tensor_cz_kernel(d1, d2, sgn, sgn, spec, 0, 0, false);
    }
    if (spec == "tensorcz:profile=logsine") {
        require(d1.dim() == 1 && d2.dim() == 1, "GridMismatch",
                "logsine profile is one-dimensional");
        const Dilation c1 = d1, c2 = d2;
        const ProfileEval p1 = [c1](const Eigen::VectorXd& x) {
            return std::sin(2.0 * M_PI * c1.continuous_level(x)) * (x[0] > 0 ? 1.0 : -1.0);
        };
        const ProfileEval p2 = [c2](const Eigen::VectorXd& x) {
            return std::sin(2.0 * M_PI * c2.continuous_level(x)) * (x[0] > 0 ? 1.0 : -1.0);
        };
        return make_tensor_cz_kernel(d1, d2, p1, p2, spec, 3, 3, true);
    }
    if (spec == "nocancel") {
        // counterexample family: no cancellation, fails (K2) by design
        KernelModel k{d1, d2};
        k.eps1 = d1.zeta_minus() * (1.0 - 1e-3);
        k.eps2 = d2.zeta_minus() * (1.0 - 1e-3);
        k.family = spec;
        const Dilation c1 = d1, c2 = d2;
        k.eval = [c1, c2](const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
            return 1.0 / (c1.quasi_norm(x1) * c2.quasi_norm(x2));
        };
        return k;
    }
    fail("NonFinite", "unknown kernel spec: " + spec);
}

KernelModel sampled_kernel(const GridFunction& samples, const Dilation& d1,
                           const Dilation& d2) {
    require(samples.dim() == d1.dim() + d2.dim(), "GridMismatch",
            "sampled kernel grid does not match the dilation pair");
    KernelModel k{d1, d2};
    k.eps1 = d1.zeta_minus() * (1.0 - 1e-3);
    k.eps2 = d2.zeta_minus() * (1.0 - 1e-3);
    k.family = "sampled";
    // one-cell singular neighborhoods are excluded from sampling
    Eigen::VectorXd cell1(d1.dim()), cell2(d2.dim());
    for (int a = 0; a < d1.dim(); ++a) cell1[a] = samples.spacing(a);
    for (int a = 0; a < d2.dim(); ++a) cell2[a] = samples.spacing(d1.dim() + a);
    k.min_rho1 = d1.quasi_norm(cell1);
    k.min_rho2 = d2.quasi_norm(cell2);
    auto grid = std::make_shared<GridFunction>(samples);
    const int n1 = d1.dim();
    k.eval = [grid, n1](const Eigen::VectorXd& x1, const Eigen::VectorXd& x2) {
        double x[8];
        for (int a = 0; a < n1; ++a) x[a] = x1[a];
        for (int a = 0; a < x2.size(); ++a) x[n1 + a] = x2[a];
        return grid->interpolate(x);
    };
    return k;
}

// ------------------------------------------------------------------- (K1)

ConditionReport check_K1(const KernelModel& kern, int s1, int s2, const SampleSpec& spec) {
    ConditionReport rep;
    rep.condition = "K1";
    const auto alphas1 = multi_indices_up_to(kern.d1.dim(), s1);
    const auto alphas2 = multi_indices_up_to(kern.d2.dim(), s2);
    const double h1 = 1e-3 * chart_radius(kern.d1);
    const double h2 = 1e-3 * chart_radius(kern.d2);
    std::mt19937_64 rng(spec.seed);
    const int n1 = kern.d1.dim();

    for (int l1 = spec.shell_lo; l1 <= spec.shell_hi; ++l1)
        for (int l2 = spec.shell_lo; l2 <= spec.shell_hi; ++l2) {
            const double rho12 = std::pow(kern.d1.det_abs(), l1) *
                                 std::pow(kern.d2.det_abs(), l2);
            for (int i = 0; i < spec.per_shell; ++i) {
                const Eigen::VectorXd u1 = kern.d1.sample_shell(0, 1, rng);
                const Eigen::VectorXd u2 = kern.d2.sample_shell(0, 1, rng);
                const auto F = [&](const Eigen::VectorXd& w) {
                    return kern.eval(kern.d1.pow_apply(l1, w.head(n1)),
                                     kern.d2.pow_apply(l2, w.tail(w.size() - n1)));
                };
                const Eigen::VectorXd u = concat(u1, u2);
                for (const auto& a1 : alphas1)
                    for (const auto& a2 : alphas2) {
                        auto axes = axes_of(a1, 0);
                        const auto ax2 = axes_of(a2, n1);
                        axes.insert(axes.end(), ax2.begin(), ax2.end());
                        const double h = std::min(h1, h2);
                        double v = axes.empty() ? F(u) : fd_mixed_eval(F, u, axes, 0, h);
                        if (!axes.empty()) {
                            const double v2 = fd_mixed_eval(F, u, axes, 0, h / 2);
                            const double scale = std::max({std::fabs(v), std::fabs(v2),
                                                           1e-12 / rho12});
                            require(std::fabs(v2 - v) <= 0.01 * scale, "DerivativeUnstable",
                                    "stencil refinement moved (K1) at shells (" +
                                        std::to_string(l1) + "," + std::to_string(l2) + ")");
                            v = v2;
                        }
                        const double q = std::fabs(v) * rho12;
                        ++rep.samples;
                        if (q > rep.worst) {
                            rep.worst = q;
                            const Eigen::VectorXd x =
                                concat(kern.d1.pow_apply(l1, u1), kern.d2.pow_apply(l2, u2));
                            rep.worst_arg.assign(x.data(), x.data() + x.size());
                        }
                    }
            }
        }
    rep.pass = rep.worst <= kern.C1 * (1.0 + 1e-6) || kern.C1 <= 0.0;
    return rep;
}

// ------------------------------------------------------------------- (K2)

K2Report check_K2(const KernelModel& kern, const std::vector<Bump>& bumps1,
                  const std::vector<Bump>& bumps2, int k_lo, int k_hi, int quad_per_axis) {
    K2Report out;
    out.base.condition = "K2";
    constexpr int kDepthCap = 24;

    for (const auto& b1 : bumps1)
        for (const auto& b2 : bumps2) {
            const FactorNodes n1 = bump_nodes(kern.d1, b1, 0, quad_per_axis);
            const FactorNodes n2 = bump_nodes(kern.d2, b2, 0, quad_per_axis);
            for (int k1 = k_lo; k1 <= k_hi; ++k1)
                for (int k2 = k_lo; k2 <= k_hi; ++k2) {
                    // y_i = A^-k_i u precomputed per factor
                    std::vector<Eigen::VectorXd> y1(n1.pts.size()), y2(n2.pts.size());
                    for (std::size_t i = 0; i < n1.pts.size(); ++i)
                        y1[i] = kern.d1.pow_apply(-k1, n1.pts[i]);
                    for (std::size_t i = 0; i < n2.pts.size(); ++i)
                        y2[i] = kern.d2.pow_apply(-k2, n2.pts[i]);
                    const double jac = std::pow(kern.d1.det_abs(), -k1) *
                                       std::pow(kern.d2.det_abs(), -k2);

                    // depth bins over rows, reduced in fixed row order
                    std::vector<std::vector<double>> row_bins(
                        n1.pts.size(), std::vector<double>(kDepthCap + 1, 0.0));
                    kernels::for_each_index(n1.pts.size(), [&](std::size_t i) {
                        auto& bins = row_bins[i];
                        for (std::size_t j = 0; j < n2.pts.size(); ++j) {
                            const int depth =
                                std::max(n1.shell_max - n1.shell[i],
                                         n2.shell_max - n2.shell[j]);
                            const int slot = std::min(depth, kDepthCap);
                            bins[slot] += kern.eval(y1[i], y2[j]) * n1.weight[i] *
                                          n2.weight[j] * jac;
                        }
                    });
                    std::vector<double> bins(kDepthCap + 1, 0.0);
                    for (const auto& rb : row_bins)
                        for (int m = 0; m <= kDepthCap; ++m) bins[m] += rb[m];
                    bins.pop_back();  // deepest slot is below quadrature resolution

                    const LadderResult lr = analyze_ladder(bins);
                    require(lr.convergent, "PVNotConvergent",
                            "K2 delta-ladder stalls for bumps " + b1.name + "x" + b2.name +
                                " at scales (" + std::to_string(k1) + "," +
                                std::to_string(k2) + ")");
                    out.cauchy_ratio = std::max(out.cauchy_ratio, lr.max_ratio);
                    out.ladder = lr.partial;
                    ++out.base.samples;
                    if (std::fabs(lr.value) > out.base.worst)
                        out.base.worst = std::fabs(lr.value);
                }
        }
    out.base.pass = true;
    return out;
}

// -------------------------------------------------------- partial kernels

struct PartialKernel::Cache {
    std::mutex mu;
    std::unordered_map<std::string, double> map;
};

PartialKernel::PartialKernel(const KernelModel& kern, Bump psi2, int k2, int quad_per_axis)
    : kern_(kern), psi2_(std::move(psi2)), k2_(k2), quad_(quad_per_axis),
      cache_(std::make_shared<Cache>()) {}

double PartialKernel::operator()(const Eigen::VectorXd& x1) const {
    std::string key(reinterpret_cast<const char*>(x1.data()), x1.size() * sizeof(double));
    {
        std::lock_guard<std::mutex> lock(cache_->mu);
        const auto it = cache_->map.find(key);
        if (it != cache_->map.end()) return it->second;
    }
    // K^{psi2,k2}(x1) = b2^{-k2} int K(x1, A^-k2 v) psi2(v) dv, PV in shell depth
    constexpr int kDepthCap = 28;
    const FactorNodes nodes = bump_nodes(kern_.d2, psi2_, 0, quad_);
    std::vector<double> bins(kDepthCap + 1, 0.0);
    const double jac = std::pow(kern_.d2.det_abs(), -k2_);
    for (std::size_t j = 0; j < nodes.pts.size(); ++j) {
        const Eigen::VectorXd y2 = kern_.d2.pow_apply(-k2_, nodes.pts[j]);
        const int depth = nodes.shell_max - nodes.shell[j];
        bins[std::min(depth, kDepthCap)] += kern_.eval(x1, y2) * nodes.weight[j] * jac;
    }
    bins.pop_back();
    const LadderResult lr = analyze_ladder(bins);
    require(lr.convergent, "PVNotConvergent", "partial-kernel PV ladder stalls");
    {
        std::lock_guard<std::mutex> lock(cache_->mu);
        cache_->map.emplace(std::move(key), lr.value);
    }
    return lr.value;
}

ConditionReport check_K3(const KernelModel& kern, const Bump& psi2, int k2, int s1,
                         const SampleSpec& spec) {
    ConditionReport rep;
    rep.condition = "K3";
    const PartialKernel P(kern, psi2, k2);
    const auto alphas = multi_indices_up_to(kern.d1.dim(), s1);
    const double h = 1e-3 * chart_radius(kern.d1);
    std::mt19937_64 rng(spec.seed);

    for (int l1 = spec.shell_lo; l1 <= spec.shell_hi; ++l1) {
        const double rho1 = std::pow(kern.d1.det_abs(), l1);
        for (int i = 0; i < spec.per_shell; ++i) {
            const Eigen::VectorXd u = kern.d1.sample_shell(0, 1, rng);
            const auto G = [&](const Eigen::VectorXd& w) {
                return P(kern.d1.pow_apply(l1, w));
            };
            for (const auto& alpha : alphas) {
                int order = 0;
                for (int v : alpha) order += v;
                if (order != s1 && s1 > 0) continue;  // (K3) binds at |alpha| = s1
                const auto axes = axes_of(alpha, 0);
                const double v =
                    axes.empty() ? G(u) : fd_mixed_eval(G, u, axes, 0, h);
                const double q = std::fabs(v) * rho1;
                ++rep.samples;
                if (q > rep.worst) {
                    rep.worst = q;
                    const Eigen::VectorXd x = kern.d1.pow_apply(l1, u);
                    rep.worst_arg.assign(x.data(), x.data() + x.size());
                }
            }
        }
    }
    rep.pass = true;
    return rep;
}

// ------------------------------------------- order-0 difference conditions

ConditionReport check_difference_conditions(const KernelModel& kern, double eps1,
                                            double eps2, const SampleSpec& spec) {
    ConditionReport rep;
    rep.condition = "Delta-conditions";
    if (eps1 > kern.d1.zeta_plus() || eps2 > kern.d2.zeta_plus())
        rep.note = "range effectively restricted: eps exceeds zeta_plus";

    std::mt19937_64 rng(spec.seed);
    const auto bumps2 = standard_bump_set(kern.d2, kern.N2);
    const PartialKernel P12(kern, bumps2[0], 0);
    const auto bumps1 = standard_bump_set(kern.d1, kern.N1);

    // swapped-roles kernel
    KernelModel swapped = kern;
    swapped.d1 = kern.d2;
    swapped.d2 = kern.d1;
    std::swap(swapped.min_rho1, swapped.min_rho2);
    const KernelEval base = kern.eval;
    swapped.eval = [base](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
        return base(b, a);
    };
    const PartialKernel P21(swapped, bumps1[0], 0);

    auto run_side = [&](const KernelModel& K, const PartialKernel& P, double e1, double e2) {
        for (int l1 = spec.shell_lo; l1 <= spec.shell_hi; ++l1)
            for (int l2 = spec.shell_lo; l2 <= spec.shell_hi; ++l2)
                for (int i = 0; i < spec.per_shell; ++i) {
                    const Eigen::VectorXd x1 = K.d1.pow_apply(l1, K.d1.sample_shell(0, 1, rng));
                    const Eigen::VectorXd x2 = K.d2.pow_apply(l2, K.d2.sample_shell(0, 1, rng));
                    const double r1 = std::pow(K.d1.det_abs(), l1);
                    const double r2 = std::pow(K.d2.det_abs(), l2);
                    for (int j1 = 0; j1 <= 2; ++j1) {
                        const int hl1 = l1 - 2 * K.d1.sigma() - j1;
                        const Eigen::VectorXd h1 =
                            K.d1.pow_apply(hl1, K.d1.sample_shell(0, 1, rng));
                        const double rh1 = std::pow(K.d1.det_abs(), hl1);
                        // single difference
                        const double dK = K.eval(x1 + h1, x2) - K.eval(x1, x2);
                        double q = std::fabs(dK) * std::pow(r1, 1.0 + e1) * r2 /
                                   std::pow(rh1, e1);
                        ++rep.samples;
                        if (q > rep.worst) {
                            rep.worst = q;
                            const Eigen::VectorXd x = concat(x1, x2);
                            rep.worst_arg.assign(x.data(), x.data() + x.size());
                        }
                        // double difference
                        for (int j2 = 0; j2 <= 1; ++j2) {
                            const int hl2 = l2 - 2 * K.d2.sigma() - j2;
                            const Eigen::VectorXd h2 =
                                K.d2.pow_apply(hl2, K.d2.sample_shell(0, 1, rng));
                            const double rh2 = std::pow(K.d2.det_abs(), hl2);
                            const double dd = K.eval(x1 + h1, x2 + h2) - K.eval(x1, x2 + h2) -
                                              K.eval(x1 + h1, x2) + K.eval(x1, x2);
                            q = std::fabs(dd) * std::pow(r1, 1.0 + e1) *
                                std::pow(r2, 1.0 + e2) /
                                (std::pow(rh1, e1) * std::pow(rh2, e2));
                            ++rep.samples;
                            if (q > rep.worst) {
                                rep.worst = q;
                                const Eigen::VectorXd x = concat(x1, x2);
                                rep.worst_arg.assign(x.data(), x.data() + x.size());
                            }
                        }
                        // partial-kernel difference
                        const double dP = P(x1 + h1) - P(x1);
                        q = std::fabs(dP) * std::pow(r1, 1.0 + e1) / std::pow(rh1, e1);
                        ++rep.samples;
                        rep.worst = std::max(rep.worst, q);
                    }
                }
    };
    run_side(kern, P12, eps1, eps2);
    run_side(swapped, P21, eps2, eps1);
    rep.pass = true;
    return rep;
}

// --------------------------------------------- derived (K1')(K1'')(K3')

ConditionReport check_lemma_32_conditions(const KernelModel& kern, int s1, int s2,
                                          double eps1, double eps2,
                                          const SampleSpec& spec) {
    ConditionReport rep;
    rep.condition = "K1'/K1''/K3'";
    require(eps1 > 0.0 && eps1 < kern.d1.zeta_minus() + 1e-12 && eps2 > 0.0 &&
                eps2 < kern.d2.zeta_minus() + 1e-12,
            "NonFinite", "eps_i must lie in (0, zeta_minus)");

    std::mt19937_64 rng(spec.seed);
    const int n1 = kern.d1.dim();
    const double fh1 = 1e-3 * chart_radius(kern.d1);
    const double fh2 = 1e-3 * chart_radius(kern.d2);
    const auto alphas1 = multi_indices_up_to(n1, s1);
    const auto alphas2 = multi_indices_up_to(kern.d2.dim(), s2);
    const auto bumps2 = standard_bump_set(kern.d2, kern.N2);
    const PartialKernel P(kern, bumps2[0], 0);

    auto top = [](const std::vector<int>& a, int s) {
        int t = 0;
        for (int v : a) t += v;
        return t == s;
    };

    auto fd_stable = [&](const std::function<double(const Eigen::VectorXd&)>& g,
                         const Eigen::VectorXd& at, const std::vector<int>& axes,
                         double h) {
        if (axes.empty()) return g(at);
        const double v1 = fd_mixed_eval(g, at, axes, 0, h);
        const double v2 = fd_mixed_eval(g, at, axes, 0, h / 2);
        const double scale = std::max({std::fabs(v1), std::fabs(v2), 1e-14});
        require(std::fabs(v2 - v1) <= 0.01 * scale, "DerivativeUnstable",
                "stencil refinement moved a lemma-derived bound");
        return v2;
    };

    for (int l1 = spec.shell_lo; l1 <= spec.shell_hi; ++l1)
        for (int l2 = spec.shell_lo; l2 <= spec.shell_hi; ++l2)
            for (int i = 0; i < spec.per_shell; ++i) {
                const Eigen::VectorXd u1 = kern.d1.sample_shell(0, 1, rng);
                const Eigen::VectorXd u2 = kern.d2.sample_shell(0, 1, rng);
                const Eigen::VectorXd x1 = kern.d1.pow_apply(l1, u1);
                const Eigen::VectorXd x2 = kern.d2.pow_apply(l2, u2);
                const double r1 = std::pow(kern.d1.det_abs(), l1);
                const double r2 = std::pow(kern.d2.det_abs(), l2);
                const int hl1 = l1 - 2 * kern.d1.sigma();
                const int hl2 = l2 - 2 * kern.d2.sigma();
                const Eigen::VectorXd h1 = kern.d1.pow_apply(hl1, kern.d1.sample_shell(0, 1, rng));
                const Eigen::VectorXd h2 = kern.d2.pow_apply(hl2, kern.d2.sample_shell(0, 1, rng));
                const double rh1 = std::pow(kern.d1.det_abs(), hl1);
                const double rh2 = std::pow(kern.d2.det_abs(), hl2);
                const Eigen::VectorXd ch1 = kern.d1.pow_apply(-l1, h1);
                const Eigen::VectorXd ch2 = kern.d2.pow_apply(-l2, h2);

                // (K1'): difference in factor 1 of the top x1-derivative
                for (const auto& a1 : alphas1) {
                    if (!top(a1, s1)) continue;
                    const auto axes = axes_of(a1, 0);
                    const auto g = [&](const Eigen::VectorXd& w) {
                        return kern.eval(kern.d1.pow_apply(l1, w), x2);
                    };
                    const double d = fd_stable(g, u1 + ch1, axes, fh1) -
                                     fd_stable(g, u1, axes, fh1);
                    const double q = std::fabs(d) * std::pow(r1, 1.0 + eps1) * r2 /
                                     std::pow(rh1, eps1);
                    ++rep.samples;
                    if (q > rep.worst) {
                        rep.worst = q;
                        const Eigen::VectorXd x = concat(x1, x2);
                        rep.worst_arg.assign(x.data(), x.data() + x.size());
                    }
                }

                // (K1''): double difference of the top mixed derivative
                for (const auto& a1 : alphas1)
                    for (const auto& a2 : alphas2) {
                        if (!top(a1, s1) || !top(a2, s2)) continue;
                        auto axes = axes_of(a1, 0);
                        const auto ax2 = axes_of(a2, n1);
                        axes.insert(axes.end(), ax2.begin(), ax2.end());
                        const auto g = [&](const Eigen::VectorXd& w) {
                            return kern.eval(kern.d1.pow_apply(l1, w.head(n1)),
                                             kern.d2.pow_apply(l2, w.tail(w.size() - n1)));
                        };
                        const Eigen::VectorXd u = concat(u1, u2);
                        const Eigen::VectorXd e1c = concat(ch1, Eigen::VectorXd::Zero(u2.size()));
                        const Eigen::VectorXd e2c = concat(Eigen::VectorXd::Zero(u1.size()), ch2);
                        const double h = std::min(fh1, fh2);
                        const double dd = fd_stable(g, u + e1c + e2c, axes, h) -
                                          fd_stable(g, u + e1c, axes, h) -
                                          fd_stable(g, u + e2c, axes, h) +
                                          fd_stable(g, u, axes, h);
                        const double q = std::fabs(dd) * std::pow(r1, 1.0 + eps1) *
                                         std::pow(r2, 1.0 + eps2) /
                                         (std::pow(rh1, eps1) * std::pow(rh2, eps2));
                        ++rep.samples;
                        rep.worst = std::max(rep.worst, q);
                    }

                // (K3'): difference of the partial-kernel top derivative
                if (l2 == spec.shell_lo) {
                    for (const auto& a1 : alphas1) {
                        if (!top(a1, s1)) continue;
                        const auto axes = axes_of(a1, 0);
                        const auto g = [&](const Eigen::VectorXd& w) {
                            return P(kern.d1.pow_apply(l1, w));
                        };
                        const double d = fd_stable(g, u1 + ch1, axes, fh1) -
                                         fd_stable(g, u1, axes, fh1);
                        const double q = std::fabs(d) * std::pow(r1, 1.0 + eps1) /
                                         std::pow(rh1, eps1);
                        ++rep.samples;
                        rep.worst = std::max(rep.worst, q);
                    }
                }
            }
    rep.pass = true;
    return rep;
}

// -------------------------------------------------- smoothed kernel bounds

namespace {

// K * phi_{k1,k2}(y) with PV ladder over shells of rho_i(y_i - A^k_i w_i)
double smoothed_value(const KernelModel& kern, const FactorNodes& n1, const FactorNodes& n2,
                      int k1, int k2, const Eigen::VectorXd& y1, const Eigen::VectorXd& y2) {
    constexpr int kDepthCap = 26;
    std::vector<Eigen::VectorXd> z1(n1.pts.size()), z2(n2.pts.size());
    std::vector<int> s1(n1.pts.size()), s2(n2.pts.size());
    int smax1 = std::numeric_limits<int>::min(), smax2 = smax1;
    for (std::size_t i = 0; i < n1.pts.size(); ++i) {
        z1[i] = y1 - kern.d1.pow_apply(k1, n1.pts[i]);
        s1[i] = z1[i].norm() == 0.0 ? -10000 : kern.d1.shell_index(z1[i]);
        smax1 = std::max(smax1, s1[i]);
    }
    for (std::size_t j = 0; j < n2.pts.size(); ++j) {
        z2[j] = y2 - kern.d2.pow_apply(k2, n2.pts[j]);
        s2[j] = z2[j].norm() == 0.0 ? -10000 : kern.d2.shell_index(z2[j]);
        smax2 = std::max(smax2, s2[j]);
    }
    std::vector<std::vector<double>> row_bins(n1.pts.size(),
                                              std::vector<double>(kDepthCap + 1, 0.0));
    kernels::for_each_index(n1.pts.size(), [&](std::size_t i) {
        for (std::size_t j = 0; j < n2.pts.size(); ++j) {
            const int depth = std::max(smax1 - s1[i], smax2 - s2[j]);
            row_bins[i][std::min(depth, kDepthCap)] +=
                kern.eval(z1[i], z2[j]) * n1.weight[i] * n2.weight[j];
        }
    });
    std::vector<double> bins(kDepthCap + 1, 0.0);
    for (const auto& rb : row_bins)
        for (int m = 0; m <= kDepthCap; ++m) bins[m] += rb[m];
    bins.pop_back();
    const LadderResult lr = analyze_ladder(bins);
    require(lr.convergent, "PVNotConvergent", "smoothed-kernel PV ladder stalls");
    return lr.value;
}

}  // namespace

SmoothedKernelReport smoothed_kernel_bound_check(const KernelModel& kern, const Bump& phi1,
                                                 int j1, const Bump& phi2, int j2, int k1,
                                                 int k2, double eps1, double eps2,
                                                 int quad_per_axis) {
    SmoothedKernelReport out;
    out.base.condition = "L3.2A";
    const FactorNodes n1 = bump_nodes(kern.d1, phi1, j1, quad_per_axis);
    const FactorNodes n2 = bump_nodes(kern.d2, phi2, j2, quad_per_axis);
    const double b1 = kern.d1.det_abs(), b2 = kern.d2.det_abs();
    const int thr1 = k1 + j1 + 4 * kern.d1.sigma();
    const int thr2 = k2 + j2 + 4 * kern.d2.sigma();

    std::mt19937_64 rng(777);
    const Eigen::VectorXd u1 = kern.d1.sample_shell(0, 1, rng);
    const Eigen::VectorXd u2 = kern.d2.sample_shell(0, 1, rng);

    const auto envelope = [&](int l1, int l2) {
        const double r1 = std::pow(b1, l1), r2 = std::pow(b2, l2);
        return std::pow(b1, k1 * eps1) /
               std::pow(std::pow(b1, k1) + std::pow(b1, -j1) * r1, 1.0 + eps1) *
               std::pow(b2, k2 * eps2) /
               std::pow(std::pow(b2, k2) + std::pow(b2, -j2) * r2, 1.0 + eps2);
    };

    int reg = 0;
    for (const int l1 : {thr1 - 2, thr1 + 3})
        for (const int l2 : {thr2 - 2, thr2 + 3}) {
            const Eigen::VectorXd y1 = kern.d1.pow_apply(l1, u1);
            const Eigen::VectorXd y2 = kern.d2.pow_apply(l2, u2);
            const double v = smoothed_value(kern, n1, n2, k1, k2, y1, y2);
            const double ratio = std::fabs(v) / envelope(l1, l2);
            out.regime_sup[reg++] = ratio;
            ++out.base.samples;
            if (ratio > out.base.worst) {
                out.base.worst = ratio;
                const Eigen::VectorXd x = concat(y1, y2);
                out.base.worst_arg.assign(x.data(), x.data() + x.size());
            }
        }

    // far-field decay in each factor: log |K*phi| against l, fixed other shell
    const auto far_slope = [&](bool factor1) {
        std::vector<double> ls, logs;
        const int base_thr = factor1 ? thr1 : thr2;
        for (int l = base_thr + 2; l <= base_thr + 7; ++l) {
            const Eigen::VectorXd y1 =
                kern.d1.pow_apply(factor1 ? l : thr1 - 2, u1);
            const Eigen::VectorXd y2 =
                kern.d2.pow_apply(factor1 ? thr2 - 2 : l, u2);
            const double v = std::fabs(smoothed_value(kern, n1, n2, k1, k2, y1, y2));
            if (v <= 0.0) continue;
            ls.push_back(l);
            logs.push_back(std::log(v));
        }
        require(ls.size() >= 3, "PVNotConvergent", "far field vanished; no slope");
        return fit_line(ls, logs).slope;
    };
    out.far_slope_1 = far_slope(true);
    out.far_slope_2 = far_slope(false);
    out.base.pass = true;
    return out;
}

// ------------------------------------------------------------- operator

ApplyResult apply_pasio(const KernelModel& kern, const GridFunction& f, double delta1,
                        double delta2, double gap_tol) {
    require(delta1 > 0.0 && delta2 > 0.0, "NonFinite", "truncation radii must be positive");
    const int n1 = kern.d1.dim();
    require(f.dim() == n1 + kern.d2.dim(), "GridMismatch", "field not on the product grid");

    GridFunction Kfine = GridFunction::like(f);   // truncated at delta/b
    GridFunction Kcoarse = GridFunction::like(f); // truncated at delta
    const double d1b = delta1 / kern.d1.det_abs();
    const double d2b = delta2 / kern.d2.det_abs();
    kernels::for_each_index(Kfine.size(), [&](std::size_t i) {
        double x[8];
        Kfine.point_at(i, x);
        Eigen::Map<const Eigen::VectorXd> x1(x, n1);
        Eigen::Map<const Eigen::VectorXd> x2(x + n1, f.dim() - n1);
        if (x1.norm() == 0.0 || x2.norm() == 0.0) return;
        const double r1 = kern.d1.quasi_norm(x1);
        const double r2 = kern.d2.quasi_norm(x2);
        if (r1 < d1b || r2 < d2b) return;
        const double v = kern.eval(x1, x2);
        Kfine.values[i] = v;
        if (r1 >= delta1 && r2 >= delta2) Kcoarse.values[i] = v;
    });

    const fftutil::cvec F = fftutil::analyze(f);
    fftutil::cvec Sf = fftutil::analyze(Kfine);
    fftutil::cvec Sc = fftutil::analyze(Kcoarse);
    kernels::mul(Sf.data(), Sf.data(), F.data(), Sf.size());
    kernels::mul(Sc.data(), Sc.data(), F.data(), Sc.size());
    ApplyResult out{fftutil::synthesize(f, Sf), 0.0};
    const GridFunction coarse = fftutil::synthesize(f, Sc);

    std::vector<double> diff(out.Tf.size());
    kernels::for_each_index(diff.size(), [&](std::size_t i) {
        diff[i] = out.Tf.values[i] - coarse.values[i];
    });
    const double dn = std::sqrt(kernels::block_pow_sum(diff.data(), nullptr, diff.size(), 2.0));
    const double tn = std::sqrt(
        kernels::block_pow_sum(out.Tf.values.data(), nullptr, out.Tf.size(), 2.0));
    out.cauchy_gap = tn > 0.0 ? dn / tn : 0.0;
    require(out.cauchy_gap <= gap_tol, "PVNotConvergent",
            "PV Cauchy gap " + std::to_string(out.cauchy_gap) + " exceeds tolerance");
    return out;
}

}  // namespace aniso
