#include "aniso/calderon.hpp"

#include <cmath>
#include <limits>

#include "aniso/kernels.hpp"

namespace aniso {

namespace {

// Symmetric smoothstep transitions T: [0,1] -> [0,1] with T(u) + T(1-u) = 1.
double step_poly7(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    return u * u * u * u * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
}

double step_exp(double u) {
    if (u <= 0.0) return 0.0;
    if (u >= 1.0) return 1.0;
    const double a = std::exp(-1.0 / u);
    const double b = std::exp(-1.0 / (1.0 - u));
    return a / (a + b);
}

constexpr double kLevelAtZero = -1e18;

}  // namespace

double CalderonPair::profile_value(double t) const {
    if (t <= -1.0 || t >= 2.0) return 0.0;
    double u;
    if (t < 0.0)
        u = t + 1.0;
    else if (t <= 1.0)
        return 1.0;
    else
        u = 2.0 - t;
    return profile_ == ShellProfile::Poly7 ? step_poly7(u) : step_exp(u);
}

double CalderonPair::partition_sum_sq(double t) const {
    // only j with t + j in (-1, 2) contribute; S is 1-periodic in t
    double s = 0.0;
    const int jlo = static_cast<int>(std::ceil(-1.0 - t));
    const int jhi = static_cast<int>(std::floor(2.0 - t));
    for (int j = jlo; j <= jhi; ++j) {
        const double v = profile_value(t + j);
        s += v * v;
    }
    return s;
}

double CalderonPair::level_at(const double* xi) const {
    Eigen::Map<const Eigen::VectorXd> v(xi, dual_.dim());
    if (v.norm() == 0.0) return kLevelAtZero;
    return dual_.continuous_level(v);
}

double CalderonPair::psi_hat_at(const double* xi) const {
    const double t = level_at(xi);
    const double p = profile_value(t);
    if (p == 0.0) return 0.0;
    const double S = partition_sum_sq(t);
    return variant_ == PairVariant::Symmetric ? p / std::sqrt(S) : p / S;
}

double CalderonPair::theta_hat_at(const double* xi) const {
    const double t = level_at(xi);
    const double p = profile_value(t);
    if (p == 0.0) return 0.0;
    return variant_ == PairVariant::Symmetric ? p / std::sqrt(partition_sum_sq(t)) : p;
}

double CalderonPair::phi_hat_at(const double* xi) const {
    return std::sqrt(psi_hat_at(xi));
}

double CalderonPair::phi_hat_scaled_at(const double* xi, int k) const {
    const double t = level_at(xi);
    if (t <= kLevelAtZero / 2) return 0.0;
    const double ts = t + k;  // level of (A*)^k xi
    const double p = profile_value(ts);
    if (p == 0.0) return 0.0;
    const double S = partition_sum_sq(ts);
    const double psi = variant_ == PairVariant::Symmetric ? p / std::sqrt(S) : p / S;
    return std::sqrt(psi);
}

double CalderonPair::psi_hat_scaled_at(const double* xi, int k) const {
    const double v = phi_hat_scaled_at(xi, k);
    return v * v;
}

namespace {

GridFunction synth_from(const GridFunction& like,
                        const std::function<double(const double*)>& spec_at) {
    GridFunction freq(like.shape, fftutil::dual_halfwidth(like), Domain::Frequency);
    fftutil::cvec spec(freq.size());
    kernels::for_each_index(freq.size(), [&](std::size_t i) {
        double xi[8];
        freq.point_at(i, xi);
        spec[i] = spec_at(xi);
    });
    return fftutil::synthesize(like, spec);
}

}  // namespace

GridFunction CalderonPair::psi_space(const GridFunction& like) const {
    return synth_from(like, [this](const double* xi) { return psi_hat_at(xi); });
}

GridFunction CalderonPair::phi_space(const GridFunction& like) const {
    return synth_from(like, [this](const double* xi) { return phi_hat_at(xi); });
}

GridFunction CalderonPair::theta_space(const GridFunction& like) const {
    return synth_from(like, [this](const double* xi) { return theta_hat_at(xi); });
}

CalderonPair build_calderon_pair(const Dilation& d, int moment_order,
                                 const GridFunction& space_grid, double tol,
                                 PairVariant variant, ShellProfile profile) {
    Dilation dual = Dilation::make(d.matrix().transpose());
    CalderonPair pair(d, std::move(dual));
    pair.moment_order_ = moment_order;
    pair.variant_ = variant;
    pair.profile_ = profile;

    const int n = d.dim();
    require(space_grid.dim() == n, "GridMismatch", "grid dim != dilation dim");

    GridFunction freq(space_grid.shape, fftutil::dual_halfwidth(space_grid),
                      Domain::Frequency);

    // resolution precondition: the shell rho* in [1/b, b^2] must be crossed
    // by at least 16 frequency cells along every axis
    for (int a = 0; a < n; ++a) {
        int count = 0;
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
        for (int m = 0; m < freq.shape[a]; ++m) {
            xi[a] = freq.coord(a, m);
            if (xi[a] == 0.0) continue;
            const double t = pair.dual_.continuous_level(xi);
            if (t > -1.0 && t < 2.0) ++count;
        }
        require(count >= 16, "ResolutionTooCoarse",
                "fewer than 16 cells across the shell on axis " + std::to_string(a));
    }

    // sampled spectra
    pair.psi_hat_ = GridFunction(freq.shape, freq.halfwidth, Domain::Frequency);
    pair.theta_hat_ = GridFunction(freq.shape, freq.halfwidth, Domain::Frequency);
    pair.phi_hat_ = GridFunction(freq.shape, freq.halfwidth, Domain::Frequency);
    std::vector<double> residual_per(pair.psi_hat_.size(), 0.0);
    kernels::for_each_index(pair.psi_hat_.size(), [&](std::size_t i) {
        double xi[8];
        freq.point_at(i, xi);
        pair.psi_hat_.values[i] = pair.psi_hat_at(xi);
        pair.theta_hat_.values[i] = pair.theta_hat_at(xi);
        pair.phi_hat_.values[i] = pair.phi_hat_at(xi);
        const double t = pair.level_at(xi);
        if (t <= kLevelAtZero / 2) return;  // xi = 0 excluded from certification
        double sum = 0.0;
        const int jlo = static_cast<int>(std::ceil(-1.0 - t));
        const int jhi = static_cast<int>(std::floor(2.0 - t));
        for (int j = jlo; j <= jhi; ++j) {
            const double tj = t + j;
            const double p = pair.profile_value(tj);
            if (p == 0.0) continue;
            const double S = pair.partition_sum_sq(tj);
            sum += (variant == PairVariant::Symmetric) ? p * p / S : (p / S) * p;
        }
        residual_per[i] = std::fabs(sum - 1.0);
    });
    pair.identity_residual_ = kernels::block_max_abs(residual_per.data(), residual_per.size());
    if (pair.identity_residual_ > tol) {
        std::size_t worst = 0;
        for (std::size_t i = 0; i < residual_per.size(); ++i)
            if (residual_per[i] > residual_per[worst]) worst = i;
        double xi[8];
        freq.point_at(worst, xi);
        fail("ResidualExceedsTol", "identity residual " +
                                       std::to_string(pair.identity_residual_) +
                                       " at |xi_0| = " + std::to_string(xi[0]));
    }

    // certified scale window: supp phi_hat((A*)^k .) = {t in [-1-k, 2-k]} must
    // sit inside the band of shells the frequency grid resolves
    int t_hi = 0;
    {
        std::mt19937_64 rng(0x5eed);
        for (int j = 0; j <= 300; ++j) {
            bool inside = true;
            for (int s = 0; s < 64 && inside; ++s) {
                const Eigen::VectorXd p = pair.dual_.boundary_point(j, rng);
                for (int a = 0; a < n; ++a)
                    if (std::fabs(p[a]) > freq.halfwidth[a]) inside = false;
            }
            if (!inside) break;
            t_hi = j;
        }
    }
    int t_lo = 0;
    for (int a = 0; a < n; ++a) {
        Eigen::VectorXd xi = Eigen::VectorXd::Zero(n);
        xi[a] = 16.0 * freq.spacing(a);
        t_lo = std::max(t_lo, pair.dual_.shell_index(xi) + 1);
    }
    pair.scale_lo_ = 2 - t_hi;
    pair.scale_hi_ = -1 - t_lo;
    require(pair.scale_lo_ <= pair.scale_hi_, "ResolutionTooCoarse",
            "no certified scales on this grid");
    return pair;
}

double moment_check(const GridFunction& f, int order) {
    require(f.domain == Domain::Space, "GridMismatch", "moment_check wants a space field");
    const auto alphas = multi_indices_up_to(f.dim(), order);
    double worst = 0.0;
    for (const auto& alpha : alphas) {
        std::vector<double> terms(f.size());
        kernels::for_each_index(f.size(), [&](std::size_t i) {
            double x[8];
            f.point_at(i, x);
            double mono = 1.0;
            for (int a = 0; a < f.dim(); ++a)
                for (int p = 0; p < alpha[a]; ++p) mono *= x[a];
            terms[i] = mono * f.values[i];
        });
        const double m = std::fabs(kernels::block_sum(terms.data(), terms.size())) *
                         f.cell_volume();
        worst = std::max(worst, m);
    }
    return worst;
}

double annulus_lower_bound_check(const CalderonPair& pair, double shell_lo,
                                 double shell_hi) {
    const GridFunction& th = pair.theta_hat();
    double best = std::numeric_limits<double>::infinity();
    bool any = false;
    const int n = th.dim();
    for (std::size_t i = 0; i < th.size(); ++i) {
        double xi[8];
        th.point_at(i, xi);
        Eigen::Map<const Eigen::VectorXd> v(xi, n);
        if (v.norm() == 0.0) continue;
        const double rho = pair.dual().quasi_norm(v);
        if (rho < shell_lo || rho > shell_hi) continue;
        any = true;
        best = std::min(best, std::fabs(th.values[i]));
    }
    require(any, "EmptyShell", "no grid frequencies in the requested shell");
    return best;
}

}  // namespace aniso
