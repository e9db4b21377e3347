#include "aniso/transforms.hpp"

#include <cmath>

#include "aniso/kernels.hpp"

namespace aniso {

namespace {

void check_window(const CalderonPair& p, ScaleWindow w) {
    require(w.lo <= w.hi, "WindowOutsideCertifiedRange", "empty scale window");
    require(w.lo >= p.scale_lo() && w.hi <= p.scale_hi(), "WindowOutsideCertifiedRange",
            "window [" + std::to_string(w.lo) + "," + std::to_string(w.hi) +
                "] outside certified [" + std::to_string(p.scale_lo()) + "," +
                std::to_string(p.scale_hi()) + "]");
}

GridFunction sqrt_field(GridFunction acc) {
    kernels::for_each_index(acc.size(), [&](std::size_t i) {
        acc.values[i] = std::sqrt(acc.values[i]);
    });
    return acc;
}

}  // namespace

GridFunction dilate_kernel(const GridFunction& phi, const Dilation& d, int k,
                           std::string* warning) {
    require(phi.dim() == d.dim(), "GridMismatch", "dilate_kernel dim mismatch");
    const double scale = std::pow(d.det_abs(), -k);
    GridFunction out = GridFunction::like(phi);
    const int n = phi.dim();
    kernels::for_each_index(out.size(), [&](std::size_t i) {
        double x[8], y[8];
        out.point_at(i, x);
        Eigen::Map<const Eigen::VectorXd> xv(x, n);
        Eigen::VectorXd yv = d.pow_apply(-k, xv);
        for (int a = 0; a < n; ++a) y[a] = yv[a];
        out.values[i] = scale * phi.interpolate(y);
    });
    if (warning && k > 0) {
        // feature extent of phi shrinks by roughly lambda_minus^k
        const double mx = phi.max_abs();
        double extent = 0.0;
        for (std::size_t i = 0; i < phi.size(); ++i) {
            if (std::fabs(phi.values[i]) > 1e-12 * mx) {
                double x[8];
                phi.point_at(i, x);
                for (int a = 0; a < n; ++a) extent = std::max(extent, std::fabs(x[a]));
            }
        }
        const double compressed = extent / std::pow(d.lambda_minus(), k);
        if (compressed < 8.0 * phi.spacing(0))
            *warning = "ResolutionTooCoarse: dilated features span under 8 cells";
    }
    return out;
}

GridFunction scale_coefficient(const GridFunction& f, const CalderonPair& p, int k) {
    return fftutil::apply_multiplier(
        f, [&](const double* xi) { return p.phi_hat_scaled_at(xi, k); });
}

GridFunction scale_coefficient_product(const GridFunction& f, const CalderonPair& p1,
                                       const CalderonPair& p2, int k1, int k2) {
    const int n1 = p1.dilation().dim();
    return fftutil::apply_multiplier(f, [&](const double* xi) {
        return p1.phi_hat_scaled_at(xi, k1) * p2.phi_hat_scaled_at(xi + n1, k2);
    });
}

ScaleDecomposition decompose_scales(const GridFunction& f, const CalderonPair& p,
                                    ScaleWindow w) {
    check_window(p, w);
    ScaleDecomposition dec;
    dec.grid = GridFunction::like(f);
    dec.w1 = w;
    dec.w2 = {0, 0};
    const fftutil::cvec F = fftutil::analyze(f);
    for (int k = w.lo; k <= w.hi; ++k) {
        dec.coeffs.push_back(fftutil::synthesize(
            f, fftutil::multiplied_spectrum(f, F, [&](const double* xi) {
                return p.phi_hat_scaled_at(xi, k);
            })));
    }
    dec.truncation_energy_fraction = truncation_energy_fraction(f, p, w);
    return dec;
}

ScaleDecomposition decompose_scales_product(const GridFunction& f, const CalderonPair& p1,
                                            const CalderonPair& p2, ScaleWindow w1,
                                            ScaleWindow w2) {
    check_window(p1, w1);
    check_window(p2, w2);
    ScaleDecomposition dec;
    dec.grid = GridFunction::like(f);
    dec.product = true;
    dec.w1 = w1;
    dec.w2 = w2;
    const int n1 = p1.dilation().dim();
    const fftutil::cvec F = fftutil::analyze(f);
    for (int k1 = w1.lo; k1 <= w1.hi; ++k1)
        for (int k2 = w2.lo; k2 <= w2.hi; ++k2) {
            dec.coeffs.push_back(fftutil::synthesize(
                f, fftutil::multiplied_spectrum(f, F, [&](const double* xi) {
                    return p1.phi_hat_scaled_at(xi, k1) *
                           p2.phi_hat_scaled_at(xi + n1, k2);
                })));
        }
    dec.truncation_energy_fraction =
        truncation_energy_fraction_product(f, p1, p2, w1, w2);
    return dec;
}

// ------------------------------------------------------------ BallAverager

BallAverager::BallAverager(const GridFunction& like, Dilation d1,
                           std::optional<Dilation> d2, int split)
    : like_(GridFunction::like(like)), d1_(std::move(d1)), d2_(std::move(d2)),
      split_(split) {
    require(split_ >= 1 && split_ <= like_.dim(), "GridMismatch", "bad factor split");
    require((split_ == like_.dim()) == !d2_.has_value(), "GridMismatch",
            "factor split / dilation mismatch");
}

const fftutil::cvec& BallAverager::kernel_spectrum(int k1, int k2) {
    const auto key = std::make_pair(k1, k2);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    GridFunction kernel = GridFunction::like(like_);
    const int dim = kernel.dim();
    const Eigen::MatrixXd Q1 = d1_.ball_form(k1);
    const double c1 = d1_.ellipsoid_level();
    Eigen::MatrixXd Q2;
    double c2 = 0.0;
    if (d2_) {
        Q2 = d2_->ball_form(k2);
        c2 = d2_->ellipsoid_level();
    }
    std::vector<double> ones(kernel.size(), 0.0);
    kernels::for_each_index(kernel.size(), [&](std::size_t i) {
        double x[8];
        kernel.point_at(i, x);
        Eigen::Map<const Eigen::VectorXd> x1(x, split_);
        bool in = x1.dot(Q1 * x1) < c1;
        if (in && d2_) {
            Eigen::Map<const Eigen::VectorXd> x2(x + split_, dim - split_);
            in = x2.dot(Q2 * x2) < c2;
        }
        if (in) {
            kernel.values[i] = 1.0;
            ones[i] = 1.0;
        }
    });
    const double count = kernels::block_sum(ones.data(), ones.size());
    // normalization: rasterized count (exact grid averages), not b^k
    kernels::scale(kernel.values.data(), kernel.size(),
                   1.0 / (count * kernel.cell_volume()));
    auto [pos, inserted] = cache_.emplace(key, fftutil::analyze(kernel));
    return pos->second;
}

GridFunction BallAverager::average(const GridFunction& field, int k1, int k2) {
    require(field.same_grid(like_), "GridMismatch", "averager grid mismatch");
    fftutil::cvec F = fftutil::analyze(field);
    const fftutil::cvec& K = kernel_spectrum(k1, k2);
    kernels::mul(F.data(), F.data(), K.data(), F.size());
    return fftutil::synthesize(field, F);
}

std::vector<int> BallAverager::index_radii(int which_factor, int k) const {
    const Dilation& d = which_factor == 1 ? d1_ : *d2_;
    const int off = which_factor == 1 ? 0 : split_;
    const int nd = which_factor == 1 ? split_ : like_.dim() - split_;
    const Eigen::MatrixXd Q = d.ball_form(k);
    std::vector<int> radii(nd, 0);
    for (int a = 0; a < nd; ++a) {
        int r = 0;
        const int axis = off + a;
        for (int j = 1; j <= like_.shape[axis] / 2 - 1; ++j) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(nd);
            x[a] = j * like_.spacing(axis);
            if (x.dot(Q * x) < d.ellipsoid_level())
                r = j;
            else
                break;
        }
        radii[a] = r;
    }
    return radii;
}

// --------------------------------------------------------------- g and S

GridFunction g_function(const GridFunction& f, const CalderonPair& p, ScaleWindow w) {
    check_window(p, w);
    const fftutil::cvec F = fftutil::analyze(f);
    GridFunction acc = GridFunction::like(f);
    for (int k = w.lo; k <= w.hi; ++k) {
        GridFunction c = fftutil::synthesize(
            f, fftutil::multiplied_spectrum(f, F, [&](const double* xi) {
                return p.phi_hat_scaled_at(xi, k);
            }));
        kernels::add_sq(acc.values.data(), c.values.data(), acc.size());
    }
    return sqrt_field(std::move(acc));
}

GridFunction g_function_product(const GridFunction& f, const CalderonPair& p1,
                                const CalderonPair& p2, ScaleWindow w1, ScaleWindow w2) {
    check_window(p1, w1);
    check_window(p2, w2);
    const int n1 = p1.dilation().dim();
    const fftutil::cvec F = fftutil::analyze(f);
    GridFunction acc = GridFunction::like(f);
    for (int k1 = w1.lo; k1 <= w1.hi; ++k1)
        for (int k2 = w2.lo; k2 <= w2.hi; ++k2) {
            GridFunction c = fftutil::synthesize(
                f, fftutil::multiplied_spectrum(f, F, [&](const double* xi) {
                    return p1.phi_hat_scaled_at(xi, k1) *
                           p2.phi_hat_scaled_at(xi + n1, k2);
                }));
            kernels::add_sq(acc.values.data(), c.values.data(), acc.size());
        }
    return sqrt_field(std::move(acc));
}

GridFunction area_function(const GridFunction& f, const CalderonPair& p, ScaleWindow w) {
    check_window(p, w);
    BallAverager avg(f, p.dilation(), std::nullopt, f.dim());
    const fftutil::cvec F = fftutil::analyze(f);
    GridFunction acc = GridFunction::like(f);
    GridFunction sq = GridFunction::like(f);
    for (int k = w.lo; k <= w.hi; ++k) {
        GridFunction c = fftutil::synthesize(
            f, fftutil::multiplied_spectrum(f, F, [&](const double* xi) {
                return p.phi_hat_scaled_at(xi, k);
            }));
        kernels::mul(sq.values.data(), c.values.data(), c.values.data(), sq.size());
        GridFunction a = avg.average(sq, k);
        kernels::for_each_index(acc.size(), [&](std::size_t i) {
            acc.values[i] += std::max(a.values[i], 0.0);
        });
    }
    return sqrt_field(std::move(acc));
}

GridFunction area_function_product(const GridFunction& f, const CalderonPair& p1,
                                   const CalderonPair& p2, ScaleWindow w1,
                                   ScaleWindow w2) {
    check_window(p1, w1);
    check_window(p2, w2);
    const int n1 = p1.dilation().dim();
    const fftutil::cvec F = fftutil::analyze(f);
    return h_norm_field(f, p1.dilation(), p2.dilation(), w1, w2, [&](int k1, int k2) {
        return fftutil::synthesize(
            f, fftutil::multiplied_spectrum(f, F, [&](const double* xi) {
                return p1.phi_hat_scaled_at(xi, k1) * p2.phi_hat_scaled_at(xi + n1, k2);
            }));
    });
}

GridFunction h_norm_field(const GridFunction& like, const Dilation& d1, const Dilation& d2,
                          ScaleWindow w1, ScaleWindow w2, const CoeffSource& src) {
    BallAverager avg(like, d1, d2, d1.dim());
    GridFunction acc = GridFunction::like(like);
    GridFunction sq = GridFunction::like(like);
    for (int k1 = w1.lo; k1 <= w1.hi; ++k1)
        for (int k2 = w2.lo; k2 <= w2.hi; ++k2) {
            const GridFunction c = src(k1, k2);
            require(c.same_grid(like), "GridMismatch", "coefficient grid mismatch");
            kernels::mul(sq.values.data(), c.values.data(), c.values.data(), sq.size());
            GridFunction a = avg.average(sq, k1, k2);
            kernels::for_each_index(acc.size(), [&](std::size_t i) {
                acc.values[i] += std::max(a.values[i], 0.0);
            });
        }
    return sqrt_field(std::move(acc));
}

GridFunction h_norm_field(const ScaleDecomposition& coeffs, const Dilation& d1,
                          const Dilation& d2) {
    require(coeffs.product, "GridMismatch", "h_norm_field wants a product decomposition");
    return h_norm_field(coeffs.grid, d1, d2, coeffs.w1, coeffs.w2,
                        [&](int k1, int k2) { return coeffs.at(k1, k2); });
}

GridFunction sliding_max_axis(const GridFunction& field, int axis, int r) {
    if (r <= 0) return field;
    const int N = field.shape[axis];
    GridFunction out = GridFunction::like(field);
    // stride of the axis and number of lines
    std::size_t stride = 1;
    for (int a = field.dim() - 1; a > axis; --a) stride *= field.shape[a];
    const std::size_t lines = field.size() / N;
    kernels::for_each_index(lines, [&](std::size_t l) {
        // base offset of line l: split l into (outer, inner) around the axis
        const std::size_t inner = l % stride;
        const std::size_t outer = l / stride;
        const std::size_t base = outer * stride * N + inner;
        std::vector<double> line(N), pooled(N);
        for (int j = 0; j < N; ++j) line[j] = field.values[base + j * stride];
        kernels::serial::sliding_max_lines(pooled.data(), line.data(), 1, N, r, r);
        for (int j = 0; j < N; ++j) out.values[base + j * stride] = pooled[j];
    });
    return out;
}

GridFunction strong_maximal(const GridFunction& f, const Dilation& d1, const Dilation& d2,
                            ScaleWindow w) {
    GridFunction absf = GridFunction::like(f);
    kernels::for_each_index(f.size(), [&](std::size_t i) {
        absf.values[i] = std::fabs(f.values[i]);
    });
    BallAverager avg(f, d1, d2, d1.dim());
    GridFunction best = GridFunction::like(f);
    for (int k1 = w.lo; k1 <= w.hi; ++k1)
        for (int k2 = w.lo; k2 <= w.hi; ++k2) {
            GridFunction m = avg.average(absf, k1, k2);
            // sup over translates: max-pool with the ball footprint
            const auto r1 = avg.index_radii(1, k1);
            const auto r2 = avg.index_radii(2, k2);
            for (int a = 0; a < d1.dim(); ++a) m = sliding_max_axis(m, a, r1[a]);
            for (int a = 0; a < d2.dim(); ++a)
                m = sliding_max_axis(m, d1.dim() + a, r2[a]);
            kernels::max_inplace(best.values.data(), m.values.data(), best.size());
        }
    return best;
}

double lebesgue_norm(const GridFunction& f, double p, const GridFunction* w) {
    require(p > 0.0, "NonFinite", "lebesgue_norm requires p > 0");
    if (w) require(w->same_grid(f), "GridMismatch", "weight grid mismatch");
    const double s = kernels::block_pow_sum(f.values.data(), w ? w->values.data() : nullptr,
                                            f.size(), p);
    return std::pow(s * f.cell_volume(), 1.0 / p);
}

double truncation_energy_fraction(const GridFunction& f, const CalderonPair& p,
                                  ScaleWindow w) {
    GridFunction freq(f.shape, fftutil::dual_halfwidth(f), Domain::Frequency);
    const fftutil::cvec F = fftutil::analyze(f);
    std::vector<double> total(F.size()), outside(F.size());
    kernels::for_each_index(F.size(), [&](std::size_t i) {
        double xi[8];
        freq.point_at(i, xi);
        const double e = std::norm(F[i]);
        double cover = 0.0;
        for (int k = w.lo; k <= w.hi; ++k)
            cover += p.psi_hat_scaled_at(xi, k);  // psi == phi^2, sums to 1 over Z
        total[i] = e;
        outside[i] = e * std::max(0.0, 1.0 - std::min(1.0, cover));
    });
    const double te = kernels::block_sum(total.data(), total.size());
    if (te == 0.0) return 0.0;
    return kernels::block_sum(outside.data(), outside.size()) / te;
}

double truncation_energy_fraction_product(const GridFunction& f, const CalderonPair& p1,
                                          const CalderonPair& p2, ScaleWindow w1,
                                          ScaleWindow w2) {
    GridFunction freq(f.shape, fftutil::dual_halfwidth(f), Domain::Frequency);
    const int n1 = p1.dilation().dim();
    const fftutil::cvec F = fftutil::analyze(f);
    std::vector<double> total(F.size()), outside(F.size());
    kernels::for_each_index(F.size(), [&](std::size_t i) {
        double xi[8];
        freq.point_at(i, xi);
        const double e = std::norm(F[i]);
        double c1 = 0.0, c2 = 0.0;
        for (int k = w1.lo; k <= w1.hi; ++k) c1 += p1.psi_hat_scaled_at(xi, k);
        for (int k = w2.lo; k <= w2.hi; ++k) c2 += p2.psi_hat_scaled_at(xi + n1, k);
        const double cover = std::min(1.0, c1) * std::min(1.0, c2);
        total[i] = e;
        outside[i] = e * std::max(0.0, 1.0 - cover);
    });
    const double te = kernels::block_sum(total.data(), total.size());
    if (te == 0.0) return 0.0;
    return kernels::block_sum(outside.data(), outside.size()) / te;
}

}  // namespace aniso
