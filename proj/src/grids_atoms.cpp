#include "aniso/grids_atoms.hpp"

#include <cmath>

#include "aniso/kernels.hpp"
#include "aniso/transforms.hpp"

namespace aniso {

namespace {

bool near_integer(double v, long long* out) {
    const double r = std::round(v);
    if (std::fabs(v - r) > 1e-9) return false;
    *out = static_cast<long long>(r);
    return true;
}

}  // namespace

DyadicGrid christ_cubes(const Dilation& d,
                        const std::optional<Eigen::MatrixXd>& conjugation) {
    DyadicGrid g(d);
    const int n = d.dim();
    g.S_ = conjugation.value_or(Eigen::MatrixXd::Identity(n, n));
    require(std::fabs(g.S_.determinant()) > 1e-12, "NotAdmissible",
            "conjugation matrix is singular");
    g.Sinv_ = g.S_.inverse();

    const Eigen::MatrixXd D = g.Sinv_ * d.matrix() * g.S_;
    g.m_.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            require(std::fabs(D(i, j)) <= 1e-9, "NotAdmissible",
                    "dilation is not conjugate-diagonal under the given S");
        }
        require(near_integer(D(i, i), &g.m_[i]) && g.m_[i] >= 2, "NotAdmissible",
                "diagonal entry " + std::to_string(D(i, i)) + " is not an integer >= 2");
    }

    // smallest u with B_-u inside the centered level-0 cell and the cell
    // difference set inside B_u (exact transfer to all levels)
    for (int u = 1; u <= 64; ++u) {
        bool ok = true;
        const Eigen::MatrixXd Qin = d.ball_form(-u);
        const Eigen::MatrixXd Qin_inv = Qin.inverse();
        for (int i = 0; i < n && ok; ++i) {
            const Eigen::VectorXd row = g.Sinv_.row(i);
            const double reach =
                std::sqrt(std::max(0.0, d.ellipsoid_level() * row.dot(Qin_inv * row)));
            if (reach >= 0.5) ok = false;
        }
        if (ok) {
            const Eigen::MatrixXd Qout = d.ball_form(u);
            for (long long mask = 0; mask < (1LL << n) && ok; ++mask) {
                Eigen::VectorXd corner(n);
                for (int i = 0; i < n; ++i) corner[i] = (mask >> i) & 1 ? 1.0 : -1.0;
                const Eigen::VectorXd x = g.S_ * corner;
                if (x.dot(Qout * x) > d.ellipsoid_level()) ok = false;
            }
        }
        if (ok) {
            g.u_ = u;
            return g;
        }
    }
    fail("NotAdmissible", "sandwich constant u not found below 64");
}

DyadicGrid::Cube DyadicGrid::cube(int level, const std::vector<long long>& alpha) const {
    require(static_cast<int>(alpha.size()) == d_.dim(), "GridMismatch",
            "cube index arity mismatch");
    Cube q;
    q.level = level;
    q.alpha = alpha;
    Eigen::VectorXd y(d_.dim());
    for (int i = 0; i < d_.dim(); ++i)
        y[i] = (alpha[i] + 0.5) * std::pow(static_cast<double>(m_[i]), -level);
    q.center = S_ * y;
    return q;
}

DyadicGrid::Cube DyadicGrid::cube_containing(const Eigen::VectorXd& x, int level) const {
    const Eigen::VectorXd y = Sinv_ * x;
    std::vector<long long> alpha(d_.dim());
    for (int i = 0; i < d_.dim(); ++i)
        alpha[i] = static_cast<long long>(
            std::floor(y[i] * std::pow(static_cast<double>(m_[i]), level)));
    return cube(level, alpha);
}

bool DyadicGrid::contains(const Cube& q, const Eigen::VectorXd& x) const {
    const Eigen::VectorXd y = Sinv_ * x;
    for (int i = 0; i < d_.dim(); ++i) {
        const double side = std::pow(static_cast<double>(m_[i]), -q.level);
        const double lo = q.alpha[i] * side;
        if (y[i] < lo || y[i] >= lo + side) return false;
    }
    return true;
}

namespace {

// factor node list: flat subgrid indices and coordinates of grid nodes whose
// offset from `center` lies in B_index
struct FactorNodeSet {
    std::vector<std::size_t> flat;          // row-major over the factor axes
    std::vector<Eigen::VectorXd> offset;    // y - center
    std::size_t subgrid_size = 1;
};

FactorNodeSet ball_nodes(const GridFunction& grid, int axis0, int n_axes,
                         const Dilation& d, const Eigen::VectorXd& center, int index) {
    FactorNodeSet out;
    const Eigen::MatrixXd Q = d.ball_form(index);
    const double c = d.ellipsoid_level();
    std::size_t total = 1;
    for (int a = 0; a < n_axes; ++a) total *= grid.shape[axis0 + a];
    out.subgrid_size = total;
    for (std::size_t f = 0; f < total; ++f) {
        std::size_t r = f;
        Eigen::VectorXd y(n_axes);
        for (int a = n_axes - 1; a >= 0; --a) {
            const int idx = static_cast<int>(r % grid.shape[axis0 + a]);
            r /= grid.shape[axis0 + a];
            y[a] = grid.coord(axis0 + a, idx);
        }
        const Eigen::VectorXd off = y - center;
        if (off.dot(Q * off) < c) {
            out.flat.push_back(f);
            out.offset.push_back(off);
        }
    }
    return out;
}

// discrete Gram-Schmidt polynomial basis up to degree s on the node offsets
std::vector<std::vector<double>> poly_basis(const FactorNodeSet& nodes, int n_axes, int s) {
    const auto betas = multi_indices_up_to(n_axes, s);
    std::vector<std::vector<double>> basis;
    for (const auto& beta : betas) {
        std::vector<double> v(nodes.flat.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            double mono = 1.0;
            for (int a = 0; a < n_axes; ++a)
                for (int p = 0; p < beta[a]; ++p) mono *= nodes.offset[i][a];
            v[i] = mono;
        }
        for (const auto& q : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) dot += v[i] * q[i];
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * q[i];
        }
        double nrm = 0.0;
        for (double x : v) nrm += x * x;
        nrm = std::sqrt(nrm);
        require(nrm > 1e-12, "DegenerateRectangle",
                "atom support cannot carry the requested moment order");
        for (double& x : v) x /= nrm;
        basis.push_back(std::move(v));
    }
    return basis;
}

}  // namespace

RectAtom make_rectangular_atom(const GridFunction& f, const DyadicGrid& g1,
                               const DyadicGrid& g2, const DyadicGrid::Cube& R1,
                               const DyadicGrid::Cube& R2, double p, double q, int s1,
                               int s2, const WeightField& w, double q_w_bracket) {
    const Dilation& d1 = g1.dilation();
    const Dilation& d2 = g2.dilation();
    const int n1 = d1.dim(), n2 = d2.dim();
    require(f.dim() == n1 + n2, "GridMismatch", "field not on the product grid");
    require(w.samples.same_grid(f), "GridMismatch", "weight grid mismatch");

    // admissibility of the triplet
    require(p > 0.0 && p <= 1.0, "NonFinite", "p must lie in (0,1]");
    require(q >= 2.0 && q > q_w_bracket, "NonFinite",
            "q must lie in [2,inf) and exceed q_w");
    const auto s_floor = [&](const Dilation& d) {
        return static_cast<int>(std::ceil((q_w_bracket / p - 1.0) / d.zeta_minus()));
    };
    require(s1 >= s_floor(d1) && s2 >= s_floor(d2), "NonFinite",
            "moment orders below the admissibility bound");

    RectAtom atom;
    atom.R1 = R1;
    atom.R2 = R2;
    atom.p = p;
    atom.q = q;
    atom.s1 = s1;
    atom.s2 = s2;
    atom.supp_index1 = -(R1.level - 1) + g1.u() + 3 * d1.sigma();
    atom.supp_index2 = -(R2.level - 1) + g2.u() + 3 * d2.sigma();

    const FactorNodeSet nodes1 = ball_nodes(f, 0, n1, d1, R1.center, atom.supp_index1);
    const FactorNodeSet nodes2 = ball_nodes(f, n1, n2, d2, R2.center, atom.supp_index2);
    // enough nodes per axis for the moment projections
    require(static_cast<int>(nodes1.flat.size()) >= s1 + 1 &&
                static_cast<int>(nodes2.flat.size()) >= s2 + 1,
            "DegenerateRectangle", "support rectangle has too few grid nodes");

    // restrict f to R''
    atom.samples = GridFunction::like(f);
    const std::size_t size2 = nodes2.subgrid_size;
    for (std::size_t i1 : nodes1.flat)
        for (std::size_t i2 : nodes2.flat)
            atom.samples.values[i1 * size2 + i2] = f.values[i1 * size2 + i2];

    // factor-1 slice projections, then factor-2 (the second preserves the first)
    const auto basis1 = poly_basis(nodes1, n1, s1);
    for (std::size_t j = 0; j < nodes2.flat.size(); ++j) {
        const std::size_t i2 = nodes2.flat[j];
        for (const auto& b : basis1) {
            double dot = 0.0;
            for (std::size_t i = 0; i < nodes1.flat.size(); ++i)
                dot += b[i] * atom.samples.values[nodes1.flat[i] * size2 + i2];
            for (std::size_t i = 0; i < nodes1.flat.size(); ++i)
                atom.samples.values[nodes1.flat[i] * size2 + i2] -= dot * b[i];
        }
    }
    const auto basis2 = poly_basis(nodes2, n2, s2);
    for (std::size_t i = 0; i < nodes1.flat.size(); ++i) {
        const std::size_t i1 = nodes1.flat[i];
        for (const auto& b : basis2) {
            double dot = 0.0;
            for (std::size_t j = 0; j < nodes2.flat.size(); ++j)
                dot += b[j] * atom.samples.values[i1 * size2 + nodes2.flat[j]];
            for (std::size_t j = 0; j < nodes2.flat.size(); ++j)
                atom.samples.values[i1 * size2 + nodes2.flat[j]] -= dot * b[j];
        }
    }

    // w(R) over the dyadic rectangle itself
    {
        std::vector<double> acc(f.size(), 0.0);
        kernels::for_each_index(f.size(), [&](std::size_t i) {
            double x[8];
            f.point_at(i, x);
            Eigen::Map<const Eigen::VectorXd> x1(x, n1);
            Eigen::Map<const Eigen::VectorXd> x2(x + n1, n2);
            if (g1.contains(R1, x1) && g2.contains(R2, x2))
                acc[i] = w.samples.values[i];
        });
        atom.weighted_measure = kernels::block_sum(acc.data(), acc.size()) * f.cell_volume();
    }
    require(atom.weighted_measure > 0.0, "DegenerateRectangle",
            "rectangle carries no weighted mass on this grid");
    atom.target_norm = std::pow(atom.weighted_measure, 1.0 / q - 1.0 / p);

    const double current = lebesgue_norm(atom.samples, q, &w.samples);
    if (current == 0.0) {
        atom.cert.trivial = true;
        atom.cert.support_ok = true;
        atom.cert.moments_ok = true;
        atom.cert.norm_ok = true;
        return atom;
    }
    kernels::scale(atom.samples.values.data(), atom.samples.size(),
                   atom.target_norm / current);

    // certificate: independent re-derivation of the three conditions
    atom.cert.support_ok = true;
    {
        std::vector<char> in1(nodes1.subgrid_size, 0), in2(nodes2.subgrid_size, 0);
        for (std::size_t i : nodes1.flat) in1[i] = 1;
        for (std::size_t j : nodes2.flat) in2[j] = 1;
        for (std::size_t i1 = 0; i1 < nodes1.subgrid_size && atom.cert.support_ok; ++i1)
            for (std::size_t i2 = 0; i2 < size2; ++i2)
                if (!(in1[i1] && in2[i2]) && atom.samples.values[i1 * size2 + i2] != 0.0) {
                    atom.cert.support_ok = false;
                    break;
                }
    }
    double worst_moment = 0.0;
    {
        // reversed-order accumulation as the independent quadrature pass
        const auto betas1 = multi_indices_up_to(n1, s1);
        for (std::size_t j = 0; j < nodes2.flat.size(); ++j) {
            const std::size_t i2 = nodes2.flat[j];
            for (const auto& beta : betas1) {
                double m = 0.0, l1 = 0.0;
                for (std::size_t ii = nodes1.flat.size(); ii-- > 0;) {
                    double mono = 1.0;
                    for (int a = 0; a < n1; ++a)
                        for (int pw = 0; pw < beta[a]; ++pw)
                            mono *= nodes1.offset[ii][a];
                    const double v = mono * atom.samples.values[nodes1.flat[ii] * size2 + i2];
                    m += v;
                    l1 += std::fabs(v);
                }
                if (l1 > 0.0) worst_moment = std::max(worst_moment, std::fabs(m) / l1);
            }
        }
        const auto betas2 = multi_indices_up_to(n2, s2);
        for (std::size_t i = 0; i < nodes1.flat.size(); ++i) {
            const std::size_t i1 = nodes1.flat[i];
            for (const auto& beta : betas2) {
                double m = 0.0, l1 = 0.0;
                for (std::size_t jj = nodes2.flat.size(); jj-- > 0;) {
                    double mono = 1.0;
                    for (int a = 0; a < n2; ++a)
                        for (int pw = 0; pw < beta[a]; ++pw)
                            mono *= nodes2.offset[jj][a];
                    const double v = mono * atom.samples.values[i1 * size2 + nodes2.flat[jj]];
                    m += v;
                    l1 += std::fabs(v);
                }
                if (l1 > 0.0) worst_moment = std::max(worst_moment, std::fabs(m) / l1);
            }
        }
    }
    atom.cert.max_moment_residual = worst_moment;
    atom.cert.moments_ok = worst_moment <= 1e-10;
    const double renorm = lebesgue_norm(atom.samples, q, &w.samples);
    atom.cert.norm_residual = std::fabs(renorm - atom.target_norm) / atom.target_norm;
    atom.cert.norm_ok = atom.cert.norm_residual <= 1e-10;
    return atom;
}

Enlargement enlargements(const RectAtom& atom, const DyadicGrid& g1, const DyadicGrid& g2,
                         int gamma) {
    require(gamma >= 0, "NonFinite", "gamma must be nonnegative");
    Enlargement e;
    e.center1 = atom.R1.center;
    e.center2 = atom.R2.center;
    e.index1 = -(atom.R1.level - 1) + g1.u() + 5 * g1.dilation().sigma() + gamma;
    e.index2 = -(atom.R2.level - 1) + g2.u() + 5 * g2.dilation().sigma() + gamma;
    return e;
}

GridFunction outside_enlargement_mask(const GridFunction& like, const DyadicGrid& g1,
                                      const DyadicGrid& g2, const RectAtom& atom,
                                      int gamma) {
    const Enlargement e = enlargements(atom, g1, g2, gamma);
    const int n1 = g1.dilation().dim();
    const Eigen::MatrixXd Q1 = g1.dilation().ball_form(e.index1);
    const Eigen::MatrixXd Q2 = g2.dilation().ball_form(e.index2);
    const double c1 = g1.dilation().ellipsoid_level();
    const double c2 = g2.dilation().ellipsoid_level();
    GridFunction mask = GridFunction::like(like);
    kernels::for_each_index(mask.size(), [&](std::size_t i) {
        double x[8];
        mask.point_at(i, x);
        Eigen::Map<const Eigen::VectorXd> x1(x, n1);
        Eigen::Map<const Eigen::VectorXd> x2(x + n1, like.dim() - n1);
        const Eigen::VectorXd o1 = x1 - e.center1;
        const Eigen::VectorXd o2 = x2 - e.center2;
        const bool inside = o1.dot(Q1 * o1) < c1 && o2.dot(Q2 * o2) < c2;
        mask.values[i] = inside ? 0.0 : 1.0;
    });
    return mask;
}

}  // namespace aniso
