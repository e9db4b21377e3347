#pragma once

#include <optional>

#include "aniso/dilation.hpp"
#include "aniso/grid.hpp"
#include "aniso/weights.hpp"

namespace aniso {

// Dyadic-cube grid for dilations conjugate to an integer diagonal matrix:
// A = S diag(m) S^-1 with m_i >= 2. Level-k cells are S-images of the
// per-axis m_i^-k product grid; the sandwich constants (v, u) satisfy
// x_Q + B_{vk-u} subset Q subset x + B_{vk+u} with v = -1.
class DyadicGrid {
public:
    struct Cube {
        int level = 0;
        std::vector<long long> alpha;
        Eigen::VectorXd center;
    };

    const Dilation& dilation() const { return d_; }
    int v() const { return -1; }
    int u() const { return u_; }
    const std::vector<long long>& factors() const { return m_; }

    Cube cube(int level, const std::vector<long long>& alpha) const;
    Cube cube_containing(const Eigen::VectorXd& x, int level) const;
    bool contains(const Cube& q, const Eigen::VectorXd& x) const;

    friend DyadicGrid christ_cubes(const Dilation& d,
                                   const std::optional<Eigen::MatrixXd>& conjugation);

private:
    explicit DyadicGrid(Dilation d) : d_(std::move(d)) {}

    Dilation d_;
    Eigen::MatrixXd S_, Sinv_;
    std::vector<long long> m_;
    int u_ = 0;
};

// Constructive branch only: throws NotAdmissible for dilations that are not
// (supplied-S)-conjugate to an integer diagonal matrix with entries >= 2.
DyadicGrid christ_cubes(const Dilation& d,
                        const std::optional<Eigen::MatrixXd>& conjugation = std::nullopt);

struct AtomCertificate {
    bool support_ok = false;
    bool moments_ok = false;
    bool norm_ok = false;
    bool trivial = false;
    double max_moment_residual = 0.0;  // relative, independent quadrature pass
    double norm_residual = 0.0;
};

struct RectAtom {
    DyadicGrid::Cube R1, R2;
    int supp_index1 = 0, supp_index2 = 0;  // ball indices of R''_i
    GridFunction samples;
    double p = 1.0, q = 2.0;
    int s1 = 0, s2 = 0;
    double weighted_measure = 0.0;  // w(R)
    double target_norm = 0.0;       // w(R)^{1/q - 1/p}
    AtomCertificate cert;
};

// Restricts f to R'' = product of translated dilated balls, removes factor
// slice moments up to s_i (x1 slices first, then x2), rescales to saturate
// the L^q_w bound, and certifies.
RectAtom make_rectangular_atom(const GridFunction& f, const DyadicGrid& g1,
                               const DyadicGrid& g2, const DyadicGrid::Cube& R1,
                               const DyadicGrid::Cube& R2, double p, double q, int s1,
                               int s2, const WeightField& w, double q_w_bracket);

// Enlargement geometry R_{i,gamma}: ball index v_i(l_i - 1) + u_i + 5 sigma_i + gamma.
struct Enlargement {
    Eigen::VectorXd center1, center2;
    int index1 = 0, index2 = 0;
};
Enlargement enlargements(const RectAtom& atom, const DyadicGrid& g1, const DyadicGrid& g2,
                         int gamma);

// Indicator of the complement of R_{1,gamma} x R_{2,gamma} on the atom grid.
GridFunction outside_enlargement_mask(const GridFunction& like, const DyadicGrid& g1,
                                      const DyadicGrid& g2, const RectAtom& atom,
                                      int gamma);

}  // namespace aniso
