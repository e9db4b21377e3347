#pragma once

#include "aniso/dilation.hpp"
#include "aniso/fft.hpp"
#include "aniso/grid.hpp"

namespace aniso {

// Shell cutoff profile: rises on t in [-1,0], flat 1 on [0,1], falls on [1,2].
enum class ShellProfile { Poly7, SmoothExp };

// Normalization of the pair identity sum_j psi_hat theta_hat((A*)^j xi) = 1.
enum class PairVariant { Symmetric, PlainTheta };

// Calderon filter pair on the frequency grid of a dilation: theta_hat,
// psi_hat and the square-root factor phi_hat with phi_hat^2 = psi_hat.
// All three are functions of the continuous shell coordinate t of the
// transpose dilation, so the partition identity holds at every nonzero
// frequency, with residual at roundoff level.
class CalderonPair {
public:
    const Dilation& dilation() const { return dil_; }
    const Dilation& dual() const { return dual_; }
    int moment_order() const { return moment_order_; }
    double identity_residual() const { return identity_residual_; }
    int scale_lo() const { return scale_lo_; }      // certified scale window
    int scale_hi() const { return scale_hi_; }
    const GridFunction& psi_hat() const { return psi_hat_; }
    const GridFunction& theta_hat() const { return theta_hat_; }
    const GridFunction& phi_hat() const { return phi_hat_; }

    // Continuous dual shell coordinate (large negative at xi = 0).
    double level_at(const double* xi) const;

    double psi_hat_at(const double* xi) const;
    double theta_hat_at(const double* xi) const;
    double phi_hat_at(const double* xi) const;

    // The same evaluators precomposed with (A*)^k (the spectrum of the
    // L^1-normalized dilate phi_k).
    double phi_hat_scaled_at(const double* xi, int k) const;
    double psi_hat_scaled_at(const double* xi, int k) const;

    // Inverse transforms of the sampled spectra on the given space grid.
    GridFunction psi_space(const GridFunction& like) const;
    GridFunction phi_space(const GridFunction& like) const;
    GridFunction theta_space(const GridFunction& like) const;

    friend CalderonPair build_calderon_pair(const Dilation& d, int moment_order,
                                            const GridFunction& space_grid, double tol,
                                            PairVariant variant, ShellProfile profile);

private:
    CalderonPair(Dilation d, Dilation dual) : dil_(std::move(d)), dual_(std::move(dual)) {}

    double profile_value(double t) const;
    double partition_sum_sq(double t) const;

    Dilation dil_, dual_;
    int moment_order_ = 0;
    PairVariant variant_ = PairVariant::Symmetric;
    ShellProfile profile_ = ShellProfile::SmoothExp;
    GridFunction psi_hat_, theta_hat_, phi_hat_;
    int scale_lo_ = 0, scale_hi_ = 0;
    double identity_residual_ = 0.0;
};

CalderonPair build_calderon_pair(const Dilation& d, int moment_order,
                                 const GridFunction& space_grid, double tol = 1e-8,
                                 PairVariant variant = PairVariant::Symmetric,
                                 ShellProfile profile = ShellProfile::SmoothExp);

// Max absolute quadrature moment |int x^gamma f dx| over |gamma| <= order.
double moment_check(const GridFunction& f, int order);

// Min |theta_hat| over grid frequencies with dual quasi-norm in [shell_lo, shell_hi].
double annulus_lower_bound_check(const CalderonPair& pair, double shell_lo, double shell_hi);

}  // namespace aniso
