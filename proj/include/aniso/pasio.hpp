#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>

#include "aniso/bump.hpp"
#include "aniso/dilation.hpp"
#include "aniso/grid.hpp"

namespace aniso {

using KernelEval =
    std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>;

// Product singular-integral kernel on Omega_{n x m} = points with both
// factors nonzero; the evaluator is never called on the singular set.
struct KernelModel {
    Dilation d1, d2;
    KernelEval eval;
    int s1 = 0, s2 = 0;    // declared regularity orders
    int N1 = 3, N2 = 3;    // bump orders entering (K2)/(K3)
    double eps1 = 0.0, eps2 = 0.0;
    double C1 = 1.0;       // declared constant; reports fit, never assert
    std::string family;
    double min_rho1 = 0.0, min_rho2 = 0.0;  // sampling floor (sampled kernels)
};

// Bounded, dilation-periodic, shell-mean-zero profile on one factor.
using ProfileEval = std::function<double(const Eigen::VectorXd&)>;

// K(x1,x2) = P1(x1) P2(x2) / (rho1(x1) rho2(x2)). Profiles are validated:
// dilation-periodic to 1e-10 and shell-mean-zero to 1e-10 by quadrature.
KernelModel make_tensor_cz_kernel(const Dilation& d1, const Dilation& d2,
                                  const ProfileEval& profile1, const ProfileEval& profile2,
                                  const std::string& family_tag, int declared_s1 = 0,
                                  int declared_s2 = 0, bool continuous_norm = false);

// Registry: "tensorcz:profile=sign", "tensorcz:profile=logsine", "nocancel".
KernelModel kernel_from_spec(const std::string& spec, const Dilation& d1,
                             const Dilation& d2);

// Sampled product-grid kernel, multilinear interpolation, one-cell singular
// neighborhoods excluded from condition sampling via min_rho floors.
KernelModel sampled_kernel(const GridFunction& samples, const Dilation& d1,
                           const Dilation& d2);

struct SampleSpec {
    int shell_lo = -4;
    int shell_hi = 4;
    int per_shell = 6;
    std::uint64_t seed = 12345;
};

struct ConditionReport {
    std::string condition;
    double worst = 0.0;
    std::vector<double> worst_arg;  // concatenated (x1, x2) attaining the sup
    int samples = 0;
    bool pass = true;
    std::string note;
};

// (K1): rescaled-chart derivative bounds |d^a1 d^a2 K(A^l1., A^l2.)| rho1 rho2.
ConditionReport check_K1(const KernelModel& kern, int s1, int s2,
                         const SampleSpec& spec = {});

// (K2): bump pairings by PV shell quadrature with a geometric delta-ladder;
// throws PVNotConvergent when the ladder fails the Cauchy test.
struct K2Report {
    ConditionReport base;
    double cauchy_ratio = 0.0;  // max gap ratio across tail rungs
    std::vector<double> ladder;
};
K2Report check_K2(const KernelModel& kern, const std::vector<Bump>& bumps1,
                  const std::vector<Bump>& bumps2, int k_lo = -3, int k_hi = 3,
                  int quad_per_axis = 1024);

// One-parameter partial kernel x1 -> <K(x1, .), psi2(A^k2 .)> by PV
// quadrature with delta-extrapolation; values cached per point.
class PartialKernel {
public:
    PartialKernel(const KernelModel& kern, Bump psi2, int k2, int quad_per_axis = 4096);
    double operator()(const Eigen::VectorXd& x1) const;
    const Dilation& dilation() const { return kern_.d1; }

private:
    KernelModel kern_;
    Bump psi2_;
    int k2_;
    int quad_;
    struct Cache;
    std::shared_ptr<Cache> cache_;
};

// (K3): partial-kernel rescaled derivative bounds at order s1.
ConditionReport check_K3(const KernelModel& kern, const Bump& psi2, int k2, int s1,
                         const SampleSpec& spec = {});

// Definition-of-order-0 difference conditions (three displays + interchange).
ConditionReport check_difference_conditions(const KernelModel& kern, double eps1,
                                            double eps2, const SampleSpec& spec = {});

// Derived difference-of-top-derivative bounds (K1'), (K1''), (K3').
ConditionReport check_lemma_32_conditions(const KernelModel& kern, int s1, int s2,
                                          double eps1, double eps2,
                                          const SampleSpec& spec = {});

// Smoothed-kernel envelope: K * phi_{k1,k2} against the two-factor decay
// envelope, all four shell regimes sampled, far-field slopes fitted.
struct SmoothedKernelReport {
    ConditionReport base;
    std::array<double, 4> regime_sup{};  // (below,below),(below,above),(above,below),(above,above)
    double far_slope_1 = 0.0;            // d log|K*phi| / d l_1, expect -(1+eps1) log b1
    double far_slope_2 = 0.0;
};
SmoothedKernelReport smoothed_kernel_bound_check(const KernelModel& kern, const Bump& phi1,
                                                 int j1, const Bump& phi2, int j2, int k1,
                                                 int k2, double eps1, double eps2,
                                                 int quad_per_axis = 512);

// T f by FFT convolution with the shell-truncated kernel; the Cauchy gap
// compares delta against delta/b for PV convergence monitoring.
struct ApplyResult {
    GridFunction Tf;
    double cauchy_gap = 0.0;
};
ApplyResult apply_pasio(const KernelModel& kern, const GridFunction& f, double delta1,
                        double delta2, double gap_tol = 0.05);

}  // namespace aniso
