#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <string>

#include "aniso/common.hpp"

namespace aniso {

// Expansive dilation with its derived calculus: determinant b, spectral
// bounds, the Lyapunov ellipsoid Delta = {x : x'Px < c} with |Delta| = 1,
// the expansion ratio r with Delta subset rDelta subset ADelta, and the
// ball-sum constant sigma (minimal integer with 2B_0 subset A^sigma B_0).
// Immutable after construction; all queries are pure.
class Dilation {
public:
    static Dilation make(const Eigen::MatrixXd& matrix, double spectral_slack = 1e-6);

    int dim() const { return n_; }
    const Eigen::MatrixXd& matrix() const { return A_; }
    const Eigen::MatrixXd& inverse() const { return Ainv_; }
    double det_abs() const { return b_; }
    double lambda_minus() const { return lambda_minus_; }
    double lambda_plus() const { return lambda_plus_; }
    double zeta_minus() const { return zeta_minus_; }
    double zeta_plus() const { return zeta_plus_; }
    const Eigen::MatrixXd& ellipsoid_form() const { return P_; }
    double ellipsoid_level() const { return c_; }
    double expansion_ratio() const { return r_; }
    int sigma() const { return sigma_; }

    // x in B_k = A^k Delta.
    bool ball_membership(const Eigen::VectorXd& x, int k) const;

    // Step homogeneous quasi-norm: 0 at 0, b^k on B_{k+1} \ B_k.
    double quasi_norm(const Eigen::VectorXd& x) const;

    // Shell index: the k with x in B_{k+1} \ B_k (rho(x) = b^k). x must be nonzero.
    int shell_index(const Eigen::VectorXd& x) const;

    // Continuous shell coordinate t with t(Ax) = t(x) + 1 and t in [k, k+1)
    // exactly when rho(x) = b^k; log-interpolates the Lyapunov form between
    // consecutive integer levels (globally smooth for scalar dilations).
    double continuous_level(const Eigen::VectorXd& x) const;

    // Quadratic form of the dilated ball: x in B_k iff x' ball_form(k) x < level.
    Eigen::MatrixXd ball_form(int k) const;

    // x' P x evaluated at A^{-k} x without forming the matrix power.
    double level_form(const Eigen::VectorXd& x, int k) const;

    // A^k x by iterated application.
    Eigen::VectorXd pow_apply(int k, const Eigen::VectorXd& x) const;

    // Uniform sample from B_k (rejection from the ellipsoid bounding box).
    Eigen::VectorXd sample_ball(int k, std::mt19937_64& rng) const;
    // Uniform sample from B_outer \ B_inner (requires inner < outer).
    Eigen::VectorXd sample_shell(int inner, int outer, std::mt19937_64& rng) const;
    // Point on the boundary of B_k in a random direction.
    Eigen::VectorXd boundary_point(int k, std::mt19937_64& rng) const;

    // JSON object {matrix, b, P, c, r, sigma, lambda_minus, lambda_plus},
    // matrices row-major, reals with 17 significant digits.
    std::string to_json() const;

private:
    Dilation() = default;

    int n_ = 0;
    Eigen::MatrixXd A_, Ainv_;
    double b_ = 0.0;
    double lambda_minus_ = 0.0, lambda_plus_ = 0.0;
    double zeta_minus_ = 0.0, zeta_plus_ = 0.0;
    Eigen::MatrixXd P_, P_inv_sqrt_;
    double c_ = 0.0;
    double r_ = 0.0;
    int sigma_ = 0;
};

struct BallSumReport {
    bool ok = true;
    Eigen::VectorXd witness_x, witness_y;  // populated on failure
};

// Samples x in B_k, y in B_l and checks x + y in B_{max(k,l)+sigma} (the
// ball-sum law), plus the complement form: x in B_k, y outside B_{k+sigma}
// implies x + y outside B_k.
BallSumReport check_ball_sum_law(const Dilation& d, int k, int l, int samples,
                                 std::mt19937_64& rng);

}  // namespace aniso
