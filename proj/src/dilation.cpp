#include "aniso/dilation.hpp"

#include <cstdio>
#include <sstream>

namespace aniso {

namespace {

constexpr int kMaxShellSearch = 6000;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string matrix_json(const Eigen::MatrixXd& m) {
    std::ostringstream os;
    os << "[";
    for (int i = 0; i < m.rows(); ++i) {
        if (i) os << ",";
        os << "[";
        for (int j = 0; j < m.cols(); ++j) {
            if (j) os << ",";
            os << fmt17(m(i, j));
        }
        os << "]";
    }
    os << "]";
    return os.str();
}

}  // namespace

Dilation Dilation::make(const Eigen::MatrixXd& matrix, double spectral_slack) {
    require(matrix.rows() == matrix.cols() && matrix.rows() >= 1, "NonFinite",
            "dilation matrix must be square and nonempty");
    require(matrix.allFinite(), "NonFinite", "dilation matrix has NaN/Inf entries");

    Dilation d;
    d.n_ = static_cast<int>(matrix.rows());
    d.A_ = matrix;

    Eigen::EigenSolver<Eigen::MatrixXd> es(matrix);
    const auto eig = es.eigenvalues();
    double lo = eig.cwiseAbs().minCoeff();
    double hi = eig.cwiseAbs().maxCoeff();
    require(lo > 1.0 + 1e-12, "NotExpansive",
            "eigenvalue modulus " + std::to_string(lo) + " <= 1");

    d.Ainv_ = matrix.inverse();
    d.b_ = std::fabs(matrix.determinant());

    d.lambda_minus_ = (1.0 - spectral_slack) * lo;
    if (d.lambda_minus_ <= 1.0) d.lambda_minus_ = 0.5 * (1.0 + lo);
    d.lambda_plus_ = (1.0 + spectral_slack) * hi;
    d.zeta_minus_ = std::log(d.lambda_minus_) / std::log(d.b_);
    d.zeta_plus_ = std::log(d.lambda_plus_) / std::log(d.b_);

    // Lyapunov series P = sum_j (A^-T)^j (A^-1)^j, so A^-T P A^-1 = P - I.
    const Eigen::MatrixXd AinvT = d.Ainv_.transpose();
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(d.n_, d.n_);
    Eigen::MatrixXd P = term;
    for (int j = 0; j < 200000; ++j) {
        term = AinvT * term * d.Ainv_;
        P += term;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(term);
        if (se.eigenvalues().cwiseAbs().maxCoeff() < 1e-14) break;
    }
    P = 0.5 * (P + P.transpose().eval());
    d.P_ = P;

    // |Delta| = c^{n/2} omega_n / sqrt(det P) = 1.
    d.c_ = std::pow(std::sqrt(P.determinant()) / unit_ball_volume(d.n_), 2.0 / d.n_);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> pe(P);
    const double pmax = pe.eigenvalues().maxCoeff();
    d.r_ = std::sqrt(pmax / (pmax - 1.0)) * (1.0 - 1e-9);
    d.P_inv_sqrt_ = pe.operatorInverseSqrt();

    // sigma: smallest s with 4 lmax(P^-1/2 (A^-s)' P A^-s P^-1/2) <= 1.
    Eigen::MatrixXd Apow = d.Ainv_;
    for (int s = 1; s <= 200; ++s) {
        const Eigen::MatrixXd M =
            d.P_inv_sqrt_ * Apow.transpose() * P * Apow * d.P_inv_sqrt_;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> me(M);
        if (4.0 * me.eigenvalues().maxCoeff() <= 1.0) {
            d.sigma_ = s;
            break;
        }
        Apow = Apow * d.Ainv_;
    }
    require(d.sigma_ >= 1, "NotExpansive", "sigma search failed");
    return d;
}

Eigen::VectorXd Dilation::pow_apply(int k, const Eigen::VectorXd& x) const {
    Eigen::VectorXd y = x;
    const Eigen::MatrixXd& M = k >= 0 ? A_ : Ainv_;
    for (int i = 0; i < std::abs(k); ++i) y = M * y;
    return y;
}

double Dilation::level_form(const Eigen::VectorXd& x, int k) const {
    const Eigen::VectorXd y = pow_apply(-k, x);
    return y.dot(P_ * y);
}

bool Dilation::ball_membership(const Eigen::VectorXd& x, int k) const {
    return level_form(x, k) < c_;
}

Eigen::MatrixXd Dilation::ball_form(int k) const {
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n_, n_);
    const Eigen::MatrixXd& S = k >= 0 ? Ainv_ : A_;
    for (int i = 0; i < std::abs(k); ++i) M = S * M;
    return M.transpose() * P_ * M;
}

int Dilation::shell_index(const Eigen::VectorXd& x) const {
    require(x.norm() > 0.0, "NonFinite", "shell_index of the origin");
    // minimal member level m (x in B_m): shell index is m - 1
    int m;
    if (ball_membership(x, 0)) {
        int step = 1, lo = 0;
        while (ball_membership(x, lo - step)) {
            lo -= step;
            step *= 2;
            require(lo > -kMaxShellSearch, "NonFinite", "shell search underflow");
        }
        // lo member, lo-step not; binary search minimal member in (lo-step, lo]
        int bad = lo - step, good = lo;
        while (good - bad > 1) {
            const int mid = bad + (good - bad) / 2;
            (ball_membership(x, mid) ? good : bad) = mid;
        }
        m = good;
    } else {
        int step = 1, hi = 0;
        while (!ball_membership(x, hi + step)) {
            hi += step;
            step *= 2;
            require(hi < kMaxShellSearch, "NonFinite", "shell search overflow");
        }
        int bad = hi, good = hi + step;
        while (good - bad > 1) {
            const int mid = bad + (good - bad) / 2;
            (ball_membership(x, mid) ? good : bad) = mid;
        }
        m = good;
    }
    return m - 1;
}

double Dilation::quasi_norm(const Eigen::VectorXd& x) const {
    if (x.norm() == 0.0) return 0.0;
    return std::pow(b_, shell_index(x));
}

double Dilation::continuous_level(const Eigen::VectorXd& x) const {
    const int k = shell_index(x);
    const double gk = level_form(x, k);        // >= c
    const double gk1 = level_form(x, k + 1);   // < c
    double theta = 0.0;
    if (gk > gk1 && gk > 0.0 && gk1 > 0.0)
        theta = std::log(gk / c_) / std::log(gk / gk1);
    if (theta < 0.0) theta = 0.0;
    if (theta >= 1.0) theta = std::nextafter(1.0, 0.0);
    return k + theta;
}

Eigen::VectorXd Dilation::sample_ball(int k, std::mt19937_64& rng) const {
    // axis-aligned bounding box of Delta: half-extent sqrt(c * (P^-1)_ii)
    const Eigen::MatrixXd Pinv = P_.inverse();
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int tries = 0; tries < 100000; ++tries) {
        Eigen::VectorXd u(n_);
        for (int i = 0; i < n_; ++i) u[i] = uni(rng) * std::sqrt(c_ * Pinv(i, i));
        if (u.dot(P_ * u) < c_) return pow_apply(k, u);
    }
    fail("NonFinite", "ellipsoid rejection sampling failed");
}

Eigen::VectorXd Dilation::sample_shell(int inner, int outer, std::mt19937_64& rng) const {
    require(inner < outer, "NonFinite", "sample_shell requires inner < outer");
    for (int tries = 0; tries < 100000; ++tries) {
        Eigen::VectorXd x = sample_ball(outer, rng);
        if (!ball_membership(x, inner)) return x;
    }
    fail("NonFinite", "shell rejection sampling failed");
}

Eigen::VectorXd Dilation::boundary_point(int k, std::mt19937_64& rng) const {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd u(n_);
    do {
        for (int i = 0; i < n_; ++i) u[i] = gauss(rng);
    } while (u.norm() == 0.0);
    u.normalize();
    // sqrt(c) P^-1/2 u lies on the boundary of Delta
    return pow_apply(k, std::sqrt(c_) * (P_inv_sqrt_ * u));
}

std::string Dilation::to_json() const {
    std::ostringstream os;
    os << "{\"matrix\":" << matrix_json(A_) << ",\"b\":" << fmt17(b_)
       << ",\"P\":" << matrix_json(P_) << ",\"c\":" << fmt17(c_)
       << ",\"r\":" << fmt17(r_) << ",\"sigma\":" << sigma_
       << ",\"lambda_minus\":" << fmt17(lambda_minus_)
       << ",\"lambda_plus\":" << fmt17(lambda_plus_) << "}";
    return os.str();
}

BallSumReport check_ball_sum_law(const Dilation& d, int k, int l, int samples,
                                 std::mt19937_64& rng) {
    require(samples >= 1, "NonFinite", "samples >= 1 required");
    BallSumReport rep;
    const int sum_level = std::max(k, l) + d.sigma();
    for (int s = 0; s < samples; ++s) {
        const Eigen::VectorXd x = d.sample_ball(k, rng);
        const Eigen::VectorXd y = d.sample_ball(l, rng);
        if (!d.ball_membership(x + y, sum_level)) {
            rep.ok = false;
            rep.witness_x = x;
            rep.witness_y = y;
            return rep;
        }
        // complement law: x in B_k, y outside B_{k+sigma} => x + y outside B_k
        const Eigen::VectorXd z = d.sample_shell(k + d.sigma(), k + d.sigma() + 3, rng);
        if (d.ball_membership(x + z, k)) {
            rep.ok = false;
            rep.witness_x = x;
            rep.witness_y = z;
            return rep;
        }
    }
    return rep;
}

}  // namespace aniso
