#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace aniso {

// Every failure mode named by the library carries a short machine-readable
// code (e.g. "NotExpansive", "PVNotConvergent") next to the human message.
// The CLI prints the code on stderr and exits 1.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool ok, const std::string& code, const std::string& what) {
    if (!ok) fail(code, what);
}

// Volume of the unit ball in R^n.
inline double unit_ball_volume(int n) {
    return std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

inline bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Multi-indices over Z_+^n with |alpha| <= order, graded lexicographic.
std::vector<std::vector<int>> multi_indices_up_to(int n, int order);

// Least-squares slope of y against x (returns {slope, intercept}).
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace aniso
