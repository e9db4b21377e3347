#include <doctest.h>

#include <random>

#include "aniso/kernels.hpp"
#include "oracles.hpp"

using namespace aniso;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

}  // namespace

TEST_CASE("parallel kernels bit-identical to serial") {
    const std::size_t n = 100003;  // not a block multiple
    const auto a = random_vec(n, 1);
    const auto b = random_vec(n, 2);

    CHECK(kernels::serial::block_sum(a.data(), n) == kernels::par::block_sum(a.data(), n));
    CHECK(kernels::serial::block_pow_sum(a.data(), b.data(), n, 2.0) ==
          kernels::par::block_pow_sum(a.data(), b.data(), n, 2.0));
    CHECK(kernels::serial::block_max_abs(a.data(), n) ==
          kernels::par::block_max_abs(a.data(), n));

    std::vector<double> s1 = a, s2 = a;
    kernels::serial::add_sq(s1.data(), b.data(), n);
    kernels::par::add_sq(s2.data(), b.data(), n);
    CHECK(s1 == s2);

    std::vector<double> m1(n), m2(n);
    kernels::serial::mul(m1.data(), a.data(), b.data(), n);
    kernels::par::mul(m2.data(), a.data(), b.data(), n);
    CHECK(m1 == m2);
}

TEST_CASE("sliding max matches the brute oracle") {
    const int len = 257;
    const auto line = random_vec(len, 7);
    for (int r : {0, 1, 5, 60, 300}) {
        std::vector<double> out(len), outp(len);
        kernels::serial::sliding_max_lines(out.data(), line.data(), 1, len, r, r);
        kernels::par::sliding_max_lines(outp.data(), line.data(), 1, len, r, r);
        const auto want = oracle::brute_sliding_max(line, r);
        CHECK(out == want);
        CHECK(outp == want);
    }
}

TEST_CASE("asymmetric sliding windows") {
    const int len = 64;
    const auto line = random_vec(len, 9);
    std::vector<double> out(len);
    kernels::serial::sliding_max_lines(out.data(), line.data(), 1, len, 2, 5);
    for (int i = 0; i < len; ++i) {
        double m = -1e300;
        for (int d = -2; d <= 5; ++d) m = std::max(m, line[((i + d) % len + len) % len]);
        CHECK(out[i] == m);
    }
}

TEST_CASE("thread count does not change reductions") {
    const auto a = random_vec(50001, 3);
    kernels::set_threads(1);
    const double s1 = kernels::block_sum(a.data(), a.size());
    kernels::set_threads(8);
    const double s8 = kernels::block_sum(a.data(), a.size());
    kernels::set_threads(0);  // clamps to 1
    CHECK(kernels::threads() == 1);
    kernels::set_threads(8);
    CHECK(s1 == s8);
}
