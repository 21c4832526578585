#include <cmath>
#include <numbers>
#include <set>

#include "doctest.h"
#include "sketchid/rng.hpp"

using namespace sketchid;

TEST_SUITE("rng") {

TEST_CASE("streams are deterministic and key-separated") {
    RandomStream a(123), b(123), c(124);
    bool all_equal = true;
    bool any_equal_across_keys = false;
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        all_equal = all_equal && (x == b.next_u64());
        any_equal_across_keys = any_equal_across_keys || (x == c.next_u64());
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_across_keys);
}

TEST_CASE("derive_seed separates labels") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t a = 0; a < 20; ++a) {
        for (std::uint64_t b = 0; b < 20; ++b) {
            seen.insert(derive_seed(42, a, b));
        }
    }
    CHECK(seen.size() == 400);
    CHECK(derive_seed(42, 1, 2) != derive_seed(43, 1, 2));
    CHECK(derive_seed(42, 1, 2) == derive_seed(42, 1, 2));
}

TEST_CASE("next_unit lies in [0, 1)") {
    RandomStream rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("next_below and next_int respect bounds and hit them") {
    RandomStream rng(11);
    std::set<std::uint64_t> hits;
    for (int i = 0; i < 1000; ++i) {
        const auto k = rng.next_below(5);
        CHECK(k < 5);
        hits.insert(k);
    }
    CHECK(hits.size() == 5);

    std::set<long long> ints;
    for (int i = 0; i < 1000; ++i) {
        const auto v = rng.next_int(-2, 2);
        CHECK(v >= -2);
        CHECK(v <= 2);
        ints.insert(v);
    }
    CHECK(ints.size() == 5);
}

TEST_CASE("next_sign is exactly +1 or -1 and roughly balanced") {
    RandomStream rng(13);
    int plus = 0;
    for (int i = 0; i < 10000; ++i) {
        const double s = rng.next_sign();
        CHECK((s == 1.0 || s == -1.0));
        if (s > 0) ++plus;
    }
    CHECK(plus > 4700);
    CHECK(plus < 5300);
}

TEST_CASE("next_gaussian follows the documented Box-Muller recipe") {
    // Reproduce the stream's own draws with the published formula: take the
    // same two uniforms and check both the cosine draw and the cached sine
    // spare.
    RandomStream raw(2024);
    const double u1 =
        static_cast<double>((raw.next_u64() >> 11) + 1) * 0x1.0p-53;
    const double u2 = raw.next_unit();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;

    RandomStream rng(2024);
    CHECK(rng.next_gaussian() == radius * std::cos(angle));
    CHECK(rng.next_gaussian() == radius * std::sin(angle));
}

TEST_CASE("next_gaussian moments") {
    RandomStream rng(17);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        sum += g;
        sum_sq += g * g;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

}  // TEST_SUITE
