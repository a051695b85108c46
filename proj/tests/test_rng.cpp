#include <cmath>
#include <set>

#include "bpdet/rng.hpp"
#include "doctest.h"

using namespace bpdet;

TEST_CASE("stream is a pure function of (master, trial, substream)") {
    RngStream a = RngStream::for_trial(42, 7, 3);
    RngStream b = RngStream::for_trial(42, 7, 3);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("distinct coordinates give distinct seeds") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t m = 0; m < 4; ++m)
        for (std::uint64_t t = 0; t < 4; ++t)
            for (std::uint64_t s = 0; s < 4; ++s) seeds.insert(RngStream::derive(m, t, s));
    CHECK(seeds.size() == 64);
}

TEST_CASE("uniform stays strictly inside (0, 1)") {
    RngStream rng(1);
    for (int i = 0; i < 100000; ++i) {
        double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal draws have standard moments") {
    RngStream rng(5);
    const int n = 200000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("bernoulli matches its probability") {
    RngStream rng(9);
    const int n = 100000;
    int ones = 0;
    for (int i = 0; i < n; ++i) ones += rng.bernoulli(0.3);
    CHECK(std::abs(ones / static_cast<double>(n) - 0.3) < 0.01);
}
