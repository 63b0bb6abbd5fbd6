#include <doctest.h>

#include <cmath>

#include "vidcls/rng.hpp"

using namespace vidcls;

TEST_CASE("same seed and position reproduce the draw") {
    RngStream a(123);
    RngStream b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

    a.seek(7);
    b.seek(7);
    CHECK(a.next_gaussian() == b.next_gaussian());
}

TEST_CASE("seek replays an earlier draw") {
    RngStream rng(99);
    for (int i = 0; i < 10; ++i) rng.next_u64();
    const auto pos = rng.position();
    const double first = rng.next_uniform();
    rng.next_uniform();
    rng.seek(pos);
    CHECK(rng.next_uniform() == first);
}

TEST_CASE("derived streams differ from parent and from each other") {
    RngStream rng(5);
    RngStream a = rng.derive("dropout");
    RngStream b = rng.derive("noise");
    RngStream a2 = rng.derive("dropout", 1);
    CHECK(a.next_u64() != b.next_u64());
    CHECK(a.next_u64() != a2.next_u64());
    // Deriving again gives the same stream.
    RngStream a_again = rng.derive("dropout");
    a_again.next_u64();
    CHECK(a.position() == 2);
    RngStream fresh = rng.derive("dropout");
    CHECK(fresh.next_u64() == RngStream(rng.seed()).derive("dropout").next_u64());
}

TEST_CASE("gaussian moments over one million draws") {
    RngStream rng(2024);
    const int n = 1'000'000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double z = rng.next_gaussian();
        sum += z;
        sumsq += z * z;
    }
    const double mean = sum / n;
    const double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(var > 0.99);
    CHECK(var < 1.01);
}

TEST_CASE("uniform draws stay in the half-open unit interval") {
    RngStream rng(17);
    for (int i = 0; i < 10000; ++i) {
        double u = rng.next_uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}
