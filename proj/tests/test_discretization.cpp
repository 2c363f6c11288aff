#include <doctest.h>

#include <vector>

#include "roballoc/discretization.hpp"

using roballoc::Discretization;

TEST_CASE("exact division: [0,1] at delta 0.5") {
    const std::vector<double> lo{0.0}, hi{1.0};
    const Discretization g = Discretization::build(lo, hi, 0.5);
    REQUIRE(g.k(0) == 3);
    CHECK(g.value(0, 0) == 0.0);
    CHECK(g.value(0, 1) == doctest::Approx(0.5));
    CHECK(g.value(0, 2) == 1.0);
}

TEST_CASE("ceil rule: [0.2,1] at delta 0.3 gives k = 4") {
    const std::vector<double> lo{0.2}, hi{1.0};
    const Discretization g = Discretization::build(lo, hi, 0.3);
    REQUIRE(g.k(0) == 4);
    CHECK(g.value(0, 0) == 0.2);
    CHECK(g.value(0, 3) == 1.0);
    CHECK(g.max_spacing() == doctest::Approx(0.8 / 3.0));
    CHECK(g.max_spacing() <= 0.3);
}

TEST_CASE("degenerate coordinate collapses to one level") {
    const std::vector<double> lo{0.7}, hi{0.7};
    const Discretization g = Discretization::build(lo, hi, 0.1);
    REQUIRE(g.k(0) == 1);
    CHECK(g.value(0, 0) == 0.7);
}

TEST_CASE("delta-fineness holds for awkward spans") {
    const std::vector<double> lo{0.13, 0.0, 0.5}, hi{0.97, 1.0, 0.5001};
    const Discretization g = Discretization::build(lo, hi, 0.07);
    CHECK(g.max_spacing() <= 0.07 * (1.0 + 1e-12)); // exact-division spans land on delta up to an ulp
    for (std::size_t i = 0; i < g.coords(); ++i) {
        CHECK(g.value(i, 0) == lo[i]);
        CHECK(g.value(i, g.k(i) - 1) == hi[i]);
        for (std::size_t j = 1; j < g.k(i); ++j) CHECK(g.value(i, j) > g.value(i, j - 1));
    }
}

TEST_CASE("parameter validation") {
    const std::vector<double> lo{0.0}, hi{1.0};
    CHECK_THROWS_AS(Discretization::build(lo, hi, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(Discretization::build(lo, hi, -0.1), std::invalid_argument);
    const std::vector<double> bad_lo{1.0}, bad_hi{0.0};
    CHECK_THROWS_AS(Discretization::build(bad_lo, bad_hi, 0.1), std::invalid_argument);
}
