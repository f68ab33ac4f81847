#include "ssal/core.hpp"

#include <doctest.h>

#include <atomic>
#include <set>
#include <vector>

using namespace ssal;

TEST_CASE("shape strings")
{
    CHECK(shape_string(3, 4) == "3x4");
    CHECK(shape_of(Matrix::Zero(2, 5)) == "2x5");
}

TEST_CASE("derive_seed separates streams and is stable")
{
    static_assert(derive_seed(1, 2) == derive_seed(1, 2));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 50; ++s) seen.insert(derive_seed(42, s));
    CHECK(seen.size() == 50);
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("format_double round-trips")
{
    for (double v : {0.0, 1.0, -2.5, 0.1, 1e-300, 123456.789012345, 3.141592653589793})
        CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.5) == "0.5");
}

TEST_CASE("parallel_for visits every index once")
{
    for (unsigned jobs : {1u, 3u, 16u}) {
        std::vector<std::atomic<int>> hits(37);
        parallel_for(hits.size(), jobs, [&](std::size_t i) { hits[i]++; });
        for (auto& h : hits) CHECK(h.load() == 1);
    }
    int calls = 0;
    parallel_for(0, 4, [&](std::size_t) { ++calls; });
    CHECK(calls == 0);
}

TEST_CASE("exception hierarchy")
{
    CHECK_THROWS_AS(throw ValidationError("x"), std::runtime_error);
    CHECK_THROWS_AS(throw RuntimeError("x"), std::runtime_error);
}
