#include "ssal/permutation.hpp"

#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <random>

using namespace ssal;

namespace {

Matrix three_point()
{
    Matrix d(3, 3);
    d << 0, 1, 4, 1, 0, 2, 4, 2, 0;
    return d;
}

Matrix random_dist(Index n, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix pts(8, n);
    for (Index i = 0; i < pts.size(); ++i) pts.data()[i] = u(rng);
    return distance_matrix(pts);
}

} // namespace

TEST_CASE("feature distance")
{
    Matrix m(2, 3);
    m << 0, 1, 0.5, 0, 1, 0.5;
    CHECK(feature_distance(m, 1, 1) == 0.0);
    CHECK(feature_distance(m, 0, 1) == doctest::Approx(std::sqrt(2.0)));
    CHECK(feature_distance(m, 1, 2) == feature_distance(m, 2, 1));
    CHECK_THROWS_AS(feature_distance(m, 0, 3), ValidationError);
    CHECK_THROWS_AS(feature_distance(m, -1, 0), ValidationError);
    const Matrix d = distance_matrix(Matrix::Random(5, 4));
    CHECK(d == d.transpose());
    CHECK(d.diagonal().isZero());
}

TEST_CASE("objective examples")
{
    const Matrix d = three_point();
    const std::vector<Index> id{0, 1, 2}, rev{2, 1, 0};
    CHECK(permutation_objective(id, d) == 3.0);
    CHECK(permutation_objective(rev, d) == 3.0);
    CHECK(permutation_objective(id, d, true) == 7.0);
    const std::vector<Index> single{0};
    CHECK(permutation_objective(single, Matrix::Zero(1, 1)) == 0.0);
    const std::vector<Index> dup{0, 0, 2}, short_perm{0, 1}, out{0, 1, 3};
    CHECK_THROWS_AS(permutation_objective(dup, d), ValidationError);
    CHECK_THROWS_AS(permutation_objective(short_perm, d), ValidationError);
    CHECK_THROWS_AS(permutation_objective(out, d), ValidationError);
}

TEST_CASE("brute force examples")
{
    const auto r = brute_force_permutation(three_point());
    CHECK(r.objective == 3.0);
    CHECK(r.order == std::vector<Index>{0, 1, 2});

    const Matrix equal = Matrix::Ones(4, 4) - Matrix::Identity(4, 4);
    const auto e = brute_force_permutation(equal);
    CHECK(e.order == std::vector<Index>{0, 1, 2, 3});
    CHECK(e.objective == 3.0);

    CHECK_THROWS_AS(brute_force_permutation(random_dist(10, 1)), ValidationError);
}

TEST_CASE("brute force over nine features stays within a two second budget")
{
    const auto start = std::chrono::steady_clock::now();
    const auto r = brute_force_permutation(random_dist(9, 2));
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(r.order.size() == 9);
    CHECK(seconds < 2.0);
}

TEST_CASE("two features")
{
    Matrix d(2, 2);
    d << 0, 3, 3, 0;
    const AnnealSchedule s = default_schedule(d);
    const auto a = simulated_annealing(d, s, 5);
    CHECK(a.objective == 3.0);
    CHECK(simulated_annealing(d, s, 5).order == a.order);
}

TEST_CASE("planted blocks stay contiguous")
{
    const Index n = 8;
    Matrix d(n, n);
    const std::vector<int> block{0, 1, 0, 1, 1, 0, 0, 1};
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            d(i, j) = i == j ? 0.0 : (block[static_cast<std::size_t>(i)] == block[static_cast<std::size_t>(j)] ? 0.01 : 10.0);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto r = anneal_restarts(d, default_schedule(d), seed, 2);
        int switches = 0;
        for (std::size_t k = 1; k < r.order.size(); ++k)
            switches += block[static_cast<std::size_t>(r.order[k])] != block[static_cast<std::size_t>(r.order[k - 1])];
        CHECK(switches == 1);
    }
}

TEST_CASE("annealing records only improvements and returns a bijection")
{
    const Matrix d = random_dist(7, 3);
    const auto r = simulated_annealing(d, default_schedule(d), 11);
    REQUIRE_FALSE(r.record.empty());
    for (std::size_t k = 1; k < r.record.size(); ++k) CHECK(r.record[k] <= r.record[k - 1]);
    CHECK(r.record.back() == doctest::Approx(r.objective));
    std::vector<Index> sorted = r.order;
    std::sort(sorted.begin(), sorted.end());
    for (Index i = 0; i < 7; ++i) CHECK(sorted[static_cast<std::size_t>(i)] == i);
    CHECK(permutation_objective(r.order, d) == doctest::Approx(r.objective));
}

TEST_CASE("restarts never do worse than their first run")
{
    const Matrix d = random_dist(8, 4);
    const AnnealSchedule s = default_schedule(d);
    const auto multi = anneal_restarts(d, s, 21, 4);
    const auto single = anneal_restarts(d, s, 21, 1);
    CHECK(multi.objective <= single.objective);
    CHECK(brute_force_permutation(d).objective <= multi.objective + 1e-12);
    CHECK_THROWS_AS(anneal_restarts(d, s, 21, 0), ValidationError);
}

TEST_CASE("schedule validation")
{
    AnnealSchedule s;
    s.alpha = 1.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = {};
    s.alpha = 0.0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = {};
    s.min_temperature = s.initial_temperature;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    s = {};
    s.iters_per_temp = 0;
    CHECK_THROWS_AS(s.validate(), ValidationError);
    CHECK_THROWS_AS(simulated_annealing(three_point(), s, 0), ValidationError);

    const AnnealSchedule def = default_schedule(three_point());
    CHECK(def.initial_temperature == doctest::Approx(7.0 / 3.0));
    CHECK(def.min_temperature == doctest::Approx(7e-3 / 3.0));
    CHECK(def.iters_per_temp == 60);
    CHECK(default_schedule(Matrix::Zero(3, 3)).initial_temperature == 1.0);
}
