#include "ssal/permutation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ssal {

namespace {

void check_distance(const Matrix& dist)
{
    if (dist.rows() != dist.cols() || dist.rows() < 1)
        throw ValidationError("distance matrix must be square and non-empty, got " + shape_of(dist));
}

} // namespace

Matrix distance_matrix(const Matrix& mask)
{
    const Index d = mask.cols();
    Matrix dist = Matrix::Zero(d, d);
    for (Index a = 0; a < d; ++a)
        for (Index b = a + 1; b < d; ++b) dist(a, b) = dist(b, a) = feature_distance(mask, a, b);
    return dist;
}

double permutation_objective(std::span<const Index> order, const Matrix& dist, bool cycle)
{
    check_distance(dist);
    const auto d = static_cast<std::size_t>(dist.rows());
    if (order.size() != d) throw ValidationError("permutation: length " + std::to_string(order.size()) +
                                                 " does not match " + std::to_string(d) + " features");
    std::vector<bool> seen(d, false);
    for (Index f : order) {
        if (f < 0 || static_cast<std::size_t>(f) >= d || seen[static_cast<std::size_t>(f)])
            throw ValidationError("permutation: not a bijection on 0..D-1");
        seen[static_cast<std::size_t>(f)] = true;
    }
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < d; ++k) total += dist(order[k], order[k + 1]);
    if (cycle && d > 2) total += dist(order[d - 1], order[0]);
    return total;
}

void AnnealSchedule::validate() const
{
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("anneal: alpha must lie in (0, 1)");
    if (!(min_temperature > 0.0)) throw ValidationError("anneal: min temperature must be > 0");
    if (!(initial_temperature > min_temperature)) throw ValidationError("anneal: initial temperature must exceed min");
    if (iters_per_temp < 1) throw ValidationError("anneal: iterations per temperature must be >= 1");
}

AnnealSchedule default_schedule(const Matrix& dist)
{
    check_distance(dist);
    const Index d = dist.rows();
    double mean = 0.0;
    if (d > 1) mean = (dist.sum() - dist.trace()) / static_cast<double>(d * (d - 1));
    AnnealSchedule s;
    s.initial_temperature = mean > 0.0 ? mean : 1.0;
    s.min_temperature = 1e-3 * s.initial_temperature;
    s.alpha = 0.95;
    s.iters_per_temp = 20 * d;
    return s;
}

PermutationResult simulated_annealing(const Matrix& dist, const AnnealSchedule& schedule, std::uint64_t seed,
                                      bool cycle)
{
    check_distance(dist);
    schedule.validate();
    const Index d = dist.rows();
    if (d < 2) throw ValidationError("simulated_annealing: need at least 2 features");

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pick(0, d - 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<Index> current(static_cast<std::size_t>(d));
    std::iota(current.begin(), current.end(), Index{0});
    double g = permutation_objective(current, dist, cycle);

    PermutationResult best{current, g, {g}};
    std::vector<Index> candidate;
    for (double psi = schedule.initial_temperature; psi > schedule.min_temperature; psi *= schedule.alpha) {
        for (Index it = 0; it < schedule.iters_per_temp; ++it) {
            const Index i = pick(rng);
            Index j = pick(rng);
            while (j == i) j = pick(rng);
            candidate = current;
            std::swap(candidate[static_cast<std::size_t>(i)], candidate[static_cast<std::size_t>(j)]);
            const double gv = permutation_objective(candidate, dist, cycle);
            const double delta = gv - g;
            // Draw unconditionally so the random stream does not depend on the outcome.
            const double u = unit(rng);
            if (delta <= 0.0 || u < std::exp(-delta / psi)) {
                current.swap(candidate);
                g = gv;
                if (g < best.objective) {
                    best.order = current;
                    best.objective = g;
                    best.record.push_back(g);
                }
            }
        }
    }
    return best;
}

PermutationResult anneal_restarts(const Matrix& dist, const AnnealSchedule& schedule, std::uint64_t seed,
                                  Index restarts, bool cycle)
{
    if (restarts < 1) throw ValidationError("anneal_restarts: restarts must be >= 1");
    PermutationResult best;
    for (Index r = 0; r < restarts; ++r) {
        PermutationResult run = simulated_annealing(dist, schedule, derive_seed(seed, static_cast<std::uint64_t>(r)), cycle);
        if (r == 0 || run.objective < best.objective) best = std::move(run);
    }
    return best;
}

PermutationResult brute_force_permutation(const Matrix& dist, bool cycle)
{
    check_distance(dist);
    const Index d = dist.rows();
    if (d > 9) throw ValidationError("brute_force_permutation: D = " + std::to_string(d) + " exceeds 9");
    std::vector<Index> order(static_cast<std::size_t>(d));
    std::iota(order.begin(), order.end(), Index{0});
    PermutationResult best{order, permutation_objective(order, dist, cycle), {}};
    while (std::next_permutation(order.begin(), order.end())) {
        const double g = permutation_objective(order, dist, cycle);
        if (g < best.objective) {
            best.order = order;
            best.objective = g;
        }
    }
    return best;
}

} // namespace ssal
