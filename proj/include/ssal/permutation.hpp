#pragma once

#include "ssal/core.hpp"

#include <span>
#include <vector>

namespace ssal {

/// Euclidean distance between mask columns a and b over time.
template <typename Derived>
double feature_distance(const Eigen::MatrixBase<Derived>& mask, Index a, Index b)
{
    if (a < 0 || b < 0 || a >= mask.cols() || b >= mask.cols())
        throw ValidationError("feature_distance: feature index out of range for " + std::to_string(mask.cols()) +
                              " features");
    return (mask.col(a) - mask.col(b)).norm();
}

/// Symmetric D x D matrix of feature_distance over every pair.
Matrix distance_matrix(const Matrix& mask);

/// Sum of distances between consecutive features of `order`; with `cycle` the
/// last feature also connects back to the first.
double permutation_objective(std::span<const Index> order, const Matrix& dist, bool cycle = false);

struct AnnealSchedule {
    double initial_temperature = 1.0;
    double min_temperature = 1e-3;
    double alpha = 0.95;
    Index iters_per_temp = 20;

    void validate() const;
};

/// psi0 = mean off-diagonal distance (1 if that is zero), psi_min = 1e-3 psi0,
/// alpha = 0.95, 20 * D moves per temperature.
AnnealSchedule default_schedule(const Matrix& dist);

struct PermutationResult {
    std::vector<Index> order;
    double objective = 0.0;
    /// Best objective each time a new best state was found (simulated annealing only).
    std::vector<double> record;
};

/// Swap-neighbourhood annealing with Metropolis acceptance and geometric cooling.
/// Returns the best state seen.
PermutationResult simulated_annealing(const Matrix& dist, const AnnealSchedule& schedule, std::uint64_t seed,
                                      bool cycle = false);

/// Best of `restarts` independently seeded annealing runs (lowest objective, earliest on ties).
PermutationResult anneal_restarts(const Matrix& dist, const AnnealSchedule& schedule, std::uint64_t seed,
                                  Index restarts, bool cycle = false);

/// Exhaustive search, D <= 9. Ties go to the lexicographically first order.
PermutationResult brute_force_permutation(const Matrix& dist, bool cycle = false);

} // namespace ssal
