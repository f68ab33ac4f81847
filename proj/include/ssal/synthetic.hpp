#pragma once

#include "ssal/core.hpp"

#include <span>

namespace ssal::synthetic {

/// Independent AR processes x_t = sum_k coeffs[k] * x_{t-1-k} + noise, one per feature.
Matrix ar_series(Index length, Index features, std::span<const double> coeffs, double noise_std,
                 std::uint64_t seed, Index burn_in = 500);

/// Sum of a few random sinusoids plus Gaussian noise per feature.
Matrix sinusoid_mixture(Index length, Index features, double noise_std, std::uint64_t seed);

/// White-noise features; column `target_col` at time s equals
/// gain * x(s - shift, cause_feature) + noise, so a window ending at t with
/// horizon tau depends only on cell (w-1-(shift-tau), cause_feature).
Matrix planted_cause(Index length, Index features, Index cause_feature, Index target_col, Index shift,
                     double noise_std, std::uint64_t seed);

/// Three columns: [periodic, white noise, target]. The target follows the
/// periodic column `shift` steps later plus noise and ignores the noise column.
Matrix periodic_cause(Index length, Index period, Index shift, double noise_std, std::uint64_t seed);

/// Low-signal nonlinear multivariate series used for small-data training runs.
Matrix noisy_nonlinear(Index length, Index features, double noise_std, std::uint64_t seed);

} // namespace ssal::synthetic
