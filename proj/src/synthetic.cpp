#include "ssal/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace ssal::synthetic {

Matrix ar_series(Index length, Index features, std::span<const double> coeffs, double noise_std,
                 std::uint64_t seed, Index burn_in)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    const auto p = static_cast<Index>(coeffs.size());
    Matrix out(length, features);
    for (Index j = 0; j < features; ++j) {
        Vector x = Vector::Zero(length + burn_in);
        for (Index t = 0; t < x.size(); ++t) {
            double v = noise(rng);
            for (Index k = 0; k < p && t - 1 - k >= 0; ++k) v += coeffs[static_cast<std::size_t>(k)] * x(t - 1 - k);
            x(t) = v;
        }
        out.col(j) = x.tail(length);
    }
    return out;
}

Matrix sinusoid_mixture(Index length, Index features, double noise_std, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> period(6.0, 60.0), phase(0.0, 2.0 * std::numbers::pi), amp(0.3, 1.0);
    std::normal_distribution<double> noise(0.0, noise_std);
    Matrix out = Matrix::Zero(length, features);
    for (Index j = 0; j < features; ++j) {
        for (int c = 0; c < 3; ++c) {
            const double pr = period(rng), ph = phase(rng), a = amp(rng);
            for (Index t = 0; t < length; ++t)
                out(t, j) += a * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / pr + ph);
        }
        for (Index t = 0; t < length; ++t) out(t, j) += noise(rng);
    }
    return out;
}

Matrix planted_cause(Index length, Index features, Index cause_feature, Index target_col, Index shift,
                     double noise_std, std::uint64_t seed)
{
    if (cause_feature == target_col) throw ValidationError("planted_cause: cause and target must differ");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0), noise(0.0, noise_std);
    Matrix out(length, features);
    for (Index t = 0; t < length; ++t)
        for (Index j = 0; j < features; ++j) out(t, j) = unit(rng);
    for (Index t = 0; t < length; ++t)
        out(t, target_col) = (t >= shift ? out(t - shift, cause_feature) : 0.0) + noise(rng);
    return out;
}

Matrix periodic_cause(Index length, Index period, Index shift, double noise_std, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> unit(0.0, 1.0), noise(0.0, noise_std);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    const double ph = phase(rng);
    Matrix out(length, 3);
    for (Index t = 0; t < length; ++t) {
        out(t, 0) = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(period) + ph) +
                    noise(rng);
        out(t, 1) = unit(rng);
    }
    for (Index t = 0; t < length; ++t) out(t, 2) = (t >= shift ? out(t - shift, 0) : 0.0) + noise(rng);
    return out;
}

Matrix noisy_nonlinear(Index length, Index features, double noise_std, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, noise_std);
    std::uniform_real_distribution<double> period(8.0, 40.0), phase(0.0, 2.0 * std::numbers::pi);
    Matrix base(length, features);
    for (Index j = 0; j < features; ++j) {
        const double p1 = period(rng), p2 = period(rng), f1 = phase(rng), f2 = phase(rng);
        for (Index t = 0; t < length; ++t) {
            const double s = static_cast<double>(t);
            base(t, j) = std::sin(2.0 * std::numbers::pi * s / p1 + f1) +
                         0.5 * std::tanh(2.0 * std::sin(2.0 * std::numbers::pi * s / p2 + f2));
        }
    }
    // Mild cross-feature coupling, then observation noise.
    Matrix out = base;
    for (Index j = 0; j < features; ++j) out.col(j) += 0.3 * base.col((j + 1) % features).array().square().matrix();
    for (Index t = 0; t < length; ++t)
        for (Index j = 0; j < features; ++j) out(t, j) += noise(rng);
    return out;
}

} // namespace ssal::synthetic
