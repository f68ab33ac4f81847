#pragma once

#include "ssal/core.hpp"

#include <string>

namespace ssal {

/// How the "deleted" version of a series image is produced.
///   constant - every cell becomes its feature's training mean
///   noise    - additive i.i.d. Gaussian noise with std sigma1
///   blur     - per-feature temporal Gaussian blur with std sigma2 (time steps)
///   identity - the image itself (the reference as literally printed; mask becomes inert)
enum class ReferenceMode { constant, noise, blur, identity };

ReferenceMode parse_reference_mode(const std::string& name);
std::string to_string(ReferenceMode mode);

struct ReferenceSpec {
    ReferenceMode mode = ReferenceMode::noise;
    double sigma1 = 0.5;
    double sigma2 = 2.0;
    std::uint64_t seed = 0;
    /// Per-feature fill values for `constant`; usually the training-split means.
    RowVector constant_values;

    void validate(Index features) const;
};

/// Normalized kernel exp(-k^2 / (2 sigma^2)) for |k| <= ceil(3 sigma).
Vector gaussian_kernel(double sigma);

/// Convolves with the truncated kernel; out-of-range taps mirror about the
/// boundary half-sample (x[-1] = x[0]), so the column mean is preserved.
Vector gaussian_blur_1d(const Eigen::Ref<const Vector>& column, double sigma);

/// Reference image for `image`. `stream` selects the noise realization; the
/// same (spec.seed, stream) pair always yields the same reference.
Matrix make_reference(const Matrix& image, const ReferenceSpec& spec, std::uint64_t stream = 0);

} // namespace ssal
