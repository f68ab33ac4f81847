#include "ssal/reference.hpp"

#include <cmath>
#include <random>

namespace ssal {

ReferenceMode parse_reference_mode(const std::string& name)
{
    if (name == "constant") return ReferenceMode::constant;
    if (name == "noise") return ReferenceMode::noise;
    if (name == "blur") return ReferenceMode::blur;
    if (name == "identity") return ReferenceMode::identity;
    throw ValidationError("unknown reference mode '" + name + "'");
}

std::string to_string(ReferenceMode mode)
{
    switch (mode) {
    case ReferenceMode::constant: return "constant";
    case ReferenceMode::noise: return "noise";
    case ReferenceMode::blur: return "blur";
    case ReferenceMode::identity: return "identity";
    }
    return "unknown";
}

void ReferenceSpec::validate(Index features) const
{
    if (mode == ReferenceMode::noise && !(sigma1 > 0.0))
        throw ValidationError("reference: sigma1 must be > 0 for noise mode");
    if (mode == ReferenceMode::blur && !(sigma2 > 0.0))
        throw ValidationError("reference: sigma2 must be > 0 for blur mode");
    if (mode == ReferenceMode::constant && constant_values.size() != features)
        throw ValidationError("reference: constant mode needs " + std::to_string(features) +
                              " fill values, have " + std::to_string(constant_values.size()));
}

Vector gaussian_kernel(double sigma)
{
    if (!(sigma > 0.0)) throw ValidationError("gaussian_kernel: sigma must be > 0");
    const auto radius = static_cast<Index>(std::ceil(3.0 * sigma));
    Vector k(2 * radius + 1);
    for (Index i = -radius; i <= radius; ++i)
        k(i + radius) = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    return k / k.sum();
}

namespace {

// Half-sample symmetric reflection, periodic with period 2n.
Index reflect_index(Index i, Index n)
{
    const Index period = 2 * n;
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - 1 - i;
}

} // namespace

Vector gaussian_blur_1d(const Eigen::Ref<const Vector>& column, double sigma)
{
    const Vector kernel = gaussian_kernel(sigma);
    const Index radius = (kernel.size() - 1) / 2;
    const Index n = column.size();
    Vector out = Vector::Zero(n);
    for (Index t = 0; t < n; ++t) {
        double acc = 0.0;
        for (Index k = -radius; k <= radius; ++k) acc += kernel(k + radius) * column(reflect_index(t + k, n));
        out(t) = acc;
    }
    return out;
}

Matrix make_reference(const Matrix& image, const ReferenceSpec& spec, std::uint64_t stream)
{
    if (image.size() == 0) throw ValidationError("make_reference: empty image");
    spec.validate(image.cols());
    switch (spec.mode) {
    case ReferenceMode::identity:
        return image;
    case ReferenceMode::constant:
        return spec.constant_values.replicate(image.rows(), 1);
    case ReferenceMode::noise: {
        std::mt19937_64 rng(derive_seed(spec.seed, stream));
        std::normal_distribution<double> normal(0.0, spec.sigma1);
        Matrix out = image;
        // Column-major fill order is part of the determinism contract.
        for (Index j = 0; j < out.cols(); ++j)
            for (Index i = 0; i < out.rows(); ++i) out(i, j) += normal(rng);
        return out;
    }
    case ReferenceMode::blur: {
        Matrix out(image.rows(), image.cols());
        for (Index j = 0; j < image.cols(); ++j) out.col(j) = gaussian_blur_1d(image.col(j), spec.sigma2);
        return out;
    }
    }
    throw ValidationError("make_reference: invalid mode");
}

} // namespace ssal
