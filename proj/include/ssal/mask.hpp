#pragma once

#include "ssal/autodiff.hpp"
#include "ssal/core.hpp"

#include <cmath>

namespace ssal {

/// Learnable w x D perturbation mask, m = sigmoid(logits), so every value is
/// strictly inside (0, 1). m = 1 replaces a cell by the reference, m = 0 keeps it.
class Mask {
public:
    Mask() = default;
    Mask(Index window, Index features, double initial_logit = 0.0);
    static Mask from_logits(Matrix logits);

    Index window() const { return logits_.value.rows(); }
    Index features() const { return logits_.value.cols(); }

    const Matrix& logits() const { return logits_.value; }
    Matrix& logits() { return logits_.value; }
    Matrix values() const;

    ad::Parameter& parameter() { return logits_; }
    const ad::Parameter& parameter() const { return logits_; }

    /// Mask values on `tape`, differentiable w.r.t. the logits.
    ad::Var bind(ad::Tape& tape) const;

private:
    ad::Parameter logits_{"mask.logits", Matrix(), false};
};

/// x_tilde = m * x_ref + (1 - m) * x, element-wise.
template <typename DerivedX, typename DerivedR, typename DerivedM>
Matrix apply_mask(const Eigen::MatrixBase<DerivedX>& image, const Eigen::MatrixBase<DerivedR>& reference,
                  const Eigen::MatrixBase<DerivedM>& mask)
{
    if (image.rows() != reference.rows() || image.cols() != reference.cols() || image.rows() != mask.rows() ||
        image.cols() != mask.cols())
        throw ValidationError("apply_mask: shapes " + shape_of(image) + ", " + shape_of(reference) + ", " +
                              shape_of(mask) + " differ");
    return (mask.array() * reference.array() + (1.0 - mask.array()) * image.array()).matrix();
}

ad::Var apply_mask(ad::Var image, ad::Var reference, ad::Var mask);

/// Entrywise p-norm of M, or the l1 norm of 1 - M when `complement` is set.
template <typename Derived>
double size_penalty(const Eigen::MatrixBase<Derived>& mask, int p0, bool complement)
{
    if (complement) return (1.0 - mask.array()).abs().sum();
    if (p0 < 1 || p0 > 3) throw ValidationError("size_penalty: p0 must be 1, 2 or 3");
    return std::pow(mask.array().abs().pow(p0).sum(), 1.0 / p0);
}

/// Sum of squared differences between neighbouring cells along time, and along
/// features when `include_feature_axis` is set. Only in-range pairs count.
template <typename Derived>
double smoothness_penalty(const Eigen::MatrixBase<Derived>& mask, bool include_feature_axis)
{
    const Index w = mask.rows(), d = mask.cols();
    double total = 0.0;
    if (w > 1) total += (mask.bottomRows(w - 1) - mask.topRows(w - 1)).squaredNorm();
    if (include_feature_axis && d > 1) total += (mask.rightCols(d - 1) - mask.leftCols(d - 1)).squaredNorm();
    return total;
}

/// Tape versions. `mask` must hold values in (0, 1).
ad::Var size_penalty(ad::Var mask, int p0, bool complement);
ad::Var smoothness_penalty(ad::Var mask, bool include_feature_axis);

} // namespace ssal
