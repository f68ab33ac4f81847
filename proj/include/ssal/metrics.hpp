#pragma once

#include "ssal/core.hpp"

#include <cmath>

namespace ssal {

/// Root relative squared error: sqrt(sum (y - y_hat)^2) / sqrt(sum (y - mean(y))^2),
/// sums over every cell, mean over every cell of the truth.
template <typename DerivedY, typename DerivedP>
double rse(const Eigen::MatrixBase<DerivedY>& truth, const Eigen::MatrixBase<DerivedP>& prediction)
{
    if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols())
        throw ValidationError("rse: shape mismatch " + shape_of(truth) + " vs " + shape_of(prediction));
    if (truth.size() == 0) throw ValidationError("rse: empty block");
    const double denom = (truth.array() - truth.mean()).square().sum();
    if (!(denom > 0.0)) throw ValidationError("undefined RSE: truth has zero variance");
    return std::sqrt((truth - prediction).squaredNorm()) / std::sqrt(denom);
}

struct CorrResult {
    double value = 0.0;
    /// Features skipped because truth or prediction is constant.
    Index excluded = 0;
};

/// Mean over columns of the Pearson correlation between truth and prediction.
template <typename DerivedY, typename DerivedP>
CorrResult corr(const Eigen::MatrixBase<DerivedY>& truth, const Eigen::MatrixBase<DerivedP>& prediction)
{
    if (truth.rows() != prediction.rows() || truth.cols() != prediction.cols())
        throw ValidationError("corr: shape mismatch " + shape_of(truth) + " vs " + shape_of(prediction));
    if (truth.rows() < 2) throw ValidationError("corr: need at least 2 rows");
    CorrResult out;
    double total = 0.0;
    Index used = 0;
    for (Index j = 0; j < truth.cols(); ++j) {
        const auto y = (truth.col(j).array() - truth.col(j).mean()).eval();
        const auto p = (prediction.col(j).array() - prediction.col(j).mean()).eval();
        const double sy = y.square().sum(), sp = p.square().sum();
        if (!(sy > 0.0) || !(sp > 0.0)) {
            ++out.excluded;
            continue;
        }
        total += (y * p).sum() / std::sqrt(sy * sp);
        ++used;
    }
    if (used == 0) throw ValidationError("undefined CORR: every feature has zero variance");
    out.value = total / static_cast<double>(used);
    return out;
}

} // namespace ssal
