#include "ssal/mask.hpp"

namespace ssal {

Mask::Mask(Index window, Index features, double initial_logit)
{
    if (window < 1 || features < 1) throw ValidationError("Mask: empty shape " + shape_string(window, features));
    logits_.value = Matrix::Constant(window, features, initial_logit);
}

Mask Mask::from_logits(Matrix logits)
{
    Mask m;
    m.logits_.value = std::move(logits);
    return m;
}

Matrix Mask::values() const { return (1.0 / (1.0 + (-logits_.value.array()).exp())).matrix(); }

ad::Var Mask::bind(ad::Tape& tape) const { return ad::sigmoid(tape.param(logits_)); }

ad::Var apply_mask(ad::Var image, ad::Var reference, ad::Var mask)
{
    if (image.rows() != reference.rows() || image.cols() != reference.cols() || image.rows() != mask.rows() ||
        image.cols() != mask.cols())
        throw ValidationError("apply_mask: shapes " + shape_of(image.value()) + ", " + shape_of(reference.value()) +
                              ", " + shape_of(mask.value()) + " differ");
    // x + m * (x_ref - x)
    return ad::add(image, ad::mul(mask, ad::sub(reference, image)));
}

ad::Var size_penalty(ad::Var mask, int p0, bool complement)
{
    if (complement) return ad::sum(ad::add_scalar(ad::scale(mask, -1.0), 1.0));
    switch (p0) {
    case 1: return ad::sum(mask);
    case 2: return ad::sqrt(ad::sum(ad::mul(mask, mask)));
    case 3: return ad::pow(ad::sum(ad::pow(mask, 3.0)), 1.0 / 3.0);
    default: throw ValidationError("size_penalty: p0 must be 1, 2 or 3");
    }
}

ad::Var smoothness_penalty(ad::Var mask, bool include_feature_axis)
{
    ad::Tape& t = *mask.tape();
    const Index w = mask.rows(), d = mask.cols();
    ad::Var total = t.scalar_constant(0.0);
    if (w > 1) {
        auto diff = ad::sub(ad::slice(mask, 1, 0, w - 1, d), ad::slice(mask, 0, 0, w - 1, d));
        total = ad::add(total, ad::sum(ad::mul(diff, diff)));
    }
    if (include_feature_axis && d > 1) {
        auto diff = ad::sub(ad::slice(mask, 0, 1, w, d - 1), ad::slice(mask, 0, 0, w, d - 1));
        total = ad::add(total, ad::sum(ad::mul(diff, diff)));
    }
    return total;
}

} // namespace ssal
