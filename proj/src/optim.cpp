#include "ssal/optim.hpp"

#include <cmath>

namespace ssal {

AdamW::AdamW(std::vector<ad::Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options)
{
    if (!(options_.lr > 0.0)) throw ValidationError("optimizer: lr must be > 0");
    for (const ad::Parameter* p : params_) {
        m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
        v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    }
}

void AdamW::step(const std::vector<Matrix>& grads)
{
    if (grads.size() != params_.size()) throw ValidationError("optimizer: gradient count mismatch");
    ++t_;
    const double b1 = options_.beta1, b2 = options_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Matrix& theta = params_[i]->value;
        const Matrix& g = grads[i];
        m_[i] = b1 * m_[i] + (1.0 - b1) * g;
        v_[i] = b2 * v_[i] + (1.0 - b2) * g.cwiseProduct(g);
        if (params_[i]->decay && options_.weight_decay > 0.0) theta *= 1.0 - options_.lr * options_.weight_decay;
        theta.array() -= options_.lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + options_.eps);
    }
}

void AdamW::step(const ad::Tape& tape)
{
    std::vector<Matrix> grads;
    grads.reserve(params_.size());
    for (const ad::Parameter* p : params_) grads.push_back(tape.gradient(*p));
    step(grads);
}

} // namespace ssal
