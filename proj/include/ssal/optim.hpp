#pragma once

#include "ssal/autodiff.hpp"

#include <vector>

namespace ssal {

struct AdamOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    /// Decoupled decay, applied only to parameters with `decay == true`.
    double weight_decay = 0.0;
};

/// Adaptive moment estimation with decoupled weight decay.
class AdamW {
public:
    AdamW(std::vector<ad::Parameter*> params, AdamOptions options);

    /// `grads[i]` belongs to the i-th parameter passed at construction.
    void step(const std::vector<Matrix>& grads);
    /// Reads gradients of every managed parameter from a tape after backward().
    void step(const ad::Tape& tape);

    long steps() const { return t_; }
    const AdamOptions& options() const { return options_; }

private:
    std::vector<ad::Parameter*> params_;
    AdamOptions options_;
    std::vector<Matrix> m_, v_;
    long t_ = 0;
};

} // namespace ssal
