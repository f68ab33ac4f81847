// Shared gradient-check fixtures for the property suite and the acceptance run.
#pragma once

#include "ssal/interpretation.hpp"
#include "ssal/training.hpp"

#include <random>

namespace ssal::testing {

inline ModelConfig small_model(NeuralKind kind, Index window, Index features, std::uint64_t seed)
{
    ModelConfig c;
    c.window = window;
    c.features = features;
    c.ar_enabled = true;
    c.ar_order = std::min<Index>(3, window - 1);
    c.neural.kind = kind;
    c.neural.mlp_hidden = {6};
    c.neural.cnn_layers = 2;
    c.neural.cnn_channels = 3;
    c.neural.gru_hidden = 4;
    c.neural.attention_dim = 4;
    c.neural.attention_ff = 6;
    c.seed = seed;
    return c;
}

struct GradientCase {
    Matrix image;
    Matrix reference;
    RowVector target;
};

inline GradientCase random_case(Index window, Index features, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    GradientCase c{Matrix(window, features), Matrix(window, features), RowVector(features)};
    for (Index i = 0; i < c.image.size(); ++i) {
        c.image.data()[i] = u(rng);
        c.reference.data()[i] = u(rng);
    }
    for (Index j = 0; j < features; ++j) c.target(j) = u(rng);
    return c;
}

inline Mask random_mask(Index window, Index features, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    Matrix logits(window, features);
    for (Index i = 0; i < logits.size(); ++i) logits.data()[i] = u(rng);
    return Mask::from_logits(logits);
}

/// Max relative error of d L1 / d (model parameters, mask logits).
inline ad::GradCheckReport check_training_loss(NeuralKind kind, Index window, Index features, std::uint64_t seed)
{
    Forecaster model(small_model(kind, window, features, seed));
    Mask mask = random_mask(window, features, seed + 1);
    const GradientCase c = random_case(window, features, seed + 2);
    TrainConfig cfg;
    cfg.lambda1 = 0.1;
    cfg.lambda2 = 0.1;
    std::vector<ad::Parameter*> params = model.parameters();
    params.push_back(&mask.parameter());
    auto f = [&](ad::Tape& t) {
        ad::Var m = mask.bind(t);
        ad::Var x = apply_mask(t.constant(c.image), t.constant(c.reference), m);
        return loss_l1(t.constant(c.target), model.forward(t, x), m, cfg);
    };
    return ad::grad_check(f, params);
}

/// Max relative error of d L2 / d (mask logits) for a frozen model.
inline ad::GradCheckReport check_interpretation_loss(NeuralKind kind, Index window, Index features,
                                                     std::uint64_t seed)
{
    const Forecaster model(small_model(kind, window, features, seed));
    Mask mask = random_mask(window, features, seed + 1);
    const GradientCase c = random_case(window, features, seed + 2);
    InterpretConfig cfg;
    cfg.lambda1 = 0.1;
    cfg.lambda2 = 0.1;
    ad::Parameter* params[] = {&mask.parameter()};
    auto f = [&](ad::Tape& t) {
        ad::Var m = mask.bind(t);
        ad::Var x = apply_mask(t.constant(c.image), t.constant(c.reference), m);
        return loss_l2(t.constant(c.target), model.forward(t, x), m, cfg);
    };
    return ad::grad_check(f, params);
}

} // namespace ssal::testing
