#pragma once

#include "ssal/data.hpp"
#include "ssal/forecasters.hpp"
#include "ssal/mask.hpp"
#include "ssal/reference.hpp"

#include <optional>
#include <string>
#include <vector>

namespace ssal {

/// What the perturbed forecast is scored against.
enum class InterpretTarget { target, self };

InterpretTarget parse_interpret_target(const std::string& name);
std::string to_string(InterpretTarget t);

/// Update rule for the mask logits. Plain gradient descent keeps the size
/// penalty's pull proportional to lambda1; Adam normalizes it away per cell.
enum class InterpretOptimizer { gd, adam };

InterpretOptimizer parse_interpret_optimizer(const std::string& name);
std::string to_string(InterpretOptimizer o);

struct InterpretConfig {
    Index steps = 500;
    InterpretOptimizer optimizer = InterpretOptimizer::gd;
    double lr = 10.0;
    double lambda1 = 1e-3;
    double lambda2 = 1e-3;
    int p0 = 2;
    bool feature_axis_smoothness = true;
    ReferenceSpec reference{ReferenceMode::blur, 0.5, 2.0, 0, {}};
    std::uint64_t seed = 0;
    InterpretTarget against = InterpretTarget::target;
    Index target_col = -1;

    void validate() const;
};

struct SaliencyMap {
    Matrix mask_values;
    Index sample_id = 0;
    Index horizon = 0;
    /// Objective value before each optimizer step.
    std::vector<double> loss_trace;
    /// Prediction error under the final mask.
    double final_prediction_loss = 0.0;
};

/// Interpretation objective: -MSE + lambda1 * ||M||_p0 + lambda2 * smoothness.
/// Minimizing it looks for a small, smooth mask that most damages the forecast.
ad::Var loss_l2(ad::Var target, ad::Var prediction, ad::Var mask, const InterpretConfig& cfg);

/// Optimizes a fresh mask (logits 0) for one sample against a frozen model.
/// Only the mask logits change; the reference is generated once.
SaliencyMap interpret(const Forecaster& model, const Sample& sample, Index sample_id, const InterpretConfig& cfg);

struct InterpretOutcome {
    Index sample_id = 0;
    std::optional<SaliencyMap> map;
    std::string error;
};

/// interpret() for each (id, sample) pair on up to `jobs` threads. Output order
/// follows input order; a failing sample records its error and the rest continue.
std::vector<InterpretOutcome> interpret_batch(const Forecaster& model,
                                              const std::vector<std::pair<Index, Sample>>& samples,
                                              const InterpretConfig& cfg, unsigned jobs = 1);

} // namespace ssal
