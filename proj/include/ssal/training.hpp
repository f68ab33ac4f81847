#pragma once

#include "ssal/data.hpp"
#include "ssal/forecasters.hpp"
#include "ssal/mask.hpp"
#include "ssal/reference.hpp"

#include <optional>
#include <vector>

namespace ssal {

struct TrainConfig {
    double lr = 1e-4;
    double weight_decay = 1e-3;
    double lambda1 = 1e-3;
    double lambda2 = 1e-3;
    int p0 = 2;
    Index batch_size = 32;
    Index epochs = 100;
    /// Epochs without validation improvement before stopping; 0 disables.
    Index patience = 10;
    std::uint64_t seed = 0;
    bool mask_enabled = true;
    /// Size penalty ||1 - M||_1 (pushes toward more perturbation) instead of ||M||_p0.
    bool size_penalty_complement = true;
    bool feature_axis_smoothness = true;
    double mask_init_logit = 0.0;
    /// Restrict the prediction loss and metrics to one column; -1 uses every column.
    Index target_col = -1;
    ReferenceSpec reference;

    void validate() const;
};

/// Squared-error term over the selected target column(s).
ad::Var prediction_loss(ad::Var target, ad::Var prediction, Index target_col);

/// lambda1 * size + lambda2 * smoothness for a bound mask.
ad::Var mask_penalty(ad::Var mask, double lambda1, double lambda2, int p0, bool complement,
                     bool include_feature_axis);

/// Training objective for one sample: MSE + lambda1 * l_m + lambda2 * l_r.
/// An invalid `mask` Var drops the penalty terms.
ad::Var loss_l1(ad::Var target, ad::Var prediction, ad::Var mask, const TrainConfig& cfg);

struct EpochRecord {
    Index epoch = 0;
    double train_loss = 0.0;
    double val_rse = 0.0;
    double val_corr = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    Index best_epoch = 0;
    bool stopped_early = false;
};

/// Joint minibatch optimization of forecaster parameters and the shared mask.
/// With a non-empty `validation` set the best-RSE parameters are restored at the end.
TrainResult train(Forecaster& model, Mask& mask, const std::vector<Sample>& data, const TrainConfig& cfg,
                  const std::vector<Sample>& validation = {});

struct EvalResult {
    double rse = 0.0;
    double corr = 0.0;
    Index excluded_features = 0;
    std::optional<double> rse_unscaled;
    std::optional<double> corr_unscaled;
    Matrix truth;
    Matrix prediction;
};

/// Metrics on clean (unmasked) inputs in scaled space; unscaled copies when a
/// scaler is given. `target_col` >= 0 restricts to that column.
EvalResult evaluate(const Forecaster& model, const std::vector<Sample>& data, const Scaler* scaler = nullptr,
                    Index target_col = -1);

} // namespace ssal
