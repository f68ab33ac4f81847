#include "ssal/training.hpp"

#include "ssal/metrics.hpp"
#include "ssal/optim.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace ssal {

void TrainConfig::validate() const
{
    if (!(lr > 0.0)) throw ValidationError("train.lr must be > 0");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ValidationError("train.lambda1/lambda2 must be >= 0");
    if (weight_decay < 0.0) throw ValidationError("train.weight_decay must be >= 0");
    if (batch_size < 1) throw ValidationError("train.batch_size must be >= 1");
    if (epochs < 1) throw ValidationError("train.epochs must be >= 1");
    if (p0 < 1 || p0 > 3) throw ValidationError("train.p0 must be 1, 2 or 3");
}

ad::Var prediction_loss(ad::Var target, ad::Var prediction, Index target_col)
{
    if (target_col < 0) return ad::mse(target, prediction);
    if (target_col >= target.cols())
        throw ValidationError("target_col " + std::to_string(target_col) + " out of range for " +
                              std::to_string(target.cols()) + " features");
    return ad::mse(ad::slice(target, 0, target_col, 1, 1), ad::slice(prediction, 0, target_col, 1, 1));
}

ad::Var mask_penalty(ad::Var mask, double lambda1, double lambda2, int p0, bool complement,
                     bool include_feature_axis)
{
    return ad::add(ad::scale(size_penalty(mask, p0, complement), lambda1),
                   ad::scale(smoothness_penalty(mask, include_feature_axis), lambda2));
}

ad::Var loss_l1(ad::Var target, ad::Var prediction, ad::Var mask, const TrainConfig& cfg)
{
    ad::Var loss = prediction_loss(target, prediction, cfg.target_col);
    if (!mask.valid()) return loss;
    return ad::add(loss, mask_penalty(mask, cfg.lambda1, cfg.lambda2, cfg.p0, cfg.size_penalty_complement,
                                      cfg.feature_axis_smoothness));
}

namespace {

Matrix select_column(const Matrix& m, Index col) { return col < 0 ? m : Matrix(m.col(col)); }

} // namespace

TrainResult train(Forecaster& model, Mask& mask, const std::vector<Sample>& data, const TrainConfig& cfg,
                  const std::vector<Sample>& validation)
{
    cfg.validate();
    if (data.empty()) throw ValidationError("train: empty dataset");
    const auto& mc = model.config();
    if (cfg.mask_enabled && (mask.window() != mc.window || mask.features() != mc.features))
        throw ValidationError("train: mask shape " + shape_string(mask.window(), mask.features()) +
                              " does not match model " + shape_string(mc.window, mc.features));

    ReferenceSpec ref = cfg.reference;
    ref.seed = derive_seed(cfg.seed, cfg.reference.seed);
    if (cfg.mask_enabled) ref.validate(mc.features);

    std::vector<ad::Parameter*> params = model.parameters();
    if (cfg.mask_enabled) params.push_back(&mask.parameter());
    AdamW optimizer(params, AdamOptions{cfg.lr, 0.9, 0.999, 1e-8, cfg.weight_decay});

    std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 0x5348));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainResult result;
    double best_rse = std::numeric_limits<double>::infinity();
    std::vector<Matrix> best_model;
    Matrix best_mask;
    Index since_best = 0;
    std::uint64_t iteration = 0;

    for (Index epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double epoch_loss = 0.0;
        Index batches = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            ad::Tape tape;
            ad::Var m = cfg.mask_enabled ? mask.bind(tape) : ad::Var();
            ad::Var total = tape.scalar_constant(0.0);
            for (std::size_t k = begin; k < end; ++k) {
                const Sample& s = data[order[k]];
                ad::Var x = tape.constant(s.image.values);
                if (cfg.mask_enabled) {
                    const std::uint64_t stream = iteration * static_cast<std::uint64_t>(cfg.batch_size) + (k - begin);
                    ad::Var r = tape.constant(make_reference(s.image.values, ref, stream));
                    x = apply_mask(x, r, m);
                }
                ad::Var pred = model.forward(tape, x);
                total = ad::add(total, prediction_loss(tape.constant(s.target), pred, cfg.target_col));
            }
            ad::Var loss = ad::scale(total, 1.0 / static_cast<double>(end - begin));
            if (cfg.mask_enabled)
                loss = ad::add(loss, mask_penalty(m, cfg.lambda1, cfg.lambda2, cfg.p0, cfg.size_penalty_complement,
                                                  cfg.feature_axis_smoothness));
            const double value = loss.scalar();
            if (!std::isfinite(value)) {
                std::ostringstream msg;
                msg << "train: non-finite loss at epoch " << epoch << ", iteration " << iteration << " (lr=" << cfg.lr
                    << ")";
                throw RuntimeError(msg.str());
            }
            tape.backward(loss);
            optimizer.step(tape);
            epoch_loss += value;
            ++batches;
            ++iteration;
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = epoch_loss / static_cast<double>(batches);
        rec.val_rse = std::numeric_limits<double>::quiet_NaN();
        rec.val_corr = std::numeric_limits<double>::quiet_NaN();
        if (!validation.empty()) {
            const EvalResult ev = evaluate(model, validation, nullptr, cfg.target_col);
            rec.val_rse = ev.rse;
            rec.val_corr = ev.corr;
            if (ev.rse < best_rse) {
                best_rse = ev.rse;
                best_model = model.snapshot();
                best_mask = mask.logits();
                result.best_epoch = epoch;
                since_best = 0;
            } else {
                ++since_best;
            }
        } else {
            result.best_epoch = epoch;
        }
        spdlog::debug("epoch {} train_loss={:.6g} val_rse={:.6g}", epoch, rec.train_loss, rec.val_rse);
        result.history.push_back(rec);
        if (!validation.empty() && cfg.patience > 0 && since_best >= cfg.patience) {
            result.stopped_early = true;
            break;
        }
    }
    if (!best_model.empty()) {
        model.restore(best_model);
        if (cfg.mask_enabled) mask.logits() = best_mask;
    }
    return result;
}

EvalResult evaluate(const Forecaster& model, const std::vector<Sample>& data, const Scaler* scaler, Index target_col)
{
    if (data.empty()) throw ValidationError("evaluate: empty dataset");
    const Index n = static_cast<Index>(data.size());
    const Index d = data.front().target.size();
    if (target_col >= d) throw ValidationError("evaluate: target_col out of range");
    Matrix truth(n, d), pred(n, d);
    for (Index i = 0; i < n; ++i) {
        const Sample& s = data[static_cast<std::size_t>(i)];
        truth.row(i) = s.target;
        pred.row(i) = model.forecast(s.image.values);
    }
    EvalResult out;
    out.truth = select_column(truth, target_col);
    out.prediction = select_column(pred, target_col);
    out.rse = rse(out.truth, out.prediction);
    const CorrResult c = corr(out.truth, out.prediction);
    out.corr = c.value;
    out.excluded_features = c.excluded;
    if (scaler) {
        const Matrix tu = select_column(invert_scaler(truth, *scaler), target_col);
        const Matrix pu = select_column(invert_scaler(pred, *scaler), target_col);
        out.rse_unscaled = rse(tu, pu);
        out.corr_unscaled = corr(tu, pu).value;
    }
    return out;
}

} // namespace ssal
