#include "ssal/interpretation.hpp"

#include "ssal/optim.hpp"
#include "ssal/training.hpp"

#include <cmath>

namespace ssal {

InterpretTarget parse_interpret_target(const std::string& name)
{
    if (name == "target") return InterpretTarget::target;
    if (name == "self") return InterpretTarget::self;
    throw ValidationError("interpret.against must be 'target' or 'self', got '" + name + "'");
}

std::string to_string(InterpretTarget t) { return t == InterpretTarget::target ? "target" : "self"; }

InterpretOptimizer parse_interpret_optimizer(const std::string& name)
{
    if (name == "gd") return InterpretOptimizer::gd;
    if (name == "adam") return InterpretOptimizer::adam;
    throw ValidationError("interpret.optimizer must be 'gd' or 'adam', got '" + name + "'");
}

std::string to_string(InterpretOptimizer o) { return o == InterpretOptimizer::gd ? "gd" : "adam"; }

void InterpretConfig::validate() const
{
    if (steps < 1) throw ValidationError("interpret.steps must be >= 1");
    if (!(lr > 0.0)) throw ValidationError("interpret.lr must be > 0");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ValidationError("interpret.lambda1/lambda2 must be >= 0");
    if (p0 < 1 || p0 > 3) throw ValidationError("interpret.p0 must be 1, 2 or 3");
}

ad::Var loss_l2(ad::Var target, ad::Var prediction, ad::Var mask, const InterpretConfig& cfg)
{
    ad::Var lp = prediction_loss(target, prediction, cfg.target_col);
    return ad::add(ad::scale(lp, -1.0),
                   mask_penalty(mask, cfg.lambda1, cfg.lambda2, cfg.p0, false, cfg.feature_axis_smoothness));
}

SaliencyMap interpret(const Forecaster& model, const Sample& sample, Index sample_id, const InterpretConfig& cfg)
{
    cfg.validate();
    const Matrix& image = sample.image.values;
    ReferenceSpec ref = cfg.reference;
    ref.seed = derive_seed(cfg.seed, cfg.reference.seed);
    const Matrix reference = make_reference(image, ref, static_cast<std::uint64_t>(sample_id));
    const RowVector target = cfg.against == InterpretTarget::self ? model.forecast(image) : sample.target;

    Mask mask(image.rows(), image.cols(), 0.0);
    AdamW optimizer({&mask.parameter()}, AdamOptions{cfg.lr, 0.9, 0.999, 1e-8, 0.0});

    SaliencyMap out;
    out.sample_id = sample_id;
    out.horizon = sample.image.horizon;
    out.loss_trace.reserve(static_cast<std::size_t>(cfg.steps));
    for (Index step = 0; step < cfg.steps; ++step) {
        ad::Tape tape(ad::TrackPolicy::explicit_only);
        tape.track(mask.parameter());
        ad::Var m = mask.bind(tape);
        ad::Var x = apply_mask(tape.constant(image), tape.constant(reference), m);
        ad::Var loss = loss_l2(tape.constant(target), model.forward(tape, x), m, cfg);
        const double value = loss.scalar();
        if (!std::isfinite(value))
            throw RuntimeError("interpret: non-finite loss at step " + std::to_string(step) + " for sample " +
                               std::to_string(sample_id));
        out.loss_trace.push_back(value);
        tape.backward(loss);
        if (cfg.optimizer == InterpretOptimizer::adam) {
            optimizer.step(tape);
        } else {
            // Large steps can push sigmoid to exactly 0 or 1, where the norm's gradient is 0/0.
            mask.logits() = (mask.logits() - cfg.lr * tape.gradient(mask.parameter())).cwiseMax(-50.0).cwiseMin(50.0);
        }
    }
    out.mask_values = mask.values();
    {
        ad::Tape tape(ad::TrackPolicy::explicit_only);
        ad::Var x = tape.constant(apply_mask(image, reference, out.mask_values));
        out.final_prediction_loss =
            prediction_loss(tape.constant(target), model.forward(tape, x), cfg.target_col).scalar();
    }
    return out;
}

std::vector<InterpretOutcome> interpret_batch(const Forecaster& model,
                                              const std::vector<std::pair<Index, Sample>>& samples,
                                              const InterpretConfig& cfg, unsigned jobs)
{
    std::vector<InterpretOutcome> out(samples.size());
    parallel_for(samples.size(), jobs, [&](std::size_t i) {
        out[i].sample_id = samples[i].first;
        try {
            out[i].map = interpret(model, samples[i].second, samples[i].first, cfg);
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

} // namespace ssal
