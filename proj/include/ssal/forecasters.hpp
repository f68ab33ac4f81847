#pragma once

#include "ssal/autodiff.hpp"
#include "ssal/core.hpp"

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ssal {

enum class NeuralKind { none, mlp, cnn, gru, attention };
enum class Activation { relu, tanh };

NeuralKind parse_neural_kind(const std::string& name);
std::string to_string(NeuralKind kind);
Activation parse_activation(const std::string& name);
std::string to_string(Activation a);

struct NeuralConfig {
    NeuralKind kind = NeuralKind::mlp;
    std::vector<Index> mlp_hidden{64};
    Activation mlp_activation = Activation::relu;
    Index cnn_layers = 2;
    Index cnn_channels = 16;
    Index cnn_kernel = 3;
    Index gru_hidden = 32;
    Index attention_dim = 32;
    Index attention_ff = 64;
};

struct ModelConfig {
    Index window = 16;
    Index features = 1;
    bool ar_enabled = true;
    Index ar_order = 3;
    NeuralConfig neural;
    std::uint64_t seed = 0;
};

using ParameterList = std::vector<ad::Parameter*>;
using ConstParameterList = std::vector<const ad::Parameter*>;

/// Per-feature autoregression over the last p+1 rows:
///   y_d = sum_{k=0..p} weights(d, k) * image(w-1-k, d) + bias_d
class ARModel {
public:
    ARModel() = default;
    ARModel(Index features, Index order);

    Index order() const { return order_; }
    Index features() const { return weights_.value.rows(); }

    ad::Var forward(ad::Tape& tape, ad::Var image) const;
    RowVector forecast(const Matrix& image) const;

    ad::Parameter& weights() { return weights_; }
    const ad::Parameter& weights() const { return weights_; }
    ad::Parameter& bias() { return bias_; }
    const ad::Parameter& bias() const { return bias_; }

private:
    Index order_ = 0;
    ad::Parameter weights_{"ar.weights", Matrix(), true};
    ad::Parameter bias_{"ar.bias", Matrix(), false};
};

/// Nonlinear component: maps a w x D image to a 1 x D forecast.
class NeuralNet {
public:
    virtual ~NeuralNet() = default;
    virtual NeuralKind kind() const = 0;
    virtual ad::Var forward(ad::Tape& tape, ad::Var image) const = 0;
    virtual ParameterList parameters() = 0;
    ConstParameterList parameters() const;
};

/// Flattened window through fully connected layers.
class MlpNet final : public NeuralNet {
public:
    MlpNet(Index window, Index features, const std::vector<Index>& hidden, Activation activation);
    NeuralKind kind() const override { return NeuralKind::mlp; }
    ad::Var forward(ad::Tape& tape, ad::Var image) const override;
    ParameterList parameters() override;

private:
    Index window_, features_;
    Activation activation_;
    std::vector<ad::Parameter> weights_;
    std::vector<ad::Parameter> biases_;
};

/// Stack of causal convolutions (zero padding on the past side only), relu
/// between layers, then a linear head over the flattened feature map.
class TemporalCnn final : public NeuralNet {
public:
    TemporalCnn(Index window, Index features, Index layers, Index channels, Index kernel);
    NeuralKind kind() const override { return NeuralKind::cnn; }
    ad::Var forward(ad::Tape& tape, ad::Var image) const override;
    ParameterList parameters() override;

private:
    Index window_, features_, kernel_;
    std::vector<ad::Parameter> kernels_;
    std::vector<ad::Parameter> biases_;
    ad::Parameter head_w_, head_b_;
};

/// Single-layer GRU over rows oldest to newest; final hidden state through a linear head.
/// Gate layout in the packed matrices is [reset | update | candidate].
class GruNet final : public NeuralNet {
public:
    GruNet(Index features, Index hidden);
    NeuralKind kind() const override { return NeuralKind::gru; }
    ad::Var forward(ad::Tape& tape, ad::Var image) const override;
    ParameterList parameters() override;

    /// Hidden state after each row, for inspection.
    std::vector<RowVector> hidden_states(const Matrix& image) const;

    Index hidden() const { return hidden_; }

private:
    Index features_, hidden_;
    ad::Parameter w_ih_, w_hh_, b_ih_, b_hh_, head_w_, head_b_;
};

/// One pre-norm encoder block (single-head attention + position-wise
/// feed-forward, both residual) over input rows with sinusoidal positions,
/// mean-pooled over time and mapped through a linear head.
class AttentionEncoder final : public NeuralNet {
public:
    AttentionEncoder(Index window, Index features, Index model_dim, Index ff_dim);
    NeuralKind kind() const override { return NeuralKind::attention; }
    ad::Var forward(ad::Tape& tape, ad::Var image) const override;
    ParameterList parameters() override;

    const Matrix& positional_encoding() const { return positions_; }

    ad::Parameter w_in, b_in, w_q, w_k, w_v, w_o, ff_w1, ff_b1, ff_w2, ff_b2, head_w, head_b;

private:
    Index window_, model_dim_;
    Matrix positions_;
};

Matrix sinusoidal_positions(Index length, Index dim);

/// y_hat = y_ar + y_neural. Either component may be disabled.
class Forecaster {
public:
    explicit Forecaster(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }
    bool has_ar() const { return ar_.has_value(); }
    ARModel& ar() { return *ar_; }
    const ARModel& ar() const { return *ar_; }
    NeuralNet* neural() { return neural_.get(); }
    const NeuralNet* neural() const { return neural_.get(); }

    ad::Var forward(ad::Tape& tape, ad::Var image) const;
    RowVector forecast(const Matrix& image) const;

    ParameterList parameters();
    ConstParameterList parameters() const;

    std::vector<Matrix> snapshot() const;
    void restore(const std::vector<Matrix>& values);

private:
    ModelConfig config_;
    std::optional<ARModel> ar_;
    std::unique_ptr<NeuralNet> neural_;
};

std::unique_ptr<NeuralNet> make_neural(const ModelConfig& config, std::uint64_t seed);

/// Element-wise sum of the two component forecasts.
RowVector combine(const RowVector& y_ar, const RowVector& y_neural);
ad::Var combine(ad::Var y_ar, ad::Var y_neural);

// ---------------------------------------------------------------------------
// Checkpoint container.
//
// Text format, first line the magic "SSAL1":
//   SSAL1
//   config <byte count>
//   <config text, exactly byte count bytes>
//   tensors <count>
//   tensor <name> <rows> <cols>
//   <rows*cols values, row-major, %.17g, whitespace separated>
//   ...
// Values round-trip exactly.

struct NamedTensor {
    std::string name;
    Matrix value;
};

struct Checkpoint {
    std::string config_text;
    std::vector<NamedTensor> tensors;

    const Matrix* find(const std::string& name) const;
};

inline constexpr const char* checkpoint_magic = "SSAL1";

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint parse_checkpoint(const std::string& text);

/// Copies named parameter values out of / into a checkpoint. load throws on a
/// missing tensor or a shape mismatch.
void store_parameters(const ConstParameterList& params, Checkpoint& checkpoint);
void load_parameters(const ParameterList& params, const Checkpoint& checkpoint);

} // namespace ssal
