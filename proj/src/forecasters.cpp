#include "ssal/forecasters.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace ssal {

NeuralKind parse_neural_kind(const std::string& name)
{
    if (name == "none") return NeuralKind::none;
    if (name == "mlp") return NeuralKind::mlp;
    if (name == "cnn") return NeuralKind::cnn;
    if (name == "gru") return NeuralKind::gru;
    if (name == "attention") return NeuralKind::attention;
    throw ValidationError("unknown neural variant '" + name + "' (none|mlp|cnn|gru|attention)");
}

std::string to_string(NeuralKind kind)
{
    switch (kind) {
    case NeuralKind::none: return "none";
    case NeuralKind::mlp: return "mlp";
    case NeuralKind::cnn: return "cnn";
    case NeuralKind::gru: return "gru";
    case NeuralKind::attention: return "attention";
    }
    return "?";
}

Activation parse_activation(const std::string& name)
{
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

namespace {

class Initializer {
public:
    explicit Initializer(std::uint64_t seed) : rng_(seed) {}

    ad::Parameter make(std::string name, Index rows, Index cols, Index fan_in, bool decay)
    {
        const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-a, a);
        Matrix v(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) v(i, j) = u(rng_);
        return ad::Parameter{std::move(name), std::move(v), decay};
    }

private:
    std::mt19937_64 rng_;
};

ad::Var affine(ad::Tape& t, ad::Var x, const ad::Parameter& w, const ad::Parameter& b)
{
    ad::Var y = ad::matmul(x, t.param(w));
    ad::Var bias = t.param(b);
    if (y.rows() != 1) bias = ad::repeat_rows(bias, y.rows());
    return ad::add(y, bias);
}

void check_image(ad::Var image, Index window, Index features, const char* who)
{
    if ((window > 0 && image.rows() != window) || image.cols() != features)
        throw ValidationError(std::string(who) + ": expected image " + shape_string(window, features) + ", got " +
                              shape_of(image.value()));
}

} // namespace

// ---------------------------------------------------------------------------

ARModel::ARModel(Index features, Index order) : order_(order)
{
    if (order < 0 || features < 1) throw ValidationError("ARModel: invalid order or feature count");
    weights_.value = Matrix::Zero(features, order + 1);
    bias_.value = Matrix::Zero(1, features);
}

ad::Var ARModel::forward(ad::Tape& tape, ad::Var image) const
{
    if (image.rows() < order_ + 1)
        throw ValidationError("ar_forecast: window " + std::to_string(image.rows()) + " shorter than order+1 = " +
                              std::to_string(order_ + 1));
    if (image.cols() != features())
        throw ValidationError("ar_forecast: image has " + std::to_string(image.cols()) + " features, model " +
                              std::to_string(features()));
    return ad::add(ad::lag_dot(image, tape.param(weights_)), tape.param(bias_));
}

RowVector ARModel::forecast(const Matrix& image) const
{
    ad::Tape tape(ad::TrackPolicy::explicit_only);
    return forward(tape, tape.constant(image)).value();
}

ConstParameterList NeuralNet::parameters() const
{
    auto list = const_cast<NeuralNet*>(this)->parameters();
    return ConstParameterList(list.begin(), list.end());
}

// ---------------------------------------------------------------------------

MlpNet::MlpNet(Index window, Index features, const std::vector<Index>& hidden, Activation activation)
    : window_(window), features_(features), activation_(activation)
{
    std::vector<Index> widths{window * features};
    widths.insert(widths.end(), hidden.begin(), hidden.end());
    widths.push_back(features);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        weights_.push_back({"neural.mlp.w" + std::to_string(l), Matrix::Zero(widths[l], widths[l + 1]), true});
        biases_.push_back({"neural.mlp.b" + std::to_string(l), Matrix::Zero(1, widths[l + 1]), false});
    }
}

ad::Var MlpNet::forward(ad::Tape& tape, ad::Var image) const
{
    check_image(image, window_, features_, "mlp");
    ad::Var h = ad::flatten(image);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        h = affine(tape, h, weights_[l], biases_[l]);
        if (l + 1 < weights_.size()) h = activation_ == Activation::relu ? ad::relu(h) : ad::tanh(h);
    }
    return h;
}

ParameterList MlpNet::parameters()
{
    ParameterList out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

// ---------------------------------------------------------------------------

TemporalCnn::TemporalCnn(Index window, Index features, Index layers, Index channels, Index kernel)
    : window_(window), features_(features), kernel_(kernel)
{
    if (layers < 1 || channels < 1 || kernel < 1) throw ValidationError("cnn: layers, channels, kernel must be >= 1");
    Index cin = features;
    for (Index l = 0; l < layers; ++l) {
        kernels_.push_back({"neural.cnn.k" + std::to_string(l), Matrix::Zero(kernel * cin, channels), true});
        biases_.push_back({"neural.cnn.b" + std::to_string(l), Matrix::Zero(1, channels), false});
        cin = channels;
    }
    head_w_ = {"neural.cnn.head_w", Matrix::Zero(window * channels, features), true};
    head_b_ = {"neural.cnn.head_b", Matrix::Zero(1, features), false};
}

ad::Var TemporalCnn::forward(ad::Tape& tape, ad::Var image) const
{
    check_image(image, window_, features_, "cnn");
    ad::Var h = image;
    for (std::size_t l = 0; l < kernels_.size(); ++l) {
        h = ad::conv1d_causal(h, tape.param(kernels_[l]), kernel_);
        h = ad::relu(ad::add(h, ad::repeat_rows(tape.param(biases_[l]), h.rows())));
    }
    return affine(tape, ad::flatten(h), head_w_, head_b_);
}

ParameterList TemporalCnn::parameters()
{
    ParameterList out;
    for (std::size_t l = 0; l < kernels_.size(); ++l) {
        out.push_back(&kernels_[l]);
        out.push_back(&biases_[l]);
    }
    out.push_back(&head_w_);
    out.push_back(&head_b_);
    return out;
}

// ---------------------------------------------------------------------------

GruNet::GruNet(Index features, Index hidden) : features_(features), hidden_(hidden)
{
    if (hidden < 1) throw ValidationError("gru: hidden size must be >= 1");
    w_ih_ = {"neural.gru.w_ih", Matrix::Zero(features, 3 * hidden), true};
    w_hh_ = {"neural.gru.w_hh", Matrix::Zero(hidden, 3 * hidden), true};
    b_ih_ = {"neural.gru.b_ih", Matrix::Zero(1, 3 * hidden), false};
    b_hh_ = {"neural.gru.b_hh", Matrix::Zero(1, 3 * hidden), false};
    head_w_ = {"neural.gru.head_w", Matrix::Zero(hidden, features), true};
    head_b_ = {"neural.gru.head_b", Matrix::Zero(1, features), false};
}

ad::Var GruNet::forward(ad::Tape& tape, ad::Var image) const
{
    check_image(image, 0, features_, "gru");
    const Index H = hidden_;
    // Input projections for every row at once.
    ad::Var gx_all = affine(tape, image, w_ih_, b_ih_);
    ad::Var w_hh = tape.param(w_hh_);
    ad::Var b_hh = tape.param(b_hh_);
    ad::Var h = tape.constant(Matrix::Zero(1, H));
    for (Index t = 0; t < image.rows(); ++t) {
        ad::Var gx = ad::slice(gx_all, t, 0, 1, 3 * H);
        ad::Var gh = ad::add(ad::matmul(h, w_hh), b_hh);
        ad::Var r = ad::sigmoid(ad::add(ad::slice(gx, 0, 0, 1, H), ad::slice(gh, 0, 0, 1, H)));
        ad::Var z = ad::sigmoid(ad::add(ad::slice(gx, 0, H, 1, H), ad::slice(gh, 0, H, 1, H)));
        ad::Var n = ad::tanh(ad::add(ad::slice(gx, 0, 2 * H, 1, H), ad::mul(r, ad::slice(gh, 0, 2 * H, 1, H))));
        // h' = n + z * (h - n)
        h = ad::add(n, ad::mul(z, ad::sub(h, n)));
    }
    return affine(tape, h, head_w_, head_b_);
}

std::vector<RowVector> GruNet::hidden_states(const Matrix& image) const
{
    const Index H = hidden_;
    std::vector<RowVector> out;
    RowVector h = RowVector::Zero(H);
    const Matrix gx_all = (image * w_ih_.value).rowwise() + b_ih_.value.row(0);
    const auto sig = [](const RowVector& v) { return RowVector((1.0 / (1.0 + (-v.array()).exp())).matrix()); };
    for (Index t = 0; t < image.rows(); ++t) {
        const RowVector gx = gx_all.row(t);
        const RowVector gh = h * w_hh_.value + b_hh_.value.row(0);
        const RowVector r = sig(gx.segment(0, H) + gh.segment(0, H));
        const RowVector z = sig(gx.segment(H, H) + gh.segment(H, H));
        const RowVector n = (gx.segment(2 * H, H).array() + r.array() * gh.segment(2 * H, H).array()).tanh().matrix();
        h = n.array() + z.array() * (h - n).array();
        out.push_back(h);
    }
    return out;
}

ParameterList GruNet::parameters() { return {&w_ih_, &w_hh_, &b_ih_, &b_hh_, &head_w_, &head_b_}; }

// ---------------------------------------------------------------------------

Matrix sinusoidal_positions(Index length, Index dim)
{
    Matrix pe(length, dim);
    for (Index pos = 0; pos < length; ++pos)
        for (Index i = 0; i < dim; ++i) {
            const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
            pe(pos, i) = (i % 2 == 0) ? std::sin(static_cast<double>(pos) * rate) : std::cos(static_cast<double>(pos) * rate);
        }
    return pe;
}

AttentionEncoder::AttentionEncoder(Index window, Index features, Index model_dim, Index ff_dim)
    : window_(window), model_dim_(model_dim), positions_(sinusoidal_positions(window, model_dim))
{
    if (model_dim < 1 || ff_dim < 1) throw ValidationError("attention: dimensions must be >= 1");
    const auto z = [](Index r, Index c) { return Matrix::Zero(r, c); };
    w_in = {"neural.attention.w_in", z(features, model_dim), true};
    b_in = {"neural.attention.b_in", z(1, model_dim), false};
    w_q = {"neural.attention.w_q", z(model_dim, model_dim), true};
    w_k = {"neural.attention.w_k", z(model_dim, model_dim), true};
    w_v = {"neural.attention.w_v", z(model_dim, model_dim), true};
    w_o = {"neural.attention.w_o", z(model_dim, model_dim), true};
    ff_w1 = {"neural.attention.ff_w1", z(model_dim, ff_dim), true};
    ff_b1 = {"neural.attention.ff_b1", z(1, ff_dim), false};
    ff_w2 = {"neural.attention.ff_w2", z(ff_dim, model_dim), true};
    ff_b2 = {"neural.attention.ff_b2", z(1, model_dim), false};
    head_w = {"neural.attention.head_w", z(model_dim, features), true};
    head_b = {"neural.attention.head_b", z(1, features), false};
}

ad::Var AttentionEncoder::forward(ad::Tape& tape, ad::Var image) const
{
    check_image(image, window_, w_in.value.rows(), "attention");
    const Index w = image.rows();
    ad::Var e = ad::add(affine(tape, image, w_in, b_in), tape.constant(positions_));

    ad::Var n1 = ad::layer_norm_rows(e);
    ad::Var q = ad::matmul(n1, tape.param(w_q));
    ad::Var k = ad::matmul(n1, tape.param(w_k));
    ad::Var v = ad::matmul(n1, tape.param(w_v));
    ad::Var scores = ad::scale(ad::matmul(q, ad::transpose(k)), 1.0 / std::sqrt(static_cast<double>(model_dim_)));
    ad::Var attended = ad::matmul(ad::matmul(ad::softmax(scores, 1), v), tape.param(w_o));
    ad::Var h = ad::add(e, attended);

    ad::Var n2 = ad::layer_norm_rows(h);
    ad::Var ff = affine(tape, ad::relu(affine(tape, n2, ff_w1, ff_b1)), ff_w2, ff_b2);
    h = ad::add(h, ff);

    ad::Var pooled = ad::matmul(tape.constant(Matrix::Constant(1, w, 1.0 / static_cast<double>(w))), h);
    return affine(tape, pooled, head_w, head_b);
}

ParameterList AttentionEncoder::parameters()
{
    return {&w_in, &b_in, &w_q, &w_k, &w_v, &w_o, &ff_w1, &ff_b1, &ff_w2, &ff_b2, &head_w, &head_b};
}

// ---------------------------------------------------------------------------

std::unique_ptr<NeuralNet> make_neural(const ModelConfig& c, std::uint64_t seed)
{
    std::unique_ptr<NeuralNet> net;
    const auto& n = c.neural;
    switch (n.kind) {
    case NeuralKind::none: return nullptr;
    case NeuralKind::mlp: net = std::make_unique<MlpNet>(c.window, c.features, n.mlp_hidden, n.mlp_activation); break;
    case NeuralKind::cnn:
        net = std::make_unique<TemporalCnn>(c.window, c.features, n.cnn_layers, n.cnn_channels, n.cnn_kernel);
        break;
    case NeuralKind::gru: net = std::make_unique<GruNet>(c.features, n.gru_hidden); break;
    case NeuralKind::attention:
        net = std::make_unique<AttentionEncoder>(c.window, c.features, n.attention_dim, n.attention_ff);
        break;
    }
    // Uniform(-a, a), a = 1/sqrt(fan_in); fan_in is the row count of the matrix a
    // vector multiplies, and biases share the fan_in of their layer.
    Initializer init(seed);
    Index fan_in = 1;
    for (ad::Parameter* p : net->parameters()) {
        if (p->decay) fan_in = p->value.rows();
        *p = init.make(p->name, p->value.rows(), p->value.cols(), fan_in, p->decay);
    }
    return net;
}

Forecaster::Forecaster(const ModelConfig& config) : config_(config)
{
    if (config.window < 1 || config.features < 1) throw ValidationError("Forecaster: invalid window/features");
    if (config.ar_enabled) {
        if (config.ar_order + 1 > config.window)
            throw ValidationError("Forecaster: AR order " + std::to_string(config.ar_order) + " needs window >= " +
                                  std::to_string(config.ar_order + 1));
        ar_.emplace(config.features, config.ar_order);
        std::mt19937_64 rng(derive_seed(config.seed, 0xA2));
        const double a = 1.0 / std::sqrt(static_cast<double>(config.ar_order + 1));
        std::uniform_real_distribution<double> u(-a, a);
        for (Index i = 0; i < ar_->weights().value.size(); ++i) ar_->weights().value.data()[i] = u(rng);
        for (Index i = 0; i < ar_->bias().value.size(); ++i) ar_->bias().value.data()[i] = u(rng);
    }
    neural_ = make_neural(config, derive_seed(config.seed, 0x4E));
    if (!ar_ && !neural_) throw ValidationError("Forecaster: both AR and neural components disabled");
}

ad::Var Forecaster::forward(ad::Tape& tape, ad::Var image) const
{
    if (image.rows() != config_.window || image.cols() != config_.features)
        throw ValidationError("forecast: image " + shape_of(image.value()) + " does not match model " +
                              shape_string(config_.window, config_.features));
    if (ar_ && neural_) return combine(ar_->forward(tape, image), neural_->forward(tape, image));
    if (ar_) return ar_->forward(tape, image);
    return neural_->forward(tape, image);
}

RowVector Forecaster::forecast(const Matrix& image) const
{
    ad::Tape tape(ad::TrackPolicy::explicit_only);
    return forward(tape, tape.constant(image)).value();
}

ParameterList Forecaster::parameters()
{
    ParameterList out;
    if (ar_) {
        out.push_back(&ar_->weights());
        out.push_back(&ar_->bias());
    }
    if (neural_) {
        auto n = neural_->parameters();
        out.insert(out.end(), n.begin(), n.end());
    }
    return out;
}

ConstParameterList Forecaster::parameters() const
{
    auto list = const_cast<Forecaster*>(this)->parameters();
    return ConstParameterList(list.begin(), list.end());
}

std::vector<Matrix> Forecaster::snapshot() const
{
    std::vector<Matrix> out;
    for (const ad::Parameter* p : parameters()) out.push_back(p->value);
    return out;
}

void Forecaster::restore(const std::vector<Matrix>& values)
{
    auto params = parameters();
    if (values.size() != params.size()) throw ValidationError("restore: parameter count mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

RowVector combine(const RowVector& y_ar, const RowVector& y_neural)
{
    if (y_ar.size() != y_neural.size())
        throw ValidationError("combine: dimension mismatch " + std::to_string(y_ar.size()) + " vs " +
                              std::to_string(y_neural.size()));
    return y_ar + y_neural;
}

ad::Var combine(ad::Var y_ar, ad::Var y_neural) { return ad::add(y_ar, y_neural); }

// ---------------------------------------------------------------------------

const Matrix* Checkpoint::find(const std::string& name) const
{
    for (const auto& t : tensors)
        if (t.name == name) return &t.value;
    return nullptr;
}

std::string serialize_checkpoint(const Checkpoint& ck)
{
    std::ostringstream out;
    out << checkpoint_magic << '\n';
    out << "config " << ck.config_text.size() << '\n' << ck.config_text << '\n';
    out << "tensors " << ck.tensors.size() << '\n';
    out << std::setprecision(17);
    for (const auto& t : ck.tensors) {
        out << "tensor " << t.name << ' ' << t.value.rows() << ' ' << t.value.cols() << '\n';
        for (Index i = 0; i < t.value.rows(); ++i) {
            for (Index j = 0; j < t.value.cols(); ++j) out << (j ? " " : "") << t.value(i, j);
            out << '\n';
        }
    }
    return out.str();
}

Checkpoint parse_checkpoint(const std::string& text)
{
    std::istringstream in(text);
    std::string word;
    if (!(in >> word) || word != checkpoint_magic) throw ValidationError("checkpoint: bad magic, expected SSAL1");
    std::size_t nbytes = 0;
    if (!(in >> word >> nbytes) || word != "config") throw ValidationError("checkpoint: missing config block");
    in.get();
    Checkpoint ck;
    ck.config_text.resize(nbytes);
    in.read(ck.config_text.data(), static_cast<std::streamsize>(nbytes));
    std::size_t count = 0;
    if (!(in >> word >> count) || word != "tensors") throw ValidationError("checkpoint: missing tensors block");
    for (std::size_t k = 0; k < count; ++k) {
        NamedTensor t;
        Index rows = 0, cols = 0;
        if (!(in >> word >> t.name >> rows >> cols) || word != "tensor" || rows < 0 || cols < 0)
            throw ValidationError("checkpoint: malformed tensor header #" + std::to_string(k));
        t.value.resize(rows, cols);
        for (Index i = 0; i < rows; ++i)
            for (Index j = 0; j < cols; ++j) {
                std::string tok;
                if (!(in >> tok)) throw ValidationError("checkpoint: truncated tensor " + t.name);
                t.value(i, j) = std::stod(tok);
            }
        ck.tensors.push_back(std::move(t));
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write checkpoint " + path.string());
    out << serialize_checkpoint(ck);
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open checkpoint " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str());
}

void store_parameters(const ConstParameterList& params, Checkpoint& ck)
{
    for (const ad::Parameter* p : params) ck.tensors.push_back({p->name, p->value});
}

void load_parameters(const ParameterList& params, const Checkpoint& ck)
{
    for (ad::Parameter* p : params) {
        const Matrix* m = ck.find(p->name);
        if (!m) throw ValidationError("checkpoint: missing tensor " + p->name);
        if (m->rows() != p->value.rows() || m->cols() != p->value.cols())
            throw ValidationError("checkpoint: tensor " + p->name + " is " + shape_of(*m) + ", model expects " +
                                  shape_of(p->value));
        p->value = *m;
    }
}

} // namespace ssal
