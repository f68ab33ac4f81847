#include "ssal/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace ssal {

namespace {

double parse_double(const std::string& key, const std::string& text)
{
    double v = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ValidationError("config: " + key + " expects a number, got '" + text + "'");
    return v;
}

long long parse_integer(const std::string& key, const std::string& text)
{
    long long v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ValidationError("config: " + key + " expects an integer, got '" + text + "'");
    return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text)
{
    std::uint64_t v = 0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size())
        throw ValidationError("config: " + key + " expects a non-negative integer, got '" + text + "'");
    return v;
}

bool parse_bool(const std::string& key, const std::string& text)
{
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw ValidationError("config: " + key + " expects true/false, got '" + text + "'");
}

std::vector<Index> parse_index_list(const std::string& key, const std::string& text)
{
    std::vector<Index> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b == std::string::npos) throw ValidationError("config: " + key + " has an empty list entry");
        out.push_back(static_cast<Index>(parse_integer(key, item.substr(b, e - b + 1))));
    }
    return out;
}

std::string join(const std::vector<Index>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string str(bool b) { return b ? "true" : "false"; }

MissingPolicy parse_missing(const std::string& text)
{
    if (text == "reject") return MissingPolicy::reject;
    if (text == "forward_fill") return MissingPolicy::forward_fill;
    throw ValidationError("config: data.missing must be reject or forward_fill, got '" + text + "'");
}

std::string str(MissingPolicy m) { return m == MissingPolicy::reject ? "reject" : "forward_fill"; }

struct Field {
    const char* section;
    const char* key;
    const char* doc;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string& name, const std::string& text)> set;
};

#define SSAL_DOUBLE(sec, name, member, doc)                                                                  \
    Field{sec, name, doc, [](const RunConfig& c) { return format_double(c.member); },                       \
          [](RunConfig& c, const std::string& k, const std::string& t) { c.member = parse_double(k, t); }}
#define SSAL_INDEX(sec, name, member, doc)                                                                   \
    Field{sec, name, doc, [](const RunConfig& c) { return std::to_string(c.member); },                      \
          [](RunConfig& c, const std::string& k, const std::string& t) {                                    \
              c.member = static_cast<decltype(c.member)>(parse_integer(k, t));                              \
          }}
#define SSAL_BOOL(sec, name, member, doc)                                                                    \
    Field{sec, name, doc, [](const RunConfig& c) { return str(c.member); },                                 \
          [](RunConfig& c, const std::string& k, const std::string& t) { c.member = parse_bool(k, t); }}

const std::vector<Field>& fields()
{
    static const std::vector<Field> table = {
        Field{"data", "path", "CSV file to load; relative paths resolve against the config file",
              [](const RunConfig& c) { return c.data.path; },
              [](RunConfig& c, const std::string&, const std::string& t) { c.data.path = t; }},
        SSAL_BOOL("data", "has_header", data.has_header, "first row holds feature names"),
        SSAL_BOOL("data", "timestamp_col", data.timestamp_col, "ignore the first column"),
        Field{"data", "missing", "reject | forward_fill",
              [](const RunConfig& c) { return str(c.data.missing); },
              [](RunConfig& c, const std::string&, const std::string& t) { c.data.missing = parse_missing(t); }},
        Field{"data", "window", "rows per series image (w)",
              [](const RunConfig& c) { return std::to_string(c.data.window); },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  c.data.window = static_cast<Index>(parse_integer(k, t));
                  c.model.window = c.data.window;
              }},
        SSAL_INDEX("data", "horizon", data.horizon, "steps between the last window row and the target (tau)"),
        SSAL_DOUBLE("data", "train_fraction", data.split.train, "chronological split, first part"),
        SSAL_DOUBLE("data", "val_fraction", data.split.val, "chronological split, middle part"),
        SSAL_DOUBLE("data", "test_fraction", data.split.test, "chronological split, last part"),
        Field{"data", "target_col", "score only this column (0-based); -1 scores every column",
              [](const RunConfig& c) { return std::to_string(c.data.target_col); },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  c.set_target_col(static_cast<Index>(parse_integer(k, t)));
              }},

        SSAL_BOOL("model", "ar_enabled", model.ar_enabled, "linear autoregressive component"),
        SSAL_INDEX("model", "ar_order", model.ar_order, "AR order p; the component reads p+1 lags"),
        Field{"model", "neural", "none | mlp | cnn | gru | attention",
              [](const RunConfig& c) { return to_string(c.model.neural.kind); },
              [](RunConfig& c, const std::string&, const std::string& t) {
                  c.model.neural.kind = parse_neural_kind(t);
              }},
        Field{"model", "mlp_hidden", "comma-separated hidden layer widths",
              [](const RunConfig& c) { return join(c.model.neural.mlp_hidden); },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  c.model.neural.mlp_hidden = parse_index_list(k, t);
              }},
        Field{"model", "mlp_activation", "relu | tanh",
              [](const RunConfig& c) { return to_string(c.model.neural.mlp_activation); },
              [](RunConfig& c, const std::string&, const std::string& t) {
                  c.model.neural.mlp_activation = parse_activation(t);
              }},
        SSAL_INDEX("model", "cnn_layers", model.neural.cnn_layers, "causal convolution layers"),
        SSAL_INDEX("model", "cnn_channels", model.neural.cnn_channels, "channels per convolution layer"),
        SSAL_INDEX("model", "cnn_kernel", model.neural.cnn_kernel, "convolution kernel length"),
        SSAL_INDEX("model", "gru_hidden", model.neural.gru_hidden, "GRU hidden size"),
        SSAL_INDEX("model", "attention_dim", model.neural.attention_dim, "attention model width"),
        SSAL_INDEX("model", "attention_ff", model.neural.attention_ff, "attention feed-forward width"),

        SSAL_DOUBLE("train", "lr", train.lr, "Adam learning rate"),
        SSAL_DOUBLE("train", "weight_decay", train.weight_decay, "decoupled weight decay on weight matrices"),
        SSAL_INDEX("train", "batch_size", train.batch_size, "samples per minibatch"),
        SSAL_INDEX("train", "epochs", train.epochs, "maximum epochs"),
        SSAL_INDEX("train", "patience", train.patience, "early stop after this many epochs without val RSE gain; 0 disables"),
        Field{"train", "seed", "seed for every random stream in the run (overridden by --seed)",
              [](const RunConfig& c) { return std::to_string(c.train.seed); },
              [](RunConfig& c, const std::string& k, const std::string& t) { c.set_seed(parse_unsigned(k, t)); }},
        Field{"train", "loss", "prediction loss; only mse is implemented",
              [](const RunConfig&) { return std::string("mse"); },
              [](RunConfig&, const std::string&, const std::string& t) {
                  if (t != "mse") throw ValidationError("config: train.loss '" + t + "' is not implemented (use mse)");
              }},

        Field{"reference", "mode", "training reference: constant | noise | blur | identity",
              [](const RunConfig& c) { return to_string(c.train.reference.mode); },
              [](RunConfig& c, const std::string&, const std::string& t) {
                  c.train.reference.mode = parse_reference_mode(t);
              }},
        SSAL_DOUBLE("reference", "sigma1", train.reference.sigma1, "noise std in scaled units"),
        SSAL_DOUBLE("reference", "sigma2", train.reference.sigma2, "blur std in time steps"),
        Field{"reference", "seed", "stream id mixed with train.seed for reference noise",
              [](const RunConfig& c) { return std::to_string(c.train.reference.seed); },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  c.train.reference.seed = parse_unsigned(k, t);
                  c.interpret.reference.seed = c.train.reference.seed;
              }},

        SSAL_BOOL("mask", "enabled", train.mask_enabled, "learn a shared perturbation mask during training"),
        SSAL_DOUBLE("mask", "lambda1", train.lambda1, "size penalty weight"),
        SSAL_DOUBLE("mask", "lambda2", train.lambda2, "smoothness penalty weight"),
        Field{"mask", "p0", "size norm order when size_penalty_complement is false (1, 2 or 3)",
              [](const RunConfig& c) { return std::to_string(c.train.p0); },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  c.train.p0 = static_cast<int>(parse_integer(k, t));
              }},
        SSAL_BOOL("mask", "size_penalty_complement", train.size_penalty_complement,
                  "penalize ||1-M||_1 (favours perturbation) instead of ||M||_p0"),
        SSAL_BOOL("mask", "feature_axis_smoothness", train.feature_axis_smoothness,
                  "also smooth across adjacent features; false for exchangeable features"),
        SSAL_DOUBLE("mask", "init_logit", train.mask_init_logit, "initial mask logit (0 gives m = 0.5)"),

        SSAL_INDEX("interpret", "steps", interpret.steps, "optimizer steps per sample"),
        Field{"interpret", "optimizer", "mask update rule: gd (plain gradient descent) | adam",
              [](const RunConfig& c) { return to_string(c.interpret.optimizer); },
              [](RunConfig& c, const std::string&, const std::string& t) {
                  c.interpret.optimizer = parse_interpret_optimizer(t);
              }},
        SSAL_DOUBLE("interpret", "lr", interpret.lr, "mask step size; around 10 for gd, 1e-2 for adam"),
        SSAL_DOUBLE("interpret", "lambda1", interpret.lambda1, "size penalty weight"),
        SSAL_DOUBLE("interpret", "lambda2", interpret.lambda2, "smoothness penalty weight"),
        Field{"interpret", "p0", "size norm order (1, 2 or 3)",
              [](const RunConfig& c) { return std::to_string(c.interpret.p0); },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  c.interpret.p0 = static_cast<int>(parse_integer(k, t));
              }},
        SSAL_BOOL("interpret", "feature_axis_smoothness", interpret.feature_axis_smoothness,
                  "also smooth across adjacent features"),
        Field{"interpret", "reference", "interpretation reference: constant | noise | blur | identity",
              [](const RunConfig& c) { return to_string(c.interpret.reference.mode); },
              [](RunConfig& c, const std::string&, const std::string& t) {
                  c.interpret.reference.mode = parse_reference_mode(t);
              }},
        SSAL_DOUBLE("interpret", "sigma1", interpret.reference.sigma1, "noise std in scaled units"),
        SSAL_DOUBLE("interpret", "sigma2", interpret.reference.sigma2, "blur std in time steps"),
        Field{"interpret", "against", "score the perturbed forecast against: target | self",
              [](const RunConfig& c) { return to_string(c.interpret.against); },
              [](RunConfig& c, const std::string&, const std::string& t) {
                  c.interpret.against = parse_interpret_target(t);
              }},
        SSAL_INDEX("interpret", "samples", interpret_samples, "test samples explained when --samples is absent"),

        Field{"permute", "aggregate", "mean of all saliency maps, or one sample id",
              [](const RunConfig& c) { return c.permute.aggregate; },
              [](RunConfig& c, const std::string& k, const std::string& t) {
                  if (t != "mean") (void)parse_unsigned(k, t);
                  c.permute.aggregate = t;
              }},
        SSAL_INDEX("permute", "restarts", permute.restarts, "independent annealing runs; the best is kept"),
        SSAL_BOOL("permute", "cycle", permute.cycle, "close the path into a cycle"),
        SSAL_DOUBLE("permute", "alpha", permute.alpha, "geometric cooling factor"),
        SSAL_INDEX("permute", "iters_per_temp", permute.iters_per_temp, "moves per temperature; 0 means 20 * D"),
    };
    return table;
}

#undef SSAL_DOUBLE
#undef SSAL_INDEX
#undef SSAL_BOOL

} // namespace

void RunConfig::set_seed(std::uint64_t s)
{
    train.seed = s;
    model.seed = s;
    interpret.seed = s;
}

void RunConfig::set_target_col(Index col)
{
    data.target_col = col;
    train.target_col = col;
    interpret.target_col = col;
}

void RunConfig::validate() const
{
    if (data.window < 1) throw ValidationError("data.window must be >= 1");
    if (data.horizon < 1) throw ValidationError("data.horizon must be >= 1");
    const double sum = data.split.train + data.split.val + data.split.test;
    if (!(data.split.train > 0 && data.split.val > 0 && data.split.test > 0) || std::abs(sum - 1.0) > 1e-9)
        throw ValidationError("data split fractions must be positive and sum to 1");
    if (data.target_col < -1) throw ValidationError("data.target_col must be >= -1");
    if (model.ar_enabled && model.ar_order < 0) throw ValidationError("model.ar_order must be >= 0");
    if (model.ar_enabled && model.ar_order + 1 > data.window)
        throw ValidationError("model.ar_order + 1 exceeds data.window");
    if (!model.ar_enabled && model.neural.kind == NeuralKind::none)
        throw ValidationError("model: both the AR and the neural component are disabled");
    train.validate();
    interpret.validate();
    if (interpret_samples < 0) throw ValidationError("interpret.samples must be >= 0");
    if (permute.restarts < 1) throw ValidationError("permute.restarts must be >= 1");
    if (!(permute.alpha > 0.0 && permute.alpha < 1.0)) throw ValidationError("permute.alpha must lie in (0, 1)");
    if (permute.iters_per_temp < 0) throw ValidationError("permute.iters_per_temp must be >= 0");
}

RunConfig parse_config(const std::string& text)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.message() + " at line " + std::to_string(e.line()));
    }

    std::map<std::string, const Field*> index;
    for (const Field& f : fields()) index[std::string(f.section) + "." + f.key] = &f;

    RunConfig cfg;
    cfg.model.window = cfg.data.window;
    cfg.interpret.reference.seed = cfg.train.reference.seed;
    std::vector<std::string> unknown;
    // Seed first so later keys cannot be clobbered by set_seed.
    if (auto seed = tree.get_optional<std::string>("train.seed")) index.at("train.seed")->set(cfg, "train.seed", *seed);
    std::set<std::string> sections;
    for (const Field& f : fields()) sections.insert(f.section);
    for (const auto& [section, body] : tree) {
        if (!sections.count(section)) {
            unknown.push_back(section);
            continue;
        }
        for (const auto& [key, value] : body) {
            const std::string name = section + "." + key;
            auto it = index.find(name);
            if (it == index.end()) {
                unknown.push_back(name);
                continue;
            }
            if (name == "train.seed") continue;
            it->second->set(cfg, name, value.data());
        }
    }
    if (!unknown.empty()) {
        std::string list;
        for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
        throw ValidationError("config: unknown keys: " + list);
    }
    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    RunConfig cfg = parse_config(ss.str());
    if (!cfg.data.path.empty()) {
        std::filesystem::path p(cfg.data.path);
        if (p.is_relative()) cfg.data.path = (path.parent_path() / p).lexically_normal().string();
    }
    return cfg;
}

namespace {

std::string render(const RunConfig& config, bool with_docs)
{
    std::string out;
    std::string section;
    for (const Field& f : fields()) {
        if (section != f.section) {
            if (!section.empty()) out += '\n';
            section = f.section;
            out += "[" + section + "]\n";
        }
        if (with_docs) out += std::string("; ") + f.doc + "\n";
        out += std::string(f.key) + " = " + f.get(config) + "\n";
    }
    return out;
}

} // namespace

std::string to_text(const RunConfig& config) { return render(config, false); }

std::string config_reference() { return render(RunConfig{}, true); }

} // namespace ssal
