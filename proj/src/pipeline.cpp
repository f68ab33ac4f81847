#include "ssal/pipeline.hpp"

#include "ssal/analysis.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::json;

namespace ssal {

namespace {

std::string utc_now()
{
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string read_text(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeError("cannot write " + path.string());
    out << text;
    if (!out) throw RuntimeError("write failed for " + path.string());
}

void require(const fs::path& path, const std::string& stage)
{
    if (!fs::exists(path))
        throw ValidationError(path.string() + " is missing; run `" + stage + "` first");
}

json to_json(const RowVector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

RowVector row_from_json(const json& a)
{
    RowVector v(static_cast<Index>(a.size()));
    for (Index i = 0; i < v.size(); ++i) v(i) = a.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

/// The [data] part of the echo; prepared data is reused only while it matches.
std::string data_fingerprint(const RunConfig& config)
{
    const std::string text = to_text(config);
    const auto begin = text.find("[data]");
    const auto end = text.find("\n[", begin + 1);
    return text.substr(begin, end - begin);
}

ReferenceSpec with_fill(ReferenceSpec spec, const PreparedData& prepared)
{
    if (spec.mode == ReferenceMode::constant) spec.constant_values = column_means(prepared.scaled, prepared.split[0]);
    return spec;
}

std::vector<std::string> feature_names(const PreparedData& prepared)
{
    return prepared.scaled.feature_names;
}

std::string csv_field(double v, int decimals)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

} // namespace

fs::path RunLayout::saliency_csv(Index id) const { return saliency_dir() / ("saliency_" + std::to_string(id) + ".csv"); }
fs::path RunLayout::saliency_trace(Index id) const
{
    return saliency_dir() / ("saliency_" + std::to_string(id) + ".trace.csv");
}
fs::path RunLayout::saliency_pgm(Index id) const { return saliency_dir() / ("saliency_" + std::to_string(id) + ".pgm"); }

std::vector<Sample> PreparedData::windows(int part) const
{
    return make_windows(scaled, split.at(static_cast<std::size_t>(part)), window, horizon);
}

std::string version_string() { return SSAL_VERSION_STRING; }

void write_manifest(const RunLayout& run, const RunConfig& config, const std::string& stage)
{
    fs::create_directories(run.root);
    json manifest = json::object();
    if (fs::exists(run.manifest())) {
        try {
            manifest = json::parse(read_text(run.manifest()));
        } catch (const json::exception&) {
            manifest = json::object();
        }
    }
    manifest["version"] = version_string();
    manifest["seed"] = config.seed();
    manifest["config"] = to_text(config);
    manifest["layout"] = {
        {"config", "config.ini"},
        {"prepared", "prepared/scaled.csv, prepared/prepare.json"},
        {"checkpoint", "model.ckpt"},
        {"shared_mask", "shared_mask.csv"},
        {"loss_history", "loss_history.csv"},
        {"metrics", "metrics.csv"},
        {"saliency", "saliency/saliency_<id>.{csv,trace.csv,pgm}"},
        {"permutation", "permutation.csv"},
        {"analysis", "analysis/feature_importance.csv, analysis/*.pgm"},
        {"export", "export/predictions.csv"},
    };
    manifest["stages"][stage] = {{"started_utc", utc_now()}, {"seed", config.seed()}};
    write_text(run.manifest(), manifest.dump(2) + "\n");
}

RunConfig load_run_config(const RunLayout& run, std::optional<std::uint64_t> seed_override)
{
    require(run.config(), "train");
    RunConfig cfg = parse_config(read_text(run.config()));
    if (seed_override) cfg.set_seed(*seed_override);
    return cfg;
}

PreparedData prepare_stage(const RunConfig& config, const RunLayout& run)
{
    config.validate();
    if (config.data.path.empty()) throw ValidationError("config: data.path is required");
    write_manifest(run, config, "prepare");
    write_text(run.config(), to_text(config));

    CsvOptions options{config.data.has_header, config.data.timestamp_col, config.data.missing};
    SeriesFrame frame = load_csv(config.data.path, options);
    if (frame.feature_names.empty())
        for (Index j = 0; j < frame.features(); ++j) frame.feature_names.push_back("f" + std::to_string(j));
    if (config.data.target_col >= frame.features())
        throw ValidationError("data.target_col " + std::to_string(config.data.target_col) + " out of range for " +
                              std::to_string(frame.features()) + " features");

    PreparedData out;
    out.window = config.data.window;
    out.horizon = config.data.horizon;
    out.split = chronological_split(frame.length(), config.data.split, out.window, out.horizon);
    out.scaler = fit_scaler(frame, out.split[0]);
    out.scaled = apply_scaler(frame, out.scaler);

    fs::create_directories(run.prepared_dir());
    write_csv(run.scaled_csv(), out.scaled);
    json meta = {
        {"source", config.data.path},
        {"data_config", data_fingerprint(config)},
        {"features", out.scaled.feature_names},
        {"length", out.scaled.length()},
        {"window", out.window},
        {"horizon", out.horizon},
        {"scaler", {{"min", to_json(out.scaler.min)}, {"max", to_json(out.scaler.max)}}},
        {"split", json::array()},
    };
    for (const Interval& iv : out.split) meta["split"].push_back({iv.begin, iv.end});
    write_text(run.prepared_json(), meta.dump(2) + "\n");
    spdlog::info("prepared {} rows x {} features; split train [{}, {}) val [{}, {}) test [{}, {})",
                 out.scaled.length(), out.scaled.features(), out.split[0].begin, out.split[0].end,
                 out.split[1].begin, out.split[1].end, out.split[2].begin, out.split[2].end);
    return out;
}

PreparedData load_prepared(const RunLayout& run)
{
    require(run.prepared_json(), "prepare");
    const json meta = json::parse(read_text(run.prepared_json()));
    PreparedData out;
    out.scaled = load_csv(run.scaled_csv());
    out.scaler.min = row_from_json(meta.at("scaler").at("min"));
    out.scaler.max = row_from_json(meta.at("scaler").at("max"));
    out.window = meta.at("window").get<Index>();
    out.horizon = meta.at("horizon").get<Index>();
    for (std::size_t k = 0; k < 3; ++k)
        out.split[k] = Interval{meta.at("split").at(k).at(0).get<Index>(), meta.at("split").at(k).at(1).get<Index>()};
    if (out.scaler.features() != out.scaled.features())
        throw ValidationError("prepared data is inconsistent: scaler and series disagree on feature count");
    return out;
}

TrainStageResult train_stage(const RunConfig& config, const RunLayout& run)
{
    config.validate();
    PreparedData prepared;
    bool reuse = false;
    if (fs::exists(run.prepared_json())) {
        const json meta = json::parse(read_text(run.prepared_json()));
        reuse = meta.value("data_config", std::string()) == data_fingerprint(config);
    }
    prepared = reuse ? load_prepared(run) : prepare_stage(config, run);
    write_manifest(run, config, "train");
    write_text(run.config(), to_text(config));

    ModelConfig mc = config.model;
    mc.window = prepared.window;
    mc.features = prepared.scaled.features();
    Forecaster model(mc);
    Mask mask(mc.window, mc.features, config.train.mask_init_logit);
    TrainConfig tc = config.train;
    tc.reference = with_fill(tc.reference, prepared);

    const auto train_set = prepared.windows(0);
    const auto val_set = prepared.windows(1);
    TrainStageResult out;
    out.train = train(model, mask, train_set, tc, val_set);
    out.validation = evaluate(model, val_set, nullptr, config.data.target_col);

    Checkpoint ckpt;
    ckpt.config_text = to_text(config);
    store_parameters(std::as_const(model).parameters(), ckpt);
    if (config.train.mask_enabled) ckpt.tensors.push_back({"mask.logits", mask.logits()});
    save_checkpoint(run.checkpoint(), ckpt);

    if (config.train.mask_enabled)
        write_matrix_csv(run.shared_mask_csv(), mask.values(), feature_names(prepared), 6);
    else
        fs::remove(run.shared_mask_csv());

    std::string history = "epoch,train_loss,val_rse,val_corr\n";
    for (const EpochRecord& r : out.train.history)
        history += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," + format_double(r.val_rse) + "," +
                   format_double(r.val_corr) + "\n";
    write_text(run.loss_history(), history);
    spdlog::info("trained {} epochs (best {}), validation rse={} corr={}", out.train.history.size(),
                 out.train.best_epoch, out.validation.rse, out.validation.corr);
    return out;
}

Forecaster load_model(const RunLayout& run)
{
    require(run.checkpoint(), "train");
    const Checkpoint ckpt = load_checkpoint(run.checkpoint());
    const RunConfig trained = parse_config(ckpt.config_text);
    const PreparedData prepared = load_prepared(run);
    ModelConfig mc = trained.model;
    mc.window = prepared.window;
    mc.features = prepared.scaled.features();
    Forecaster model(mc);
    load_parameters(model.parameters(), ckpt);
    return model;
}

EvalResult evaluate_stage(const RunConfig& config, const RunLayout& run)
{
    const PreparedData prepared = load_prepared(run);
    const Forecaster model = load_model(run);
    write_manifest(run, config, "evaluate");
    const EvalResult r = evaluate(model, prepared.windows(2), &prepared.scaler, config.data.target_col);
    std::string text = "split,rse,corr,excluded_features,rse_unscaled,corr_unscaled\n";
    text += "test," + format_double(r.rse) + "," + format_double(r.corr) + "," + std::to_string(r.excluded_features) +
            "," + format_double(r.rse_unscaled.value_or(r.rse)) + "," + format_double(r.corr_unscaled.value_or(r.corr)) +
            "\n";
    write_text(run.metrics(), text);
    return r;
}

std::vector<Index> select_samples(Index available, Index count)
{
    if (count < 0) throw ValidationError("sample count must be >= 0");
    if (count > available)
        throw ValidationError("requested " + std::to_string(count) + " samples but the test split has " +
                              std::to_string(available) + " windows");
    std::vector<Index> ids;
    for (Index k = 0; k < count; ++k) ids.push_back(k * available / count);
    return ids;
}

std::vector<InterpretOutcome> interpret_stage(const RunConfig& config, const RunLayout& run, Index count,
                                              unsigned jobs)
{
    const PreparedData prepared = load_prepared(run);
    const Forecaster model = load_model(run);
    write_manifest(run, config, "interpret");

    const auto test = prepared.windows(2);
    std::vector<std::pair<Index, Sample>> samples;
    for (Index id : select_samples(static_cast<Index>(test.size()), count))
        samples.emplace_back(id, test[static_cast<std::size_t>(id)]);

    InterpretConfig ic = config.interpret;
    ic.reference = with_fill(ic.reference, prepared);
    const auto outcomes = interpret_batch(model, samples, ic, jobs);

    fs::create_directories(run.saliency_dir());
    for (const auto& entry : fs::directory_iterator(run.saliency_dir()))
        if (entry.path().filename().string().rfind("saliency_", 0) == 0) fs::remove(entry.path());
    for (const InterpretOutcome& o : outcomes) {
        if (!o.map) {
            spdlog::error("sample {}: {}", o.sample_id, o.error);
            continue;
        }
        write_matrix_csv(run.saliency_csv(o.sample_id), o.map->mask_values, feature_names(prepared), 6);
        std::string trace = "step,loss\n";
        for (std::size_t s = 0; s < o.map->loss_trace.size(); ++s)
            trace += std::to_string(s) + "," + format_double(o.map->loss_trace[s]) + "\n";
        write_text(run.saliency_trace(o.sample_id), trace);
        export_heatmap_pgm(o.map->mask_values, run.saliency_pgm(o.sample_id));
    }
    return outcomes;
}

std::vector<Index> saliency_ids(const RunLayout& run)
{
    std::vector<Index> ids;
    if (!fs::exists(run.saliency_dir())) return ids;
    const std::regex pattern(R"(saliency_(\d+)\.csv)");
    for (const auto& entry : fs::directory_iterator(run.saliency_dir())) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) ids.push_back(std::stoll(m[1].str()));
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

namespace {

std::vector<Matrix> read_maps(const RunLayout& run, const std::vector<Index>& ids, unsigned jobs)
{
    std::vector<Matrix> maps(ids.size());
    std::vector<std::string> errors(ids.size());
    parallel_for(ids.size(), jobs, [&](std::size_t i) {
        try {
            maps[i] = read_matrix_csv(run.saliency_csv(ids[i]));
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (const auto& e : errors)
        if (!e.empty()) throw ValidationError(e);
    return maps;
}

Matrix mean_map(const std::vector<Matrix>& maps)
{
    Matrix acc = Matrix::Zero(maps.front().rows(), maps.front().cols());
    for (const Matrix& m : maps) {
        if (m.rows() != acc.rows() || m.cols() != acc.cols())
            throw ValidationError("saliency maps disagree in shape: " + shape_of(m) + " vs " + shape_of(acc));
        acc += m;
    }
    return acc / static_cast<double>(maps.size());
}

} // namespace

PermutationResult permute_stage(const RunConfig& config, const RunLayout& run)
{
    const PreparedData prepared = load_prepared(run);
    const auto ids = saliency_ids(run);
    if (ids.empty()) throw ValidationError("no saliency maps in " + run.saliency_dir().string() + "; run `interpret` first");
    std::vector<Index> chosen = ids;
    if (config.permute.aggregate != "mean") {
        const Index id = std::stoll(config.permute.aggregate);
        if (std::find(ids.begin(), ids.end(), id) == ids.end())
            throw ValidationError("permute.aggregate: no saliency map for sample " + config.permute.aggregate);
        chosen = {id};
    }
    write_manifest(run, config, "permute");
    const Matrix mean = mean_map(read_maps(run, chosen, 1));
    const Matrix dist = distance_matrix(mean);
    AnnealSchedule schedule = default_schedule(dist);
    schedule.alpha = config.permute.alpha;
    if (config.permute.iters_per_temp > 0) schedule.iters_per_temp = config.permute.iters_per_temp;
    const PermutationResult best =
        anneal_restarts(dist, schedule, derive_seed(config.seed(), 0x5045524D), config.permute.restarts,
                        config.permute.cycle);

    std::string text = "rank,feature,name,objective\n";
    const auto names = feature_names(prepared);
    for (std::size_t r = 0; r < best.order.size(); ++r) {
        const Index f = best.order[r];
        text += std::to_string(r) + "," + std::to_string(f) + "," + names.at(static_cast<std::size_t>(f)) + "," +
                format_double(best.objective) + "\n";
    }
    write_text(run.permutation(), text);
    return best;
}

FeatureImportance analyze_stage(const RunConfig& config, const RunLayout& run, unsigned jobs)
{
    const PreparedData prepared = load_prepared(run);
    const auto ids = saliency_ids(run);
    if (ids.empty()) throw ValidationError("no saliency maps in " + run.saliency_dir().string() + "; run `interpret` first");
    write_manifest(run, config, "analyze");
    const auto maps = read_maps(run, ids, jobs);
    const auto test = prepared.windows(2);
    std::vector<Matrix> images;
    for (Index id : ids) {
        if (id >= static_cast<Index>(test.size()))
            throw ValidationError("saliency id " + std::to_string(id) + " is outside the test split");
        images.push_back(test[static_cast<std::size_t>(id)].image.values);
    }
    const FeatureImportance fi = feature_importance(maps, images);

    fs::create_directories(run.analysis_dir());
    std::string text = "feature,name,mean_saliency,periodicity_score\n";
    const auto names = feature_names(prepared);
    for (Index j = 0; j < fi.mean_saliency.size(); ++j)
        text += std::to_string(j) + "," + names.at(static_cast<std::size_t>(j)) + "," +
                csv_field(fi.mean_saliency(j), 6) + "," + csv_field(fi.periodicity(j), 6) + "\n";
    write_text(run.feature_importance(), text);
    export_heatmap_pgm(mean_map(maps), run.analysis_dir() / "mean_saliency.pgm");
    return fi;
}

void export_stage(const RunConfig& config, const RunLayout& run)
{
    const PreparedData prepared = load_prepared(run);
    const Forecaster model = load_model(run);
    write_manifest(run, config, "export");
    fs::create_directories(run.export_dir());

    const auto test = prepared.windows(2);
    const auto names = feature_names(prepared);
    Matrix truth(static_cast<Index>(test.size()), prepared.scaled.features());
    Matrix pred(truth.rows(), truth.cols());
    for (std::size_t i = 0; i < test.size(); ++i) {
        truth.row(static_cast<Index>(i)) = test[i].target;
        pred.row(static_cast<Index>(i)) = model.forecast(test[i].image.values);
    }
    truth = invert_scaler(truth, prepared.scaler);
    pred = invert_scaler(pred, prepared.scaler);

    std::string text = "row";
    for (const auto& n : names) text += ",truth_" + n;
    for (const auto& n : names) text += ",pred_" + n;
    text += "\n";
    for (Index i = 0; i < truth.rows(); ++i) {
        const auto& s = test[static_cast<std::size_t>(i)];
        text += std::to_string(s.image.start_index + s.image.window() - 1 + s.image.horizon);
        for (Index j = 0; j < truth.cols(); ++j) text += "," + format_double(truth(i, j));
        for (Index j = 0; j < pred.cols(); ++j) text += "," + format_double(pred(i, j));
        text += "\n";
    }
    write_text(run.export_dir() / "predictions.csv", text);
    if (fs::exists(run.shared_mask_csv()))
        export_heatmap_pgm(read_matrix_csv(run.shared_mask_csv()), run.export_dir() / "shared_mask.pgm");
}

Matrix read_matrix_csv(const fs::path& path) { return load_csv(path).values; }

void write_matrix_csv(const fs::path& path, const Matrix& values, const std::vector<std::string>& header,
                      int decimals)
{
    if (!header.empty() && static_cast<Index>(header.size()) != values.cols())
        throw ValidationError("write_matrix_csv: header has " + std::to_string(header.size()) + " names for " +
                              std::to_string(values.cols()) + " columns");
    std::string text;
    for (Index j = 0; j < values.cols(); ++j)
        text += (j ? "," : "") + (header.empty() ? "f" + std::to_string(j) : header[static_cast<std::size_t>(j)]);
    text += "\n";
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) text += (j ? "," : "") + csv_field(values(i, j), decimals);
        text += "\n";
    }
    write_text(path, text);
}

} // namespace ssal
