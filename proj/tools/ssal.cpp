// Command-line front end: one subcommand per pipeline stage.
#include "ssal/pipeline.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <optional>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string run;
    std::optional<std::uint64_t> seed;
    std::optional<long long> target_col;
    bool timestamp_col = false;
    unsigned jobs = 1;
    std::optional<long long> samples;
};

void configure_logging()
{
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::warn);
    if (const char* level = std::getenv("SSAL_LOG")) {
        const std::string v = level;
        if (v == "error") spdlog::set_level(spdlog::level::err);
        else if (v == "info") spdlog::set_level(spdlog::level::info);
        else if (v == "debug") spdlog::set_level(spdlog::level::debug);
        else throw ssal::ValidationError("SSAL_LOG must be error, info or debug, got '" + v + "'");
    }
}

void apply_overrides(ssal::RunConfig& cfg, const Options& o)
{
    if (o.seed) cfg.set_seed(*o.seed);
    if (o.target_col) cfg.set_target_col(static_cast<ssal::Index>(*o.target_col));
    if (o.timestamp_col) cfg.data.timestamp_col = true;
    cfg.validate();
}

ssal::RunConfig config_from_file(const Options& o)
{
    ssal::RunConfig cfg = ssal::load_config(o.config);
    apply_overrides(cfg, o);
    return cfg;
}

ssal::RunConfig config_from_run(const ssal::RunLayout& run, const Options& o)
{
    ssal::RunConfig cfg = ssal::load_run_config(run);
    apply_overrides(cfg, o);
    return cfg;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Series saliency: forecasting with learned perturbation masks and temporal saliency maps"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ssal::version_string());
    Options o;

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Override train.seed for every random stream");
        sub->add_option("--target-col", o.target_col, "Score only this 0-based column (-1 = all)");
    };
    auto fresh = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "Config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "Run directory to create or update")->required();
        sub->add_flag("--timestamp-col", o.timestamp_col, "Ignore the first CSV column");
        add_seed(sub);
        return sub;
    };
    auto existing = [&](const char* name, const char* help) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--run", o.run, "Run directory written by train")->required()->check(CLI::ExistingDirectory);
        add_seed(sub);
        return sub;
    };

    CLI::App* prepare = fresh("prepare", "Load, scale and split the series");
    CLI::App* train = fresh("train", "Train the forecaster and the shared mask (prepares if needed)");
    CLI::App* evaluate = existing("evaluate", "Test-split RSE/CORR; writes metrics.csv");
    CLI::App* interpret = existing("interpret", "Explain test windows with saliency masks");
    interpret->add_option("--samples", o.samples, "Number of test windows to explain");
    interpret->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    CLI::App* permute = existing("permute", "Order features by saliency similarity");
    CLI::App* analyze = existing("analyze", "Per-feature saliency and periodicity");
    analyze->add_option("--jobs", o.jobs, "Worker threads")->check(CLI::PositiveNumber);
    CLI::App* exporter = existing("export", "Write test forecasts in original units and the shared mask heatmap");
    CLI::App* defaults = app.add_subcommand("defaults", "Print every config key with its default");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        configure_logging();
        if (defaults->parsed()) {
            std::cout << ssal::config_reference();
            return 0;
        }
        if (prepare->parsed()) {
            ssal::prepare_stage(config_from_file(o), ssal::RunLayout{o.out});
            return 0;
        }
        if (train->parsed()) {
            const auto r = ssal::train_stage(config_from_file(o), ssal::RunLayout{o.out});
            std::cout << "val_rse=" << r.validation.rse << " val_corr=" << r.validation.corr
                      << " epochs=" << r.train.history.size() << '\n';
            return 0;
        }

        const ssal::RunLayout run{o.run};
        const ssal::RunConfig cfg = config_from_run(run, o);
        if (evaluate->parsed()) {
            const auto r = ssal::evaluate_stage(cfg, run);
            std::cout << "rse=" << ssal::format_double(r.rse) << " corr=" << ssal::format_double(r.corr)
                      << " excluded_features=" << r.excluded_features << '\n';
        } else if (interpret->parsed()) {
            const auto outcomes = ssal::interpret_stage(cfg, run, o.samples.value_or(cfg.interpret_samples), o.jobs);
            std::size_t failed = 0;
            for (const auto& oc : outcomes) failed += oc.map ? 0 : 1;
            std::cout << "explained=" << outcomes.size() - failed << " failed=" << failed << '\n';
            if (failed) return 1;
        } else if (permute->parsed()) {
            const auto r = ssal::permute_stage(cfg, run);
            std::cout << "order=";
            for (std::size_t i = 0; i < r.order.size(); ++i) std::cout << (i ? "," : "") << r.order[i];
            std::cout << " objective=" << ssal::format_double(r.objective) << '\n';
        } else if (analyze->parsed()) {
            const auto fi = ssal::analyze_stage(cfg, run, o.jobs);
            for (ssal::Index j = 0; j < fi.mean_saliency.size(); ++j)
                std::cout << "feature=" << j << " mean_saliency=" << fi.mean_saliency(j)
                          << " periodicity=" << fi.periodicity(j) << '\n';
        } else if (exporter->parsed()) {
            ssal::export_stage(cfg, run);
        }
        return 0;
    } catch (const ssal::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
