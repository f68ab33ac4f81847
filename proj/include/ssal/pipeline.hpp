#pragma once

#include "ssal/analysis.hpp"
#include "ssal/config.hpp"
#include "ssal/interpretation.hpp"
#include "ssal/permutation.hpp"
#include "ssal/training.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssal {

/// File layout of one run directory.
struct RunLayout {
    std::filesystem::path root;

    std::filesystem::path config() const { return root / "config.ini"; }
    std::filesystem::path manifest() const { return root / "manifest.json"; }
    std::filesystem::path prepared_dir() const { return root / "prepared"; }
    std::filesystem::path scaled_csv() const { return prepared_dir() / "scaled.csv"; }
    std::filesystem::path prepared_json() const { return prepared_dir() / "prepare.json"; }
    std::filesystem::path checkpoint() const { return root / "model.ckpt"; }
    std::filesystem::path shared_mask_csv() const { return root / "shared_mask.csv"; }
    std::filesystem::path loss_history() const { return root / "loss_history.csv"; }
    std::filesystem::path metrics() const { return root / "metrics.csv"; }
    std::filesystem::path saliency_dir() const { return root / "saliency"; }
    std::filesystem::path saliency_csv(Index id) const;
    std::filesystem::path saliency_trace(Index id) const;
    std::filesystem::path saliency_pgm(Index id) const;
    std::filesystem::path permutation() const { return root / "permutation.csv"; }
    std::filesystem::path analysis_dir() const { return root / "analysis"; }
    std::filesystem::path feature_importance() const { return analysis_dir() / "feature_importance.csv"; }
    std::filesystem::path export_dir() const { return root / "export"; }
};

/// Output of `prepare`: the globally scaled series, the scaler fitted on the
/// training interval, and the three split intervals.
struct PreparedData {
    SeriesFrame scaled;
    Scaler scaler;
    std::array<Interval, 3> split;
    Index window = 0;
    Index horizon = 0;

    std::vector<Sample> windows(int part) const;
};

/// Version string baked in at build time.
std::string version_string();

/// Records the stage about to run (config echo, version, seed, timestamps,
/// layout) before any of its artifacts are written.
void write_manifest(const RunLayout& run, const RunConfig& config, const std::string& stage);

/// Reads the run's config echo and applies an optional seed override.
RunConfig load_run_config(const RunLayout& run, std::optional<std::uint64_t> seed_override = {});

PreparedData prepare_stage(const RunConfig& config, const RunLayout& run);
PreparedData load_prepared(const RunLayout& run);

struct TrainStageResult {
    TrainResult train;
    EvalResult validation;
};

/// Prepares first when prepared data is missing.
TrainStageResult train_stage(const RunConfig& config, const RunLayout& run);

/// Rebuilds the trained model from its checkpoint.
Forecaster load_model(const RunLayout& run);

/// Test-split metrics; writes metrics.csv.
EvalResult evaluate_stage(const RunConfig& config, const RunLayout& run);

/// Evenly spaced test windows; ids are positions in the test split.
std::vector<Index> select_samples(Index available, Index count);

/// Explains `count` test windows; writes the saliency triples. Failed samples
/// are reported in the result and skipped on disk.
std::vector<InterpretOutcome> interpret_stage(const RunConfig& config, const RunLayout& run, Index count,
                                              unsigned jobs);

/// Orders features by annealing over the distances between columns of the
/// mean saliency map; writes permutation.csv.
PermutationResult permute_stage(const RunConfig& config, const RunLayout& run);

/// Per-feature mean saliency and data periodicity plus heatmaps.
FeatureImportance analyze_stage(const RunConfig& config, const RunLayout& run, unsigned jobs);

/// Test-split forecasts in original units and the shared training mask.
void export_stage(const RunConfig& config, const RunLayout& run);

/// Saliency ids present in the run directory, ascending.
std::vector<Index> saliency_ids(const RunLayout& run);
Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& values,
                      const std::vector<std::string>& header, int decimals);

} // namespace ssal
