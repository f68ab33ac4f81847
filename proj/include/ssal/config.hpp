#pragma once

#include "ssal/data.hpp"
#include "ssal/forecasters.hpp"
#include "ssal/interpretation.hpp"
#include "ssal/training.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace ssal {

struct DataSection {
    std::string path;
    bool has_header = true;
    bool timestamp_col = false;
    MissingPolicy missing = MissingPolicy::reject;
    Index window = 16;
    Index horizon = 3;
    SplitFractions split;
    Index target_col = -1;
};

struct PermuteSection {
    /// "mean" averages every saliency map of the run; a number picks that sample's map.
    std::string aggregate = "mean";
    Index restarts = 4;
    bool cycle = false;
    double alpha = 0.95;
    /// 0 keeps default_schedule()'s 20 * D.
    Index iters_per_temp = 0;
};

/// Everything a run needs, loaded from an INI-style file with sections
/// [data] [model] [train] [reference] [mask] [interpret] [permute].
/// The seed lives in train.seed and drives every random stream in the run.
struct RunConfig {
    DataSection data;
    ModelConfig model;
    TrainConfig train;
    InterpretConfig interpret;
    Index interpret_samples = 5;
    PermuteSection permute;

    RunConfig() { model.window = data.window; }

    /// Applies `seed` to training, model init, references and interpretation.
    void set_seed(std::uint64_t seed);
    std::uint64_t seed() const { return train.seed; }
    /// Keeps the data, training and interpretation target column in step.
    void set_target_col(Index col);
    void validate() const;
};

/// Parses config text. Unknown sections or keys raise a ValidationError that
/// lists every offender.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Canonical text with every key spelled out; parse_config(to_text(c)) == c.
std::string to_text(const RunConfig& config);

/// Reference documentation: every key with its default, one per line.
std::string config_reference();

} // namespace ssal
