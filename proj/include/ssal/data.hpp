#pragma once

#include "ssal/core.hpp"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ssal {

/// A multivariate series: T rows (time, oldest first) by D feature columns.
struct SeriesFrame {
    Matrix values;
    std::vector<std::string> feature_names;
    std::optional<std::string> sample_period;

    Index length() const { return values.rows(); }
    Index features() const { return values.cols(); }
};

/// Half-open row interval [begin, end).
struct Interval {
    Index begin = 0;
    Index end = 0;

    Index size() const { return end - begin; }
    bool empty() const { return end <= begin; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-feature min-max scaling into [0, 1]. Degenerate features map to 0.5.
struct Scaler {
    RowVector min;
    RowVector max;

    Index features() const { return min.size(); }
};

/// One sliding-window slice, rows ordered oldest to newest.
struct SeriesImage {
    Matrix values;
    Index start_index = 0;
    Index horizon = 0;

    Index window() const { return values.rows(); }
};

/// A series image paired with the row `horizon` steps after its last row.
struct Sample {
    SeriesImage image;
    RowVector target;
};

enum class MissingPolicy { reject, forward_fill };

struct CsvOptions {
    bool has_header = true;
    bool timestamp_col = false;
    MissingPolicy missing = MissingPolicy::reject;
};

SeriesFrame load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
SeriesFrame parse_csv(const std::string& text, const CsvOptions& options = {});
void write_csv(const std::filesystem::path& path, const SeriesFrame& frame, int precision = 17);

Scaler fit_scaler(const SeriesFrame& frame, Interval fit_range);
SeriesFrame apply_scaler(const SeriesFrame& frame, const Scaler& scaler);
Matrix apply_scaler(const Matrix& values, const Scaler& scaler);
Matrix invert_scaler(const Matrix& values, const Scaler& scaler);

struct SplitFractions {
    double train = 0.6;
    double val = 0.2;
    double test = 0.2;
};

/// Contiguous train/val/test intervals covering [0, length). The last interval
/// absorbs the rounding remainder. Every interval must hold at least one window.
std::array<Interval, 3> chronological_split(Index length, SplitFractions fractions, Index window,
                                            Index horizon);

/// Stride-1 windows inside `interval`; targets never leave the interval.
std::vector<Sample> make_windows(const SeriesFrame& frame, Interval interval, Index window,
                                 Index horizon);
std::vector<Sample> make_windows(const Matrix& values, Interval interval, Index window,
                                 Index horizon);

/// Column means over `range`, used as the constant reference.
RowVector column_means(const SeriesFrame& frame, Interval range);

} // namespace ssal
