#include "ssal/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace ssal {
namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(pos)));
            break;
        }
        out.push_back(trim(line.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    return out;
}

// Empty, unparsable-as-missing or non-finite cells yield nullopt.
std::optional<double> parse_cell(std::string_view cell, Index row, Index col)
{
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    const char* first = cell.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, cell.data() + cell.size(), v);
    if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        if (cell == "NA" || cell == "NaN" || cell == "nan") return std::nullopt;
        throw ValidationError("csv: row " + std::to_string(row) + ", col " + std::to_string(col) +
                              ": cannot parse '" + std::string(cell) + "'");
    }
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

} // namespace

SeriesFrame parse_csv(const std::string& text, const CsvOptions& options)
{
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    std::size_t expected = 0;
    Index data_row = 0;
    bool first_line = true;
    const std::size_t skip = options.timestamp_col ? 1 : 0;

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_fields(line);
        if (first_line) {
            expected = fields.size();
            if (expected <= skip) throw ValidationError("csv: no feature columns");
            first_line = false;
            if (options.has_header) {
                for (std::size_t c = skip; c < fields.size(); ++c) header.emplace_back(fields[c]);
                continue;
            }
        }
        ++data_row;
        if (fields.size() != expected) {
            throw ValidationError("csv: ragged row " + std::to_string(data_row) + ": expected " +
                                  std::to_string(expected) + " columns, found " +
                                  std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(expected - skip);
        for (std::size_t c = skip; c < fields.size(); ++c) {
            const auto col = static_cast<Index>(c + 1);
            auto cell = parse_cell(fields[c], data_row, col);
            if (!cell) {
                if (options.missing == MissingPolicy::reject) {
                    throw ValidationError("csv: missing value at row " + std::to_string(data_row) +
                                          ", col " + std::to_string(col));
                }
                if (rows.empty()) {
                    throw ValidationError("csv: cannot forward-fill missing value at row " +
                                          std::to_string(data_row) + ", col " +
                                          std::to_string(col) + " (no previous row)");
                }
                cell = rows.back()[c - skip];
            }
            row.push_back(*cell);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ValidationError("csv: no data rows");

    SeriesFrame frame;
    const auto t = static_cast<Index>(rows.size());
    const auto d = static_cast<Index>(expected - skip);
    frame.values.resize(t, d);
    for (Index i = 0; i < t; ++i)
        for (Index j = 0; j < d; ++j) frame.values(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    if (header.empty()) {
        for (Index j = 0; j < d; ++j) frame.feature_names.push_back("f" + std::to_string(j));
    } else {
        frame.feature_names = std::move(header);
    }
    return frame;
}

SeriesFrame load_csv(const std::filesystem::path& path, const CsvOptions& options)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("csv: cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), options);
}

void write_csv(const std::filesystem::path& path, const SeriesFrame& frame, int precision)
{
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write " + path.string());
    for (std::size_t j = 0; j < frame.feature_names.size(); ++j)
        out << (j ? "," : "") << frame.feature_names[j];
    out << '\n' << std::setprecision(precision);
    for (Index i = 0; i < frame.values.rows(); ++i) {
        for (Index j = 0; j < frame.values.cols(); ++j) out << (j ? "," : "") << frame.values(i, j);
        out << '\n';
    }
}

Scaler fit_scaler(const SeriesFrame& frame, Interval fit_range)
{
    if (fit_range.empty()) throw ValidationError("fit_scaler: empty fit range");
    if (fit_range.begin < 0 || fit_range.end > frame.length())
        throw ValidationError("fit_scaler: range outside frame");
    const auto rows = frame.values.middleRows(fit_range.begin, fit_range.size());
    return Scaler{rows.colwise().minCoeff(), rows.colwise().maxCoeff()};
}

Matrix apply_scaler(const Matrix& values, const Scaler& scaler)
{
    if (values.cols() != scaler.features())
        throw ValidationError("apply_scaler: " + std::to_string(values.cols()) +
                              " columns but scaler has " + std::to_string(scaler.features()));
    Matrix out(values.rows(), values.cols());
    for (Index j = 0; j < values.cols(); ++j) {
        const double span = scaler.max(j) - scaler.min(j);
        if (span > 0.0)
            out.col(j) = (values.col(j).array() - scaler.min(j)) / span;
        else
            out.col(j).setConstant(0.5);
    }
    return out;
}

SeriesFrame apply_scaler(const SeriesFrame& frame, const Scaler& scaler)
{
    SeriesFrame out = frame;
    out.values = apply_scaler(frame.values, scaler);
    return out;
}

Matrix invert_scaler(const Matrix& values, const Scaler& scaler)
{
    if (values.cols() != scaler.features())
        throw ValidationError("invert_scaler: " + std::to_string(values.cols()) +
                              " columns but scaler has " + std::to_string(scaler.features()));
    Matrix out(values.rows(), values.cols());
    for (Index j = 0; j < values.cols(); ++j) {
        const double span = scaler.max(j) - scaler.min(j);
        if (span > 0.0)
            out.col(j) = values.col(j).array() * span + scaler.min(j);
        else
            out.col(j).setConstant(scaler.min(j));
    }
    return out;
}

std::array<Interval, 3> chronological_split(Index length, SplitFractions f, Index window,
                                            Index horizon)
{
    if (f.train <= 0 || f.val <= 0 || f.test <= 0)
        throw ValidationError("split fractions must be positive");
    if (std::abs(f.train + f.val + f.test - 1.0) > 1e-9)
        throw ValidationError("split fractions must sum to 1");
    const auto cut = [&](double cumulative) {
        return static_cast<Index>(std::floor(cumulative * static_cast<double>(length) + 1e-9));
    };
    const Index a = cut(f.train);
    const Index b = cut(f.train + f.val);
    std::array<Interval, 3> out{Interval{0, a}, Interval{a, b}, Interval{b, length}};
    for (const auto& iv : out) {
        if (iv.size() < window + horizon)
            throw ValidationError("split too small for windowing: interval of " +
                                  std::to_string(iv.size()) + " rows < window " +
                                  std::to_string(window) + " + horizon " + std::to_string(horizon));
    }
    return out;
}

std::vector<Sample> make_windows(const Matrix& values, Interval interval, Index window,
                                 Index horizon)
{
    if (window < 1 || horizon < 1) throw ValidationError("make_windows: window and horizon must be >= 1");
    if (interval.begin < 0 || interval.end > values.rows())
        throw ValidationError("make_windows: interval outside frame");
    std::vector<Sample> out;
    const Index count = interval.size() - window - horizon + 1;
    if (count <= 0) return out;
    out.reserve(static_cast<std::size_t>(count));
    for (Index k = 0; k < count; ++k) {
        const Index start = interval.begin + k;
        Sample s;
        s.image.values = values.middleRows(start, window);
        s.image.start_index = start;
        s.image.horizon = horizon;
        s.target = values.row(start + window - 1 + horizon);
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<Sample> make_windows(const SeriesFrame& frame, Interval interval, Index window,
                                 Index horizon)
{
    return make_windows(frame.values, interval, window, horizon);
}

RowVector column_means(const SeriesFrame& frame, Interval range)
{
    if (range.empty() || range.begin < 0 || range.end > frame.length())
        throw ValidationError("column_means: invalid range");
    return frame.values.middleRows(range.begin, range.size()).colwise().mean();
}

} // namespace ssal
