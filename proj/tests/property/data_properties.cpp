// Randomized invariants of windowing, scaling, splitting and references.
#include "ssal/data.hpp"
#include "ssal/reference.hpp"

#include <doctest.h>

#include <random>

using namespace ssal;

namespace {

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 2.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

} // namespace

TEST_CASE("windows reconstruct every row of their interval")
{
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Index len = std::uniform_int_distribution<Index>(5, 60)(rng);
        const Index d = std::uniform_int_distribution<Index>(1, 4)(rng);
        const Index w = std::uniform_int_distribution<Index>(1, len - 1)(rng);
        // At least h windows, otherwise rows between the last input and the first target are never seen.
        if (len - w + 1 < 2) continue;
        const Index h = std::uniform_int_distribution<Index>(1, (len - w + 1) / 2)(rng);
        const Matrix x = random_matrix(len, d, rng);
        const auto windows = make_windows(x, {0, len}, w, h);
        REQUIRE(static_cast<Index>(windows.size()) == len - w - h + 1);
        Matrix rebuilt = Matrix::Constant(len, d, std::nan(""));
        for (std::size_t k = 0; k < windows.size(); ++k) {
            const auto& s = windows[k];
            CHECK(s.image.start_index == static_cast<Index>(k));
            rebuilt.middleRows(s.image.start_index, w) = s.image.values;
            rebuilt.row(s.image.start_index + w - 1 + h) = s.target;
        }
        CHECK(rebuilt == x);
    }
}

TEST_CASE("scaling commutes with windowing")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix x = random_matrix(40, 3, rng);
        SeriesFrame f;
        f.values = x;
        const Scaler s = fit_scaler(f, {0, 25});
        const auto scaled_then_windowed = make_windows(apply_scaler(x, s), {0, 40}, 6, 2);
        const auto windowed = make_windows(x, {0, 40}, 6, 2);
        for (std::size_t k = 0; k < windowed.size(); ++k) {
            CHECK(apply_scaler(windowed[k].image.values, s) == scaled_then_windowed[k].image.values);
            CHECK(apply_scaler(Matrix(windowed[k].target), s) == Matrix(scaled_then_windowed[k].target));
        }
    }
}

TEST_CASE("scaler round trip and training range")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix x = random_matrix(30, 4, rng);
        SeriesFrame f;
        f.values = x;
        const Scaler s = fit_scaler(f, {0, 20});
        const Matrix y = apply_scaler(x, s);
        CHECK((invert_scaler(y, s) - x).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(y.topRows(20).minCoeff() >= -1e-15);
        CHECK(y.topRows(20).maxCoeff() <= 1.0 + 1e-15);
    }
}

TEST_CASE("splits never leak")
{
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> frac(0.1, 0.8);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Index len = std::uniform_int_distribution<Index>(30, 400)(rng);
        const Index w = std::uniform_int_distribution<Index>(1, 8)(rng);
        const Index h = std::uniform_int_distribution<Index>(1, 4)(rng);
        const double a = frac(rng), b = frac(rng) * (1.0 - a);
        const SplitFractions fr{a, b, 1.0 - a - b};
        std::array<Interval, 3> parts;
        try {
            parts = chronological_split(len, fr, w, h);
        } catch (const ValidationError&) {
            continue;
        }
        ++checked;
        CHECK(parts[0].begin == 0);
        CHECK(parts[0].end == parts[1].begin);
        CHECK(parts[1].end == parts[2].begin);
        CHECK(parts[2].end == len);
        const Matrix x = random_matrix(len, 1, rng);
        const auto train = make_windows(x, parts[0], w, h);
        const auto test = make_windows(x, parts[2], w, h);
        Index max_train_target = -1, min_test_input = len;
        for (const auto& s : train) max_train_target = std::max(max_train_target, s.image.start_index + w - 1 + h);
        for (const auto& s : test) min_test_input = std::min(min_test_input, s.image.start_index);
        CHECK(max_train_target < min_test_input);
    }
    CHECK(checked > 100);
}

TEST_CASE("references are deterministic and blur stays inside the column range")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const Matrix x = random_matrix(20, 3, rng);
        for (auto mode : {ReferenceMode::noise, ReferenceMode::blur}) {
            ReferenceSpec spec;
            spec.mode = mode;
            spec.sigma2 = 0.3 + 0.2 * trial;
            spec.seed = static_cast<std::uint64_t>(trial);
            const Matrix r = make_reference(x, spec, 7);
            CHECK(r == make_reference(x, spec, 7));
            if (mode == ReferenceMode::blur) {
                for (Index j = 0; j < 3; ++j) {
                    CHECK(r.col(j).minCoeff() >= x.col(j).minCoeff() - 1e-12);
                    CHECK(r.col(j).maxCoeff() <= x.col(j).maxCoeff() + 1e-12);
                }
            } else {
                CHECK(r != make_reference(x, spec, 8));
            }
        }
    }
}
