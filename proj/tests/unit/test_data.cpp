#include "ssal/data.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace ssal;

TEST_CASE("parse_csv reads a small file without header")
{
    const SeriesFrame f = parse_csv("1,2\n3,4\n5,6\n", {.has_header = false});
    CHECK(f.length() == 3);
    CHECK(f.features() == 2);
    CHECK(f.values(2, 1) == 6.0);
}

TEST_CASE("parse_csv header, timestamp column and CRLF")
{
    const SeriesFrame f = parse_csv("time,a,b\r\nt0,1,2\r\nt1,3,4\r\n", {.has_header = true, .timestamp_col = true});
    CHECK(f.features() == 2);
    CHECK(f.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(f.values(1, 0) == 3.0);
}

TEST_CASE("parse_csv missing cell under reject names row and column")
{
    try {
        parse_csv("1,,3\n", {.has_header = false});
        FAIL("expected an error");
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 1") != std::string::npos);
        CHECK(msg.find("col 2") != std::string::npos);
    }
}

TEST_CASE("parse_csv forward fill and its failure on the first row")
{
    const SeriesFrame f = parse_csv("1,2\n,4\nNA,5\n", {.has_header = false, .missing = MissingPolicy::forward_fill});
    CHECK(f.values(1, 0) == 1.0);
    CHECK(f.values(2, 0) == 1.0);
    CHECK_THROWS_AS(parse_csv(",2\n", {.has_header = false, .missing = MissingPolicy::forward_fill}), ValidationError);
}

TEST_CASE("parse_csv rejects ragged rows, garbage and empty input")
{
    CHECK_THROWS_WITH_AS(parse_csv("1,2\n3\n", {.has_header = false}), doctest::Contains("row 2"), ValidationError);
    CHECK_THROWS_AS(parse_csv("1,x\n", {.has_header = false}), ValidationError);
    CHECK_THROWS_AS(parse_csv("a,b\n", {.has_header = true}), ValidationError);
    CHECK_THROWS_AS(parse_csv("1,inf\n", {.has_header = false}), ValidationError);
}

TEST_CASE("load_csv / write_csv round trip")
{
    const auto path = std::filesystem::temp_directory_path() / "ssal_data_roundtrip.csv";
    SeriesFrame f;
    f.values = Matrix::Random(7, 3);
    f.feature_names = {"x", "y", "z"};
    write_csv(path, f);
    const SeriesFrame g = load_csv(path);
    CHECK(g.feature_names == f.feature_names);
    CHECK((g.values - f.values).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_csv(path), ValidationError);
}

TEST_CASE("fit_scaler uses only the fit range")
{
    SeriesFrame f;
    f.values = Matrix(3, 1);
    f.values << 0, 5, 10;
    const Scaler s = fit_scaler(f, {0, 3});
    CHECK(s.min(0) == 0.0);
    CHECK(s.max(0) == 10.0);

    SeriesFrame ramp;
    ramp.values = Vector::LinSpaced(100, 0, 99);
    const Scaler r = fit_scaler(ramp, {0, 60});
    CHECK(r.min(0) == 0.0);
    CHECK(r.max(0) == 59.0);
    const SeriesFrame scaled = apply_scaler(ramp, r);
    CHECK(scaled.values(99, 0) == doctest::Approx(99.0 / 59.0));

    CHECK_THROWS_AS(fit_scaler(f, {1, 1}), ValidationError);
    CHECK_THROWS_AS(fit_scaler(f, {0, 4}), ValidationError);
}

TEST_CASE("scaler endpoints, degenerate columns and round trip")
{
    SeriesFrame f;
    f.values = Matrix(3, 2);
    f.values << 1, 7, 2, 7, 3, 7;
    const Scaler s = fit_scaler(f, {0, 3});
    const Matrix scaled = apply_scaler(f.values, s);
    CHECK(scaled(0, 0) == 0.0);
    CHECK(scaled(2, 0) == 1.0);
    CHECK(scaled.col(1).isConstant(0.5));
    const Matrix back = invert_scaler(scaled, s);
    CHECK(back.col(1).isConstant(7.0));
    CHECK((back - f.values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(apply_scaler(Matrix::Zero(2, 3), s), ValidationError);
    CHECK_THROWS_AS(invert_scaler(Matrix::Zero(2, 3), s), ValidationError);
}

TEST_CASE("chronological_split examples")
{
    auto a = chronological_split(100, {}, 5, 1);
    CHECK(a[0] == Interval{0, 60});
    CHECK(a[1] == Interval{60, 80});
    CHECK(a[2] == Interval{80, 100});

    auto b = chronological_split(26304, {}, 24, 3);
    CHECK(b[0] == Interval{0, 15782});
    CHECK(b[1] == Interval{15782, 21043});
    CHECK(b[2] == Interval{21043, 26304});

    CHECK_THROWS_WITH_AS(chronological_split(10, {}, 8, 3), doctest::Contains("split too small for windowing"),
                         ValidationError);
    CHECK_THROWS_AS(chronological_split(100, {0.5, 0.2, 0.2}, 1, 1), ValidationError);
    CHECK_THROWS_AS(chronological_split(100, {1.2, -0.1, -0.1}, 1, 1), ValidationError);
}

TEST_CASE("make_windows examples")
{
    Matrix v(10, 1);
    for (Index i = 0; i < 10; ++i) v(i, 0) = static_cast<double>(i);
    const auto w = make_windows(v, {0, 10}, 4, 3);
    REQUIRE(w.size() == 4);
    CHECK(w[0].image.values(0, 0) == 0.0);
    CHECK(w[0].image.values(3, 0) == 3.0);
    CHECK(w[0].target(0) == 6.0);
    CHECK(w[0].image.horizon == 3);
    CHECK(w[3].image.start_index == 3);

    const auto one = make_windows(v.topRows(2), {0, 2}, 1, 1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].image.values(0, 0) == 0.0);
    CHECK(one[0].target(0) == 1.0);

    CHECK(make_windows(v, {0, 5}, 4, 3).empty());
    for (Index h : {3, 6, 9}) CHECK(make_windows(v, {0, 10}, 1, h).size() == static_cast<std::size_t>(10 - h));
    CHECK(make_windows(v, {0, 10}, 1, 12).empty());
    CHECK_THROWS_AS(make_windows(v, {0, 10}, 0, 1), ValidationError);
    CHECK_THROWS_AS(make_windows(v, {0, 11}, 2, 1), ValidationError);
}

TEST_CASE("column_means over a range")
{
    SeriesFrame f;
    f.values = Matrix(4, 2);
    f.values << 1, 10, 3, 20, 100, 0, 100, 0;
    const RowVector m = column_means(f, {0, 2});
    CHECK(m(0) == 2.0);
    CHECK(m(1) == 15.0);
}
