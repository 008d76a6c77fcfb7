#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "hydrodeep/datapipe.hpp"
#include "hydrodeep/errors.hpp"
#include "hydrodeep/rng.hpp"

using namespace hydrodeep;
namespace fs = std::filesystem;

namespace {

SeriesTable tiny_series(std::size_t T, std::size_t L, std::int64_t start = 10957) {
    SeriesTable s;
    for (std::size_t t = 0; t < T; ++t) {
        s.dates.push_back(start + static_cast<std::int64_t>(t));
        std::vector<double> p(L), r(L);
        for (std::size_t i = 0; i < L; ++i) {
            p[i] = static_cast<double>(t * L + i);
            r[i] = 0.1 * static_cast<double>(t + i);
        }
        s.precip.push_back(p);
        s.runoff.push_back(r);
        s.discharge.push_back(static_cast<double>(t) * 2.0);
    }
    return s;
}

GridSpec tiny_grid(std::size_t L) {
    GridSpec g;
    for (std::size_t i = 0; i < L; ++i) {
        g.grid_ids.push_back("g" + std::to_string(i + 1));
        g.x.push_back(static_cast<double>(i));
        g.y.push_back(static_cast<double>(2 * i));
        g.distance_km.push_back(0.5 + static_cast<double>(i));
    }
    return g;
}

fs::path temp_file(const std::string& name) {
    return fs::temp_directory_path() / ("hydrodeep_test_" + name);
}

}  // namespace

TEST_CASE("calendar round trip and parsing") {
    CHECK(days_from_civil(1970, 1, 1) == 0);
    CHECK(days_from_civil(2000, 3, 1) == days_from_civil(2000, 2, 29) + 1);  // leap year
    CHECK(parse_date("2012-01-01") == days_from_civil(2012, 1, 1));
    CHECK(format_date(parse_date("1999-12-31")) == "1999-12-31");
    CHECK_THROWS_AS(parse_date("2012/01/01"), ParseError);
    CHECK_THROWS_AS(parse_date("2012-13-01"), ParseError);
}

TEST_CASE("equal distances give unit weights") {
    const auto w = distance_weights({2.0, 2.0, 2.0}, 1.0, 0.1);
    for (double v : w) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("inverse-distance weights, hand case") {
    const auto w = distance_weights({1.0, 3.0}, 1.0, 0.0);
    CHECK(w[0] == doctest::Approx(1.5));
    CHECK(w[1] == doctest::Approx(0.5));
}

TEST_CASE("weights sum to L and decrease with distance") {
    Rng rng(9);
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t L = 2 + rng.below(30);
        std::vector<double> d(L);
        for (double& v : d) v = rng.uniform(0.0, 20.0);
        const auto w = distance_weights(d, 1.0, 0.1);
        double total = 0.0;
        for (double v : w) total += v;
        CHECK(total == doctest::Approx(static_cast<double>(L)).epsilon(1e-9));
        for (std::size_t i = 0; i < L; ++i) {
            for (std::size_t j = 0; j < L; ++j) {
                if (d[i] < d[j]) CHECK(w[i] > w[j]);
            }
        }
    }
    CHECK_THROWS_AS(distance_weights({}, 1.0, 0.1), ParameterError);
}

TEST_CASE("apply_weights is an elementwise product on precipitation") {
    SeriesTable s = tiny_series(3, 2);
    s.precip = {{2.0, 4.0}, {0.0, 0.0}, {1.0, 1.0}};
    const SeriesTable w1 = apply_weights(s, {1.0, 1.0});
    CHECK(w1.precip == s.precip);
    const SeriesTable w2 = apply_weights(s, {1.5, 0.5});
    CHECK(w2.precip[0] == std::vector<double>{3.0, 2.0});
    CHECK(w2.precip[1] == std::vector<double>{0.0, 0.0});
    CHECK(w2.runoff == s.runoff);  // untouched
}

TEST_CASE("weighting preserves the watershed mean for uniform precipitation") {
    // Uniform precipitation across grids: mean weight 1 keeps the daily mean.
    const std::size_t L = 5;
    SeriesTable s = tiny_series(4, L);
    for (auto& day : s.precip) day.assign(L, 3.7);
    const auto w = distance_weights({0.5, 1.0, 2.0, 4.0, 9.0}, 1.0, 0.1);
    const SeriesTable weighted = apply_weights(s, w);
    for (std::size_t t = 0; t < weighted.days(); ++t) {
        double mean = 0.0;
        for (double v : weighted.precip[t]) mean += v;
        mean /= static_cast<double>(L);
        CHECK(mean == doctest::Approx(3.7).epsilon(1e-9));
    }
}

TEST_CASE("min-max scaling hand case and roundtrip") {
    SeriesTable s = tiny_series(3, 1);
    s.precip = {{0.0}, {5.0}, {10.0}};
    s.runoff = {{1.0}, {1.0}, {1.0}};  // constant: degenerate column
    s.discharge = {10.0, 20.0, 40.0};
    const Scaler sc = Scaler::fit(s, 3);
    const SeriesTable scaled = sc.transform(s);
    CHECK(scaled.precip[0][0] == doctest::Approx(0.0));
    CHECK(scaled.precip[1][0] == doctest::Approx(0.5));
    CHECK(scaled.precip[2][0] == doctest::Approx(1.0));
    CHECK(scaled.runoff[1][0] == 0.0);  // degenerate maps to zero

    const auto degenerate = sc.degenerate_columns();
    REQUIRE(degenerate.size() == 1);
    CHECK(degenerate[0] == 1);

    for (double v : {10.0, 20.0, 33.0, 40.0}) {
        CHECK(sc.inverse_transform_discharge(sc.transform_discharge(v)) ==
              doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("window count and shapes follow the lag rule") {
    const SeriesTable s10 = tiny_series(10, 2);
    const WindowedDataset d = make_windows(s10, 7);
    CHECK(d.size() == 3);  // T=10, lag=7
    CHECK(d.input1.front().shape == std::vector<std::size_t>{7, 5});

    const SeriesTable s29 = tiny_series(40, 29);
    const WindowedDataset d29 = make_windows(s29, 7);
    CHECK(d29.input1.front().shape == std::vector<std::size_t>{7, 59});  // (lag, 2L+1)
    CHECK(d29.input2.front().shape == std::vector<std::size_t>{58});
    CHECK(d29.size() == 33);

    CHECK_THROWS_AS(make_windows(tiny_series(7, 2), 7), WindowError);
    CHECK_THROWS_AS(make_windows(tiny_series(10, 2), 0), ParameterError);
}

TEST_CASE("lag-1 window is exactly the previous day's row") {
    const SeriesTable s = tiny_series(5, 2);
    const WindowedDataset d = make_windows(s, 1);
    REQUIRE(d.size() == 4);
    for (std::size_t n = 0; n < d.size(); ++n) {
        const std::size_t t = 1 + n;
        CHECK(d.input1[n].at(0, 0) == s.precip[t - 1][0]);
        CHECK(d.input1[n].at(0, 1) == s.precip[t - 1][1]);
        CHECK(d.input1[n].at(0, 2) == s.runoff[t - 1][0]);
        CHECK(d.input1[n].at(0, 4) == s.discharge[t - 1]);
        CHECK(d.target[n] == s.discharge[t]);
    }
}

TEST_CASE("window alignment: target day follows the window and matches input2") {
    const SeriesTable s = tiny_series(20, 3);
    const WindowedDataset d = make_windows(s, 4);
    for (std::size_t n = 0; n < d.size(); ++n) {
        const std::size_t t = d.day_index[n];
        CHECK(t == 4 + n);
        CHECK(d.target_date[n] == s.dates[t]);
        // last window row is day t-1
        CHECK(d.input1[n].at(3, 6) == s.discharge[t - 1]);
        // input2 carries day t itself
        CHECK(d.input2[n][0] == s.precip[t][0]);
        CHECK(d.input2[n][3] == s.runoff[t][0]);
    }
}

TEST_CASE("windows without runoff drop those columns end to end") {
    const SeriesTable s = tiny_series(12, 4);
    const WindowedDataset d = make_windows(s, 3, false);
    CHECK(d.width1 == 5);  // L+1
    CHECK(d.width2 == 4);  // L
    CHECK(d.input1.front().shape == std::vector<std::size_t>{3, 5});
    // column 4 must be the discharge, not runoff
    CHECK(d.input1[0].at(2, 4) == s.discharge[2]);
}

TEST_CASE("split fractions follow the floor-then-remainder rule") {
    const SplitSizes s1000 = split_sizes(1000, 0.7, 0.25);
    CHECK(s1000.train == 525);
    CHECK(s1000.val == 175);
    CHECK(s1000.test == 300);

    const SplitSizes s10 = split_sizes(10, 0.7, 0.25);
    CHECK(s10.train == 5);
    CHECK(s10.val == 2);
    CHECK(s10.test == 3);
}

TEST_CASE("split is chronological and concatenation restores the order") {
    const SeriesTable s = tiny_series(30, 2);
    const WindowedDataset full = make_windows(s, 5);
    const SplitDataset parts = split(full);
    CHECK(parts.train.size() + parts.val.size() + parts.test.size() == full.size());

    std::vector<std::int64_t> dates;
    for (auto* p : {&parts.train, &parts.val, &parts.test}) {
        for (std::int64_t d : p->target_date) dates.push_back(d);
    }
    CHECK(dates == full.target_date);
    CHECK(parts.train.target_date.back() < parts.val.target_date.front());
    CHECK(parts.val.target_date.back() < parts.test.target_date.front());
}

TEST_CASE("prepare never leaks test rows into the scaler") {
    GridSpec grid = tiny_grid(2);
    SeriesTable a = tiny_series(40, 2);
    SeriesTable b = a;
    // perturb only the final 10 days (test region for lag 5: N=35, train=18,
    // fit rows = 23)
    for (std::size_t t = 30; t < 40; ++t) {
        b.discharge[t] += 1000.0;
        for (auto& v : b.precip[t]) v *= 7.0;
    }
    PipelineOptions opt;
    opt.lag = 5;
    const PreparedData pa = prepare(grid, a, opt);
    const PreparedData pb = prepare(grid, b, opt);
    REQUIRE(pa.train.size() == pb.train.size());
    for (std::size_t i = 0; i < pa.train.size(); ++i) {
        CHECK(pa.train.input1[i].data == pb.train.input1[i].data);
        CHECK(pa.train.input2[i].data == pb.train.input2[i].data);
        CHECK(pa.train.target[i] == pb.train.target[i]);
    }
}

TEST_CASE("prepare records degenerate-column warnings") {
    GridSpec grid = tiny_grid(2);
    SeriesTable s = tiny_series(40, 2);
    for (auto& day : s.runoff) day[1] = 4.2;  // constant column
    PipelineOptions opt;
    opt.lag = 5;
    const PreparedData p = prepare(grid, s, opt);
    REQUIRE(p.warnings.size() == 1);
    CHECK(p.warnings[0].find("degenerate") != std::string::npos);
}

TEST_CASE("series csv writes and reads back bit-exact") {
    const fs::path dir = temp_file("csv_roundtrip");
    fs::create_directories(dir);
    GridSpec grid = tiny_grid(3);
    SeriesTable s = tiny_series(9, 3);
    s.precip[2][1] = 0.1234567890123456789;  // exercise full precision
    write_grid_csv((dir / "grid.csv").string(), grid);
    write_series_csv((dir / "series.csv").string(), s);

    const GridSpec g2 = load_grid_csv((dir / "grid.csv").string());
    const SeriesTable s2 = load_series_csv((dir / "series.csv").string());
    CHECK(g2.grid_ids == grid.grid_ids);
    CHECK(g2.distance_km == grid.distance_km);
    CHECK(s2.dates == s.dates);
    CHECK(s2.precip == s.precip);
    CHECK(s2.runoff == s.runoff);
    CHECK(s2.discharge == s.discharge);
    fs::remove_all(dir);
}

TEST_CASE("series csv parser reports the offending line") {
    const fs::path path = temp_file("bad_series.csv");

    auto write_and_expect_line = [&](const std::string& content, std::size_t line) {
        std::ofstream out(path);
        out << content;
        out.close();
        try {
            load_series_csv(path.string());
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line_number == line);
        }
    };

    // ragged row
    write_and_expect_line(
        "date,p_1,r_1,discharge\n"
        "2000-01-01,1.0,2.0,3.0\n"
        "2000-01-02,1.0,2.0\n",
        3);
    // non-consecutive dates
    write_and_expect_line(
        "date,p_1,r_1,discharge\n"
        "2000-01-01,1.0,2.0,3.0\n"
        "2000-01-03,1.0,2.0,3.0\n",
        3);
    // NaN cell
    write_and_expect_line(
        "date,p_1,r_1,discharge\n"
        "2000-01-01,nan,2.0,3.0\n",
        2);
    // bad header
    write_and_expect_line("date,q_1,r_1,discharge\n2000-01-01,1,2,3\n", 1);
    fs::remove(path);
}
