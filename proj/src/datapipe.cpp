#include "hydrodeep/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

// ---- calendar ----------------------------------------------------------

std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

std::int64_t parse_date(const std::string& iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(iso.c_str(), "%d-%u-%u%c", &y, &m, &d, &extra) != 3 || m < 1 || m > 12 || d < 1 ||
        d > 31) {
        throw ParseError("bad ISO date: '" + iso + "'");
    }
    return days_from_civil(y, m, d);
}

std::string format_date(std::int64_t days) {
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
    return buf;
}

// ---- validation --------------------------------------------------------

void GridSpec::validate() const {
    const std::size_t L = grid_count();
    if (L == 0) throw ParameterError("grid: at least one grid cell required");
    if (x.size() != L || y.size() != L || distance_km.size() != L) {
        throw DimensionError("grid: column lengths disagree");
    }
    for (double d : distance_km) {
        if (!std::isfinite(d) || d < 0.0) throw ParameterError("grid: distances must be finite and >= 0");
    }
}

void SeriesTable::validate() const {
    const std::size_t T = days();
    if (precip.size() != T || runoff.size() != T || discharge.size() != T) {
        throw DimensionError("series: column lengths disagree");
    }
    const std::size_t L = grids();
    for (std::size_t t = 0; t < T; ++t) {
        if (precip[t].size() != L || runoff[t].size() != L) {
            throw DimensionError("series: ragged grid row at day " + std::to_string(t));
        }
        if (t > 0 && dates[t] != dates[t - 1] + 1) {
            throw ParseError("series: dates not consecutive at " + format_date(dates[t]));
        }
    }
}

// ---- weighting ---------------------------------------------------------

std::vector<double> distance_weights(const std::vector<double>& distance_km, double exponent,
                                     double floor_km) {
    if (distance_km.empty()) throw ParameterError("distance_weights: empty distance vector");
    if (!(exponent > 0.0)) throw ParameterError("distance_weights: exponent must be > 0");
    if (!(floor_km >= 0.0)) throw ParameterError("distance_weights: floor must be >= 0");
    const std::size_t L = distance_km.size();
    std::vector<double> w(L);
    double total = 0.0;
    for (std::size_t i = 0; i < L; ++i) {
        const double d = distance_km[i];
        if (!std::isfinite(d) || d < 0.0) {
            throw ParameterError("distance_weights: distances must be finite and >= 0");
        }
        if (!(d + floor_km > 0.0)) {
            throw ParameterError("distance_weights: d + floor must be > 0 for every grid");
        }
        w[i] = 1.0 / std::pow(d + floor_km, exponent);
        total += w[i];
    }
    const double scale = static_cast<double>(L) / total;
    for (double& v : w) v *= scale;  // mean weight exactly 1
    return w;
}

SeriesTable apply_weights(const SeriesTable& series, const std::vector<double>& weights) {
    if (weights.size() != series.grids()) {
        throw DimensionError("apply_weights: weight count does not match grid count");
    }
    SeriesTable out = series;
    for (auto& day : out.precip) {
        for (std::size_t i = 0; i < weights.size(); ++i) day[i] *= weights[i];
    }
    return out;
}

// ---- scaler ------------------------------------------------------------

namespace {

std::vector<double> series_row(const SeriesTable& s, std::size_t t) {
    const std::size_t L = s.grids();
    std::vector<double> row(2 * L + 1);
    for (std::size_t i = 0; i < L; ++i) row[i] = s.precip[t][i];
    for (std::size_t i = 0; i < L; ++i) row[L + i] = s.runoff[t][i];
    row[2 * L] = s.discharge[t];
    return row;
}

}  // namespace

Scaler::Scaler(std::vector<double> mins, std::vector<double> maxs)
    : min_(std::move(mins)), max_(std::move(maxs)) {
    if (min_.size() != max_.size() || min_.empty()) throw DimensionError("scaler: bad min/max vectors");
    for (std::size_t c = 0; c < min_.size(); ++c) {
        if (max_[c] < min_[c]) throw ParameterError("scaler: max < min for column " + std::to_string(c));
    }
}

Scaler Scaler::fit(const SeriesTable& series, std::size_t row_end) {
    if (row_end == 0 || row_end > series.days()) {
        throw ParameterError("scaler fit: bad row range");
    }
    const std::size_t cols = 2 * series.grids() + 1;
    Scaler s;
    s.min_.assign(cols, 0.0);
    s.max_.assign(cols, 0.0);
    for (std::size_t t = 0; t < row_end; ++t) {
        const auto row = series_row(series, t);
        for (std::size_t c = 0; c < cols; ++c) {
            if (!std::isfinite(row[c])) throw ParameterError("scaler fit: non-finite value");
            if (t == 0 || row[c] < s.min_[c]) s.min_[c] = row[c];
            if (t == 0 || row[c] > s.max_[c]) s.max_[c] = row[c];
        }
    }
    return s;
}

double Scaler::forward(std::size_t col, double v) const {
    const double lo = min_[col];
    const double hi = max_[col];
    if (hi == lo) return 0.0;  // degenerate column
    return (v - lo) / (hi - lo);
}

SeriesTable Scaler::transform(const SeriesTable& series) const {
    const std::size_t L = series.grids();
    if (columns() != 2 * L + 1) throw DimensionError("scaler: column count does not match table");
    SeriesTable out = series;
    for (std::size_t t = 0; t < series.days(); ++t) {
        for (std::size_t i = 0; i < L; ++i) {
            out.precip[t][i] = forward(i, series.precip[t][i]);
            out.runoff[t][i] = forward(L + i, series.runoff[t][i]);
        }
        out.discharge[t] = forward(2 * L, series.discharge[t]);
    }
    return out;
}

double Scaler::transform_discharge(double physical) const {
    return forward(discharge_column(), physical);
}

double Scaler::inverse_transform_discharge(double scaled) const {
    const std::size_t c = discharge_column();
    if (max_[c] == min_[c]) return min_[c];
    return min_[c] + scaled * (max_[c] - min_[c]);
}

std::vector<double> Scaler::inverse_transform_discharge(const std::vector<double>& scaled) const {
    std::vector<double> out(scaled.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) out[i] = inverse_transform_discharge(scaled[i]);
    return out;
}

std::vector<std::size_t> Scaler::degenerate_columns() const {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < min_.size(); ++c) {
        if (max_[c] == min_[c]) cols.push_back(c);
    }
    return cols;
}

// ---- windowing ---------------------------------------------------------

WindowedDataset make_windows(const SeriesTable& series, int lag, bool use_runoff) {
    if (lag < 1) throw ParameterError("make_windows: lag must be >= 1");
    const std::size_t T = series.days();
    const std::size_t la = static_cast<std::size_t>(lag);
    if (T <= la) {
        throw WindowError("make_windows: need more than lag=" + std::to_string(lag) + " days, have " +
                          std::to_string(T));
    }
    const std::size_t L = series.grids();
    WindowedDataset ds;
    ds.lag = la;
    ds.width1 = use_runoff ? 2 * L + 1 : L + 1;
    ds.width2 = use_runoff ? 2 * L : L;
    const std::size_t N = T - la;
    ds.input1.reserve(N);
    ds.input2.reserve(N);
    for (std::size_t n = 0; n < N; ++n) {
        const std::size_t t = la + n;  // target day
        Tensor in1({la, ds.width1});
        for (std::size_t j = 0; j < la; ++j) {
            const std::size_t day = t - la + j;
            std::size_t col = 0;
            for (std::size_t i = 0; i < L; ++i) in1.at(j, col++) = series.precip[day][i];
            if (use_runoff) {
                for (std::size_t i = 0; i < L; ++i) in1.at(j, col++) = series.runoff[day][i];
            }
            in1.at(j, col) = series.discharge[day];  // past label column
        }
        Tensor in2({ds.width2});
        std::size_t col = 0;
        for (std::size_t i = 0; i < L; ++i) in2[col++] = series.precip[t][i];
        if (use_runoff) {
            for (std::size_t i = 0; i < L; ++i) in2[col++] = series.runoff[t][i];
        }
        ds.input1.push_back(std::move(in1));
        ds.input2.push_back(std::move(in2));
        ds.target.push_back(series.discharge[t]);
        ds.target_physical.push_back(series.discharge[t]);
        ds.target_date.push_back(series.dates[t]);
        ds.day_index.push_back(t);
    }
    return ds;
}

WindowedDataset WindowedDataset::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > size()) throw ParameterError("dataset slice out of range");
    WindowedDataset out;
    out.lag = lag;
    out.width1 = width1;
    out.width2 = width2;
    out.input1.assign(input1.begin() + begin, input1.begin() + end);
    out.input2.assign(input2.begin() + begin, input2.begin() + end);
    out.target.assign(target.begin() + begin, target.begin() + end);
    out.target_physical.assign(target_physical.begin() + begin, target_physical.begin() + end);
    out.target_date.assign(target_date.begin() + begin, target_date.begin() + end);
    out.day_index.assign(day_index.begin() + begin, day_index.begin() + end);
    return out;
}

SplitSizes split_sizes(std::size_t n, double train_frac, double val_frac_of_train) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ParameterError("split: train_frac out of range");
    if (!(val_frac_of_train >= 0.0 && val_frac_of_train < 1.0)) {
        throw ParameterError("split: val_frac_of_train out of range");
    }
    SplitSizes s;
    s.train = static_cast<std::size_t>(static_cast<double>(n) * train_frac * (1.0 - val_frac_of_train));
    s.test = static_cast<std::size_t>(static_cast<double>(n) * (1.0 - train_frac));
    if (s.train + s.test > n) throw ParameterError("split: dataset too small");
    s.val = n - s.train - s.test;
    return s;
}

SplitDataset split(const WindowedDataset& full, double train_frac, double val_frac_of_train) {
    const SplitSizes s = split_sizes(full.size(), train_frac, val_frac_of_train);
    SplitDataset out;
    out.train = full.slice(0, s.train);
    out.val = full.slice(s.train, s.train + s.val);
    out.test = full.slice(s.train + s.val, full.size());
    return out;
}

// ---- csv ---------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double_cell(const std::string& cell, std::size_t line_no) {
    if (cell.empty()) throw ParseError("empty cell", line_no);
    const char* begin = cell.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + cell.size()) throw ParseError("bad number '" + cell + "'", line_no);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + cell + "'", line_no);
    return v;
}

void format_double(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << buf;
}

}  // namespace

GridSpec load_grid_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open grid csv: " + path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty grid csv", 1);
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() != 4 || header[0] != "grid_id" || header[1] != "x" || header[2] != "y" ||
        header[3] != "dist_km") {
        throw ParseError("grid csv header must be grid_id,x,y,dist_km", line_no);
    }
    GridSpec g;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 4) throw ParseError("expected 4 cells", line_no);
        g.grid_ids.push_back(cells[0]);
        g.x.push_back(parse_double_cell(cells[1], line_no));
        g.y.push_back(parse_double_cell(cells[2], line_no));
        g.distance_km.push_back(parse_double_cell(cells[3], line_no));
    }
    g.validate();
    return g;
}

SeriesTable load_series_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open series csv: " + path);
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty series csv", 1);
    ++line_no;
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "date" || header.back() != "discharge") {
        throw ParseError("series csv header must be date,p_1..p_L,r_1..r_L,discharge", line_no);
    }
    std::size_t L = 0;
    while (1 + L < header.size() && header[1 + L] == "p_" + std::to_string(L + 1)) ++L;
    if (L == 0 || header.size() != 2 * L + 2) {
        throw ParseError("series csv header must be date,p_1..p_L,r_1..r_L,discharge", line_no);
    }
    for (std::size_t i = 0; i < L; ++i) {
        if (header[1 + L + i] != "r_" + std::to_string(i + 1)) {
            throw ParseError("series csv header runoff columns must be r_1..r_L", line_no);
        }
    }

    SeriesTable s;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != 2 * L + 2) {
            throw ParseError("expected " + std::to_string(2 * L + 2) + " cells, got " +
                                 std::to_string(cells.size()),
                             line_no);
        }
        const std::int64_t date = parse_date(cells[0]);
        if (!s.dates.empty() && date != s.dates.back() + 1) {
            throw ParseError("dates must be strictly consecutive days", line_no);
        }
        s.dates.push_back(date);
        std::vector<double> p(L), r(L);
        for (std::size_t i = 0; i < L; ++i) p[i] = parse_double_cell(cells[1 + i], line_no);
        for (std::size_t i = 0; i < L; ++i) r[i] = parse_double_cell(cells[1 + L + i], line_no);
        s.precip.push_back(std::move(p));
        s.runoff.push_back(std::move(r));
        s.discharge.push_back(parse_double_cell(cells[1 + 2 * L], line_no));
    }
    if (s.days() == 0) throw ParseError("series csv has no data rows", line_no);
    s.validate();
    return s;
}

void write_grid_csv(const std::string& path, const GridSpec& grid) {
    grid.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write grid csv: " + path);
    out << "grid_id,x,y,dist_km\n";
    for (std::size_t i = 0; i < grid.grid_count(); ++i) {
        out << grid.grid_ids[i] << ",";
        format_double(out, grid.x[i]);
        out << ",";
        format_double(out, grid.y[i]);
        out << ",";
        format_double(out, grid.distance_km[i]);
        out << "\n";
    }
}

void write_series_csv(const std::string& path, const SeriesTable& series) {
    series.validate();
    std::ofstream out(path);
    if (!out) throw IoError("cannot write series csv: " + path);
    const std::size_t L = series.grids();
    out << "date";
    for (std::size_t i = 1; i <= L; ++i) out << ",p_" << i;
    for (std::size_t i = 1; i <= L; ++i) out << ",r_" << i;
    out << ",discharge\n";
    for (std::size_t t = 0; t < series.days(); ++t) {
        out << format_date(series.dates[t]);
        for (std::size_t i = 0; i < L; ++i) {
            out << ",";
            format_double(out, series.precip[t][i]);
        }
        for (std::size_t i = 0; i < L; ++i) {
            out << ",";
            format_double(out, series.runoff[t][i]);
        }
        out << ",";
        format_double(out, series.discharge[t]);
        out << "\n";
    }
}

// ---- end-to-end --------------------------------------------------------

namespace {

void fill_physical_targets(WindowedDataset& ds, const SeriesTable& raw) {
    for (std::size_t i = 0; i < ds.size(); ++i) {
        ds.target_physical[i] = raw.discharge[ds.day_index[i]];
    }
}

}  // namespace

PreparedData prepare(const GridSpec& grid, const SeriesTable& raw, const PipelineOptions& opt) {
    grid.validate();
    raw.validate();
    if (grid.grid_count() != raw.grids()) {
        throw DimensionError("prepare: grid count differs between grid csv and series csv");
    }

    PreparedData out;
    out.weights = distance_weights(grid.distance_km, opt.weight_exponent, opt.weight_floor_km);
    const SeriesTable weighted = apply_weights(raw, out.weights);

    const std::size_t la = static_cast<std::size_t>(opt.lag);
    if (raw.days() <= la) {
        throw WindowError("prepare: series shorter than lag+1 days");
    }
    const std::size_t N = raw.days() - la;
    const SplitSizes sizes = split_sizes(N, opt.train_frac, opt.val_frac_of_train);
    if (sizes.train == 0) throw WindowError("prepare: empty training block");

    // Statistics from the rows train samples can see: inputs for the last
    // train sample end at day lag+train-1, which is also its target day.
    const std::size_t fit_rows = la + sizes.train;
    out.scaler = Scaler::fit(weighted, fit_rows);
    for (std::size_t c : out.scaler.degenerate_columns()) {
        out.warnings.push_back("degenerate column " + std::to_string(c) +
                               " (constant over the training block); scaled to 0");
    }

    WindowedDataset full = make_windows(out.scaler.transform(weighted), opt.lag, opt.use_runoff);
    fill_physical_targets(full, raw);
    SplitDataset parts = split(full, opt.train_frac, opt.val_frac_of_train);
    out.train = std::move(parts.train);
    out.val = std::move(parts.val);
    out.test = std::move(parts.test);
    return out;
}

WindowedDataset window_with_scaler(const SeriesTable& raw, const GridSpec& grid, const Scaler& scaler,
                                   const PipelineOptions& opt) {
    grid.validate();
    raw.validate();
    const auto weights = distance_weights(grid.distance_km, opt.weight_exponent, opt.weight_floor_km);
    const SeriesTable weighted = apply_weights(raw, weights);
    WindowedDataset ds = make_windows(scaler.transform(weighted), opt.lag, opt.use_runoff);
    fill_physical_targets(ds, raw);
    return ds;
}

}  // namespace hydrodeep
