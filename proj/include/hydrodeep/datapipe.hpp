#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydrodeep/tensor.hpp"

namespace hydrodeep {

// ---- calendar ----------------------------------------------------------

/// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, unsigned m, unsigned d);
void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d);

/// "YYYY-MM-DD" <-> epoch days.
std::int64_t parse_date(const std::string& iso);
std::string format_date(std::int64_t days);

// ---- watershed layout and aligned series -------------------------------

/// Watershed grid layout: one entry per grid cell.
struct GridSpec {
    std::vector<std::string> grid_ids;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> distance_km;  // distance to the nearest river

    std::size_t grid_count() const { return grid_ids.size(); }
    void validate() const;
};

/// Aligned daily series: per-grid precipitation and runoff plus the scalar
/// discharge label. All series share length T; dates are consecutive days.
struct SeriesTable {
    std::vector<std::int64_t> dates;            // epoch days
    std::vector<std::vector<double>> precip;    // [T][L] mm/day
    std::vector<std::vector<double>> runoff;    // [T][L] mm/day
    std::vector<double> discharge;              // [T] m^3/s

    std::size_t days() const { return dates.size(); }
    std::size_t grids() const { return precip.empty() ? 0 : precip.front().size(); }
    void validate() const;
};

// ---- weighting ---------------------------------------------------------

/// Inverse-distance weights: raw_i = 1/(d_i+floor)^exponent, rescaled so the
/// mean weight is exactly 1 (sum == L). Strictly decreasing in distance.
std::vector<double> distance_weights(const std::vector<double>& distance_km, double exponent,
                                     double floor_km);

/// Elementwise per-grid product applied to every day's precipitation row.
SeriesTable apply_weights(const SeriesTable& series, const std::vector<double>& weights);

// ---- normalization -----------------------------------------------------

/// Per-column min-max scaler over the row layout
/// [precip_0..precip_{L-1}, runoff_0..runoff_{L-1}, discharge].
/// Columns with max == min map to 0 and are recorded as degenerate.
class Scaler {
  public:
    Scaler() = default;
    Scaler(std::vector<double> mins, std::vector<double> maxs);

    /// Fits statistics on rows [0, row_end) of the table.
    static Scaler fit(const SeriesTable& series, std::size_t row_end);

    SeriesTable transform(const SeriesTable& series) const;
    double transform_discharge(double physical) const;
    double inverse_transform_discharge(double scaled) const;
    std::vector<double> inverse_transform_discharge(const std::vector<double>& scaled) const;

    std::size_t columns() const { return min_.size(); }
    std::size_t discharge_column() const { return min_.size() - 1; }
    std::vector<std::size_t> degenerate_columns() const;
    const std::vector<double>& mins() const { return min_; }
    const std::vector<double>& maxs() const { return max_; }

  private:
    double forward(std::size_t col, double v) const;
    std::vector<double> min_;
    std::vector<double> max_;
};

// ---- windowing ---------------------------------------------------------

/// Supervised samples. For sample n with target day t = lag + n:
/// input1 [lag x width1] holds days t-lag..t-1, one row each, columns
/// [weighted precip, (runoff), past discharge]; input2 [width2] holds day t's
/// [weighted precip, (runoff)]; target is day t's discharge. Runoff columns
/// are present only when built with use_runoff.
struct WindowedDataset {
    std::size_t lag = 0;
    std::size_t width1 = 0;  // 2L+1, or L+1 without runoff
    std::size_t width2 = 0;  // 2L, or L without runoff
    std::vector<Tensor> input1;
    std::vector<Tensor> input2;
    std::vector<double> target;           // in the scaled units of the table
    std::vector<double> target_physical;  // m^3/s observation
    std::vector<std::int64_t> target_date;
    std::vector<std::size_t> day_index;  // row of the target day in the source table

    std::size_t size() const { return input1.size(); }
    WindowedDataset slice(std::size_t begin, std::size_t end) const;
};

/// Sliding windows with a step of one day; N = T - lag samples.
WindowedDataset make_windows(const SeriesTable& series, int lag, bool use_runoff = true);

struct SplitSizes {
    std::size_t train = 0;
    std::size_t val = 0;
    std::size_t test = 0;
};

/// Chronological sizes: train = floor(N*train_frac*(1-val_frac)),
/// test = floor(N*(1-train_frac)), val = remainder.
SplitSizes split_sizes(std::size_t n, double train_frac, double val_frac_of_train);

struct SplitDataset {
    WindowedDataset train;
    WindowedDataset val;
    WindowedDataset test;
};

SplitDataset split(const WindowedDataset& full, double train_frac = 0.7,
                   double val_frac_of_train = 0.25);

// ---- csv ---------------------------------------------------------------

GridSpec load_grid_csv(const std::string& path);
SeriesTable load_series_csv(const std::string& path);
void write_grid_csv(const std::string& path, const GridSpec& grid);
void write_series_csv(const std::string& path, const SeriesTable& series);

// ---- end-to-end preparation --------------------------------------------

struct PipelineOptions {
    int lag = 7;
    double weight_exponent = 1.0;
    double weight_floor_km = 0.1;
    double train_frac = 0.7;
    double val_frac_of_train = 0.25;
    bool use_runoff = true;
};

struct PreparedData {
    std::vector<double> weights;
    Scaler scaler;
    WindowedDataset train;
    WindowedDataset val;
    WindowedDataset test;
    std::vector<std::string> warnings;
};

/// weights -> scale (statistics from rows the train block can see) ->
/// window -> chronological split.
PreparedData prepare(const GridSpec& grid, const SeriesTable& raw, const PipelineOptions& opt);

/// Windows an already-fitted scaler onto a new table (evaluation path).
WindowedDataset window_with_scaler(const SeriesTable& raw, const GridSpec& grid, const Scaler& scaler,
                                   const PipelineOptions& opt);

}  // namespace hydrodeep
