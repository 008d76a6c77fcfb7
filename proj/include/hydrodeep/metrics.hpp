#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace hydrodeep {

/// Goodness-of-fit summary for one evaluation run. Physical units throughout.
struct MetricReport {
    double nse = 0.0;        // <= 1; 1 is perfect, 0 matches the mean predictor
    double pbias_pct = 0.0;  // positive when totals are underestimated
    double rsr = 0.0;        // rmse / stddev of observations; equals sqrt(1-nse)
    std::size_t n = 0;
    double obs_mean = 0.0;
    double rmse = 0.0;
    double mean_residual = 0.0;  // mean of obs - sim

    /// Fixed-key structured text (JSON object, sorted keys).
    std::string to_json() const;
};

/// 1 - sum((obs-sim)^2) / sum((obs-mean)^2). Requires n >= 2 and
/// non-constant observations.
double nse(const std::vector<double>& obs, const std::vector<double>& sim);

/// 100 * sum(obs-sim) / sum(obs). Requires sum(obs) != 0.
double pbias(const std::vector<double>& obs, const std::vector<double>& sim);

/// Variant with a squared numerator, kept for audit comparisons; always
/// non-negative, so it cannot express overestimation.
double pbias_squared_numerator(const std::vector<double>& obs, const std::vector<double>& sim);

/// rmse / stddev of observations.
double rsr(const std::vector<double>& obs, const std::vector<double>& sim);

MetricReport report(const std::vector<double>& obs, const std::vector<double>& sim);

}  // namespace hydrodeep
