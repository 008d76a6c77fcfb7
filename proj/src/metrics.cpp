#include "hydrodeep/metrics.hpp"

#include <cmath>
#include <sstream>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

namespace {

struct SumStats {
    double sse = 0.0;       // sum (obs-sim)^2
    double svar = 0.0;      // sum (obs-mean)^2
    double obs_total = 0.0;
    double residual_total = 0.0;  // sum (obs-sim)
    double obs_mean = 0.0;
    std::size_t n = 0;
};

SumStats accumulate(const std::vector<double>& obs, const std::vector<double>& sim) {
    if (obs.size() != sim.size()) throw DimensionError("metrics: obs/sim length mismatch");
    if (obs.size() < 2) throw DegenerateError("metrics: need at least 2 observations");
    SumStats s;
    s.n = obs.size();
    for (double v : obs) s.obs_total += v;
    s.obs_mean = s.obs_total / static_cast<double>(s.n);
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double r = obs[i] - sim[i];
        const double d = obs[i] - s.obs_mean;
        s.sse += r * r;
        s.svar += d * d;
        s.residual_total += r;
    }
    return s;
}

void require_variance(const SumStats& s) {
    if (s.svar == 0.0) throw DegenerateError("metrics: observations are constant");
}

}  // namespace

double nse(const std::vector<double>& obs, const std::vector<double>& sim) {
    const SumStats s = accumulate(obs, sim);
    require_variance(s);
    return 1.0 - s.sse / s.svar;
}

double pbias(const std::vector<double>& obs, const std::vector<double>& sim) {
    const SumStats s = accumulate(obs, sim);
    if (s.obs_total == 0.0) throw DegenerateError("pbias: total observation is zero");
    return 100.0 * s.residual_total / s.obs_total;
}

double pbias_squared_numerator(const std::vector<double>& obs, const std::vector<double>& sim) {
    const SumStats s = accumulate(obs, sim);
    if (s.obs_total == 0.0) throw DegenerateError("pbias: total observation is zero");
    return 100.0 * s.sse / s.obs_total;
}

double rsr(const std::vector<double>& obs, const std::vector<double>& sim) {
    const SumStats s = accumulate(obs, sim);
    require_variance(s);
    return std::sqrt(s.sse) / std::sqrt(s.svar);
}

MetricReport report(const std::vector<double>& obs, const std::vector<double>& sim) {
    const SumStats s = accumulate(obs, sim);
    require_variance(s);
    MetricReport r;
    r.n = s.n;
    r.obs_mean = s.obs_mean;
    r.nse = 1.0 - s.sse / s.svar;
    if (s.obs_total == 0.0) throw DegenerateError("pbias: total observation is zero");
    r.pbias_pct = 100.0 * s.residual_total / s.obs_total;
    r.rsr = std::sqrt(s.sse) / std::sqrt(s.svar);
    r.rmse = std::sqrt(s.sse / static_cast<double>(s.n));
    r.mean_residual = s.residual_total / static_cast<double>(s.n);
    return r;
}

std::string MetricReport::to_json() const {
    std::ostringstream os;
    os.precision(12);
    os << "{\"mean_residual\": " << mean_residual << ", \"n\": " << n << ", \"nse\": " << nse
       << ", \"obs_mean\": " << obs_mean << ", \"pbias_pct\": " << pbias_pct << ", \"rmse\": " << rmse
       << ", \"rsr\": " << rsr << "}";
    return os.str();
}

}  // namespace hydrodeep
