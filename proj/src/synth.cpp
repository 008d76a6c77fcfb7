#include "hydrodeep/synth.hpp"

#include <cmath>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

namespace {

// Substream ids; fork(seed, stream) keeps the draws independent so that e.g.
// resampling the layout leaves the storm realization untouched.
enum Stream : std::uint64_t {
    kLayout = 1,
    kSpatialField = 2,
    kReservoir = 3,
    kStorms = 4,
    kNoise = 5,
};

Rng stream_rng(const SynthSpec& spec, std::uint64_t stream) {
    return Rng(spec.seed).fork(stream);
}

}  // namespace

void SynthSpec::validate() const {
    if (grid_count < 1) throw ParameterError("synth: grid_count must be >= 1");
    if (!(extent_km > 0.0)) throw ParameterError("synth: extent must be > 0");
    if (!(dist_min_km >= 0.0 && dist_max_km >= dist_min_km)) {
        throw ParameterError("synth: bad distance range");
    }
    if (!(storm_rate_per_day >= 0.0)) throw ParameterError("synth: storm rate must be >= 0");
    if (!(storm_depth_mm > 0.0)) throw ParameterError("synth: storm depth must be > 0");
    if (!(spatial_factor_min > 0.0 && spatial_factor_max >= spatial_factor_min)) {
        throw ParameterError("synth: bad spatial factor range");
    }
    if (!(reservoir_k_min > 0.0 && reservoir_k_max <= 1.0 && reservoir_k_max >= reservoir_k_min)) {
        throw ParameterError("synth: reservoir constants must lie in (0,1]");
    }
    if (!(delay_per_km >= 0.0)) throw ParameterError("synth: delay_per_km must be >= 0");
    if (!(area_scale > 0.0)) throw ParameterError("synth: area_scale must be > 0");
    if (!(noise_std >= 0.0)) throw ParameterError("synth: noise_std must be >= 0");
}

const char* shift_mode_name(ShiftMode mode) {
    switch (mode) {
        case ShiftMode::spatial_shift: return "spatial";
        case ShiftMode::temporal_shift: return "temporal";
        case ShiftMode::both: return "both";
    }
    return "both";
}

ShiftMode shift_mode_from_name(const std::string& name) {
    if (name == "spatial") return ShiftMode::spatial_shift;
    if (name == "temporal") return ShiftMode::temporal_shift;
    if (name == "both") return ShiftMode::both;
    throw ParameterError("unknown shift mode: " + name + " (expected spatial|temporal|both)");
}

GridSpec gen_watershed(const SynthSpec& spec) {
    spec.validate();
    Rng rng = stream_rng(spec, kLayout);
    GridSpec g;
    for (std::size_t i = 0; i < spec.grid_count; ++i) {
        g.grid_ids.push_back("g" + std::to_string(i + 1));
        g.x.push_back(rng.uniform(0.0, spec.extent_km));
        g.y.push_back(rng.uniform(0.0, spec.extent_km));
        g.distance_km.push_back(rng.uniform(spec.dist_min_km, spec.dist_max_km));
    }
    return g;
}

std::vector<double> gen_spatial_factors(const SynthSpec& spec) {
    spec.validate();
    Rng rng = stream_rng(spec, kSpatialField);
    std::vector<double> f(spec.grid_count);
    for (double& v : f) v = rng.uniform(spec.spatial_factor_min, spec.spatial_factor_max);
    return f;
}

std::vector<double> gen_reservoir_constants(const SynthSpec& spec) {
    spec.validate();
    Rng rng = stream_rng(spec, kReservoir);
    std::vector<double> k(spec.grid_count);
    for (double& v : k) v = rng.uniform(spec.reservoir_k_min, spec.reservoir_k_max);
    return k;
}

std::vector<std::vector<double>> gen_precip(const SynthSpec& spec, std::size_t days) {
    spec.validate();
    const auto factors = gen_spatial_factors(spec);
    Rng rng = stream_rng(spec, kStorms);
    std::vector<std::vector<double>> p(days, std::vector<double>(spec.grid_count, 0.0));
    for (std::size_t t = 0; t < days; ++t) {
        const int events = rng.poisson(spec.storm_rate_per_day);
        double depth = 0.0;
        for (int e = 0; e < events; ++e) depth += rng.exponential(spec.storm_depth_mm);
        if (depth == 0.0) continue;
        for (std::size_t i = 0; i < spec.grid_count; ++i) p[t][i] = depth * factors[i];
    }
    return p;
}

std::vector<std::vector<double>> pb_surrogate(const std::vector<std::vector<double>>& precip,
                                              const std::vector<double>& k) {
    const std::size_t T = precip.size();
    const std::size_t L = k.size();
    for (double ki : k) {
        if (!(ki > 0.0 && ki <= 1.0)) throw ParameterError("pb_surrogate: k must lie in (0,1]");
    }
    std::vector<std::vector<double>> r(T, std::vector<double>(L, 0.0));
    std::vector<double> storage(L, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        if (precip[t].size() != L) throw DimensionError("pb_surrogate: ragged precipitation row");
        for (std::size_t i = 0; i < L; ++i) {
            const double available = storage[i] + precip[t][i];
            r[t][i] = k[i] * available;
            storage[i] = (1.0 - k[i]) * available;
        }
    }
    return r;
}

std::vector<double> gen_discharge(const std::vector<std::vector<double>>& runoff,
                                  const std::vector<double>& distance_km, const SynthSpec& spec) {
    spec.validate();
    const std::size_t T = runoff.size();
    const std::size_t L = distance_km.size();
    std::vector<std::size_t> delay(L);
    for (std::size_t i = 0; i < L; ++i) {
        delay[i] = static_cast<std::size_t>(std::llround(spec.delay_per_km * distance_km[i]));
    }
    std::vector<double> d(T, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        if (runoff[t].size() != L) throw DimensionError("gen_discharge: ragged runoff row");
        double acc = 0.0;
        for (std::size_t i = 0; i < L; ++i) {
            if (t >= delay[i]) acc += spec.area_scale * runoff[t - delay[i]][i];
        }
        d[t] = acc;
    }
    if (spec.noise_std > 0.0) {
        Rng rng = stream_rng(spec, kNoise);
        const double sigma = spec.noise_std;
        for (double& v : d) {
            // mean-one lognormal multiplier
            v *= std::exp(sigma * rng.normal01() - 0.5 * sigma * sigma);
        }
    }
    return d;
}

SynthResult gen_series(const SynthSpec& spec, std::size_t days, std::int64_t start_date) {
    if (days < 2) throw ParameterError("gen_series: need at least 2 days");
    SynthResult out;
    out.grid = gen_watershed(spec);
    out.spatial_factors = gen_spatial_factors(spec);
    out.reservoir_k = gen_reservoir_constants(spec);
    out.series.precip = gen_precip(spec, days);
    out.series.runoff = pb_surrogate(out.series.precip, out.reservoir_k);
    out.series.discharge = gen_discharge(out.series.runoff, out.grid.distance_km, spec);
    out.series.dates.resize(days);
    for (std::size_t t = 0; t < days; ++t) out.series.dates[t] = start_date + static_cast<std::int64_t>(t);
    out.series.validate();
    return out;
}

TransferPair make_transfer_pair(const SynthSpec& spec, ShiftMode mode, std::uint64_t target_seed,
                                std::size_t days, std::int64_t start_date) {
    TransferPair pair;
    pair.source = gen_series(spec, days, start_date);

    SynthSpec target = spec;
    target.seed = target_seed;
    if (mode == ShiftMode::temporal_shift || mode == ShiftMode::both) {
        // Jittered storm climate on top of resampled reservoir constants.
        Rng jitter = Rng(target_seed).fork(99);
        target.storm_rate_per_day = spec.storm_rate_per_day * jitter.uniform(0.7, 1.3);
        target.storm_depth_mm = spec.storm_depth_mm * jitter.uniform(0.7, 1.3);
    }

    SynthResult t;
    // Layout and spatial field: resampled for spatial/both, copied for temporal.
    if (mode == ShiftMode::temporal_shift) {
        t.grid = pair.source.grid;
        t.spatial_factors = pair.source.spatial_factors;
    } else {
        t.grid = gen_watershed(target);
        t.spatial_factors = gen_spatial_factors(target);
    }
    // Reservoir constants: copied for spatial, resampled for temporal/both.
    if (mode == ShiftMode::spatial_shift) {
        t.reservoir_k = pair.source.reservoir_k;
    } else {
        t.reservoir_k = gen_reservoir_constants(target);
    }

    // Fresh storm realization for the target in every mode; for temporal
    // shifts the per-grid field of the source is re-applied.
    SynthSpec precip_spec = target;
    std::vector<std::vector<double>> p = gen_precip(precip_spec, days);
    if (mode == ShiftMode::temporal_shift) {
        const auto own_factors = gen_spatial_factors(precip_spec);
        for (std::size_t tday = 0; tday < days; ++tday) {
            for (std::size_t i = 0; i < spec.grid_count; ++i) {
                p[tday][i] = p[tday][i] / own_factors[i] * t.spatial_factors[i];
            }
        }
    }
    t.series.precip = std::move(p);
    t.series.runoff = pb_surrogate(t.series.precip, t.reservoir_k);
    t.series.discharge = gen_discharge(t.series.runoff, t.grid.distance_km, target);
    t.series.dates.resize(days);
    for (std::size_t d = 0; d < days; ++d) t.series.dates[d] = start_date + static_cast<std::int64_t>(d);
    t.series.validate();
    pair.target = std::move(t);
    return pair;
}

}  // namespace hydrodeep
