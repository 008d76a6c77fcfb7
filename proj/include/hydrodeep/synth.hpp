#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hydrodeep/datapipe.hpp"
#include "hydrodeep/rng.hpp"

namespace hydrodeep {

/// Parameters of a synthetic watershed and its runoff surrogate. Everything
/// downstream is a pure function of (spec, seed): coordinates, reservoir
/// constants, storm realizations, and observation noise each draw from an
/// independent substream of `seed`.
struct SynthSpec {
    std::size_t grid_count = 16;
    double extent_km = 40.0;
    double dist_min_km = 0.2;   // distance-to-river range, uniform
    double dist_max_km = 10.0;
    double storm_rate_per_day = 0.35;  // Poisson arrivals, shared watershed-wide
    double storm_depth_mm = 9.0;       // exponential mean depth per event
    double spatial_factor_min = 0.6;   // per-grid multiplicative precip field
    double spatial_factor_max = 1.4;
    double reservoir_k_min = 0.2;  // per-grid linear-reservoir constant, 1/day
    double reservoir_k_max = 0.6;
    double delay_per_km = 0.2;  // routing delay, days/km
    double area_scale = 1.0;    // runoff -> discharge contribution per grid
    double noise_std = 0.0;     // lognormal sigma on discharge (fraction)
    std::uint64_t seed = 1;

    void validate() const;
};

/// Which axis a generated transfer target differs along.
enum class ShiftMode { spatial_shift, temporal_shift, both };

const char* shift_mode_name(ShiftMode mode);
ShiftMode shift_mode_from_name(const std::string& name);

/// Seeded grid layout: coordinates uniform in the extent, distances uniform
/// in [dist_min, dist_max].
GridSpec gen_watershed(const SynthSpec& spec);

/// Per-grid multiplicative precipitation field (fixed per watershed).
std::vector<double> gen_spatial_factors(const SynthSpec& spec);

/// Per-grid reservoir constants in [k_min, k_max].
std::vector<double> gen_reservoir_constants(const SynthSpec& spec);

/// T days of per-grid precipitation: a watershed-wide storm total per day
/// (Poisson event count, exponential depths) scaled by the spatial field.
std::vector<std::vector<double>> gen_precip(const SynthSpec& spec, std::size_t days);

/// Linear reservoir per grid: a_t = s_{t-1} + p_t, r_t = k a_t,
/// s_t = (1-k) a_t, s_0 = 0. Mass balance sum(r) + s_T == sum(p) per grid.
std::vector<std::vector<double>> pb_surrogate(const std::vector<std::vector<double>>& precip,
                                              const std::vector<double>& k);

/// Discharge: delayed sum of grid runoff, delay_i = round(delay_per_km * d_i),
/// with optional multiplicative lognormal noise (mean one). Out-of-range lags
/// contribute nothing.
std::vector<double> gen_discharge(const std::vector<std::vector<double>>& runoff,
                                  const std::vector<double>& distance_km, const SynthSpec& spec);

/// Full watershed realization as the datapipe CSV schema expects it.
struct SynthResult {
    GridSpec grid;
    SeriesTable series;
    std::vector<double> spatial_factors;
    std::vector<double> reservoir_k;
};

SynthResult gen_series(const SynthSpec& spec, std::size_t days, std::int64_t start_date);

struct TransferPair {
    SynthResult source;
    SynthResult target;
};

/// Source from `spec`; target re-seeded with `target_seed` and differing only
/// along the chosen axis: spatial_shift resamples the layout but keeps the
/// reservoir constants bit-identical, temporal_shift keeps the layout and
/// spatial field but resamples reservoir constants and jitters the storm
/// process, both does both.
TransferPair make_transfer_pair(const SynthSpec& spec, ShiftMode mode, std::uint64_t target_seed,
                                std::size_t days, std::int64_t start_date);

}  // namespace hydrodeep
