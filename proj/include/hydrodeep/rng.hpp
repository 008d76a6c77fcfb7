#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace hydrodeep {

/// Seeded random source. All distribution transforms are implemented here
/// (not via std:: distributions) so a given seed produces the same stream on
/// every platform and standard library.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01();

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller; one spare value is cached.
    double normal01();

    double normal(double mean, double stddev) { return mean + stddev * normal01(); }

    /// Exponential with the given mean (> 0).
    double exponential(double mean);

    /// Poisson count, Knuth's product method (intended for small rates).
    int poisson(double rate);

    /// Uniform integer in [0, n), unbiased.
    std::uint64_t below(std::uint64_t n);

    /// Fisher-Yates shuffle driven by below(); stable across platforms.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Derive an independent generator for a named substream.
    Rng fork(std::uint64_t stream) const;

    std::string serialize() const;
    static Rng deserialize(const std::string& text);

  private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace hydrodeep
