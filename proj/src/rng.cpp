#include "hydrodeep/rng.hpp"

#include <cmath>
#include <sstream>

#include "hydrodeep/errors.hpp"

namespace hydrodeep {

namespace {

// splitmix64 finalizer, used to decorrelate forked substreams.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

double Rng::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::normal01() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

double Rng::exponential(double mean) {
    if (!(mean > 0.0)) throw ParameterError("exponential mean must be > 0");
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    return -mean * std::log(u);
}

int Rng::poisson(double rate) {
    if (rate < 0.0) throw ParameterError("poisson rate must be >= 0");
    if (rate == 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= uniform01();
    } while (p > limit);
    return k - 1;
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ParameterError("below(0) is undefined");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
}

Rng Rng::fork(std::uint64_t stream) const {
    Rng copy = *this;
    const std::uint64_t base = copy.next_u64();
    return Rng(mix64(base ^ mix64(stream)));
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_ << " " << (has_spare_ ? 1 : 0);
    if (has_spare_) {
        os << " " << std::hexfloat << spare_;
    }
    return os.str();
}

Rng Rng::deserialize(const std::string& text) {
    std::istringstream is(text);
    Rng rng(0);
    int spare_flag = 0;
    is >> rng.engine_ >> spare_flag;
    if (is.fail()) throw ParseError("malformed rng state");
    rng.has_spare_ = spare_flag != 0;
    if (rng.has_spare_) {
        // std::hexfloat extraction is unreliable on some libstdc++ versions;
        // parse the token with strtod instead.
        std::string tok;
        is >> tok;
        if (tok.empty()) throw ParseError("malformed rng spare value");
        rng.spare_ = std::strtod(tok.c_str(), nullptr);
    }
    return rng;
}

}  // namespace hydrodeep
