#include "stcos/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace stcos {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : gen_(seed) {}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

Rng Rng::stream(std::uint64_t master, std::uint64_t index) {
    return Rng(derive_seed(master, index));
}

std::uint64_t Rng::next_u64() {
    return gen_();
}

double Rng::uniform() {
    // 53-bit mantissa in [0, 1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) {
    return a + (b - a) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Marsaglia polar method
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

double Rng::normal(double mean, double sd) {
    return mean + sd * normal();
}

double Rng::gamma(double shape, double rate) {
    if (shape <= 0.0 || rate <= 0.0)
        throw std::invalid_argument("gamma: shape and rate must be positive");
    // Marsaglia-Tsang squeeze; shape < 1 boosted via the power identity.
    if (shape < 1.0) {
        const double g = gamma(shape + 1.0, rate);
        double u;
        do { u = uniform(); } while (u == 0.0);
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
            return d * v / rate;
    }
}

double Rng::inv_gamma(double shape, double scale) {
    // X ~ Gamma(shape, rate=scale)  =>  1/X ~ IG(shape, scale)
    return 1.0 / gamma(shape, scale);
}

} // namespace stcos
