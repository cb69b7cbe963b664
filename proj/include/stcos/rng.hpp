#pragma once

#include <cstdint>
#include <random>

namespace stcos {

// Deterministic random stream. Normal/gamma variates are generated with
// explicit algorithms (not std:: distributions, whose output is
// implementation-defined), so draws are reproducible across compilers.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent substream identified by (master, index). Used by parallel
    // kernels so results do not depend on the thread count.
    static Rng stream(std::uint64_t master, std::uint64_t index);

    std::uint64_t next_u64();

    double uniform();                      // [0, 1)
    double uniform(double a, double b);    // [a, b)
    double normal();                       // N(0, 1)
    double normal(double mean, double sd);
    double gamma(double shape, double rate);
    double inv_gamma(double shape, double scale);

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// Seed of the substream Rng::stream(master, index) would use.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

} // namespace stcos
