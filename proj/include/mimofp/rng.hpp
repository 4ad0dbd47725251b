#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace mimofp {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_keys(std::uint64_t seed, std::uint64_t k0, std::uint64_t k1,
                              std::uint64_t k2, std::uint64_t k3) {
    std::uint64_t s = seed;
    for (std::uint64_t k : {k0, k1, k2, k3}) {
        s ^= splitmix64(k) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        splitmix64(s);
    }
    return splitmix64(s);
}

} // namespace detail

// Deterministic random stream with keyed substream derivation. Substreams are
// derived from the construction seed (not the engine state), so any frame,
// device or trial can be regenerated independently and in any order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), eng_(seed) {}

    Rng substream(std::uint64_t k0, std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                  std::uint64_t k3 = 0) const {
        return Rng(detail::mix_keys(seed_, k0, k1, k2, k3));
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return eng_(); }

    // uniform in [0,1), 53-bit resolution
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) {
        // modulo bias negligible for n << 2^64; n is small everywhere here
        return eng_() % n;
    }

    // standard normal via Box-Muller (explicit so results are pinned to this
    // implementation, not to the stdlib's distribution internals)
    double gauss() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53; // (0,1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // circular complex Gaussian, E|z|^2 = 1
    std::complex<double> cgauss() {
        const double re = gauss();
        const double im = gauss();
        return {re * 0.7071067811865475244, im * 0.7071067811865475244};
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

} // namespace mimofp
