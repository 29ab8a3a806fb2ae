#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace demandscope {

// splitmix64; used to derive independent stream seeds from a base seed plus
// arbitrary integer keys so parallel schedules reproduce the sequential run.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline uint64_t derive_seed(uint64_t base) { return mix64(base); }

template <typename... Keys>
uint64_t derive_seed(uint64_t base, uint64_t key, Keys... rest) {
    return derive_seed(mix64(base ^ mix64(key)), rest...);
}

// mt19937_64 with hand-rolled transforms. The standard pins the engine's
// output sequence but not the distributions, so every distribution here is
// written out explicitly to keep results identical across platforms.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased-enough integer in [0, n) via 128-bit multiply-shift.
    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>((static_cast<__uint128_t>(engine_()) * n) >> 64);
    }

    int uniform_int(int lo, int hi_inclusive) {
        return lo + static_cast<int>(below(static_cast<uint64_t>(hi_inclusive - lo + 1)));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; consumes exactly two draws per call.
    double normal(double mean = 0.0, double sd = 1.0) {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
        return mean + sd * z;
    }

    double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace demandscope
