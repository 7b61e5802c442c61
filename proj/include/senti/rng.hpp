#ifndef SENTI_RNG_HPP
#define SENTI_RNG_HPP

#include <cstdint>
#include <vector>

namespace senti {

// splitmix64 (Steele, Lea, Flood 2014). 64-bit state, identical output on
// every platform; this is the only random source in the project so every
// seeded result is reproducible bit-for-bit.
class SplitMix64 {
public:
    explicit SplitMix64(uint64_t seed) : state_(seed) {}

    uint64_t next() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1), 53 mantissa bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Unbiased integer in [0, n) by rejection; n must be > 0.
    uint64_t below(uint64_t n) {
        const uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next();
            if (r >= threshold) return r % n;
        }
    }

private:
    uint64_t state_;
};

// Fisher-Yates, driven by SplitMix64 so shuffles are platform-stable.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (size_t i = v.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

// Derives an independent stream seed from (seed, stream index).
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    SplitMix64 r(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1)));
    r.next();
    return r.next();
}

} // namespace senti

#endif
