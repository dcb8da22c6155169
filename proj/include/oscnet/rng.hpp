#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

namespace oscnet {

// splitmix64 (Steele, Lea, Flood). Used for state seeding and for deriving
// independent sub-seeds; not used as the main generator.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Deterministic sub-seed for stream `stream` under a master seed. Dataset
// generation keys one stream per sample, training keys streams for the split,
// the weight init and each epoch shuffle, so parallel and serial execution
// draw identical values.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    SplitMix64 sm(master ^ SplitMix64(stream).next());
    return sm.next();
}

// xoshiro256++ (Blackman & Vigna 2019). All randomness in the library flows
// through this generator; reproducibility is guaranteed per seed within this
// implementation, not across implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed) noexcept {
        SplitMix64 sm(seed);
        for (auto& word : state_) word = sm.next();
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform double in [low, high). Uses the top 53 bits so the result is a
    // deterministic function of next() alone.
    double uniform(double low, double high) noexcept {
        const double unit = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return low + (high - low) * unit;
    }

    // Unbiased integer in [0, bound). Lemire's multiply-shift with rejection.
    std::uint64_t below(std::uint64_t bound) noexcept {
        unsigned __int128 product = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(product);
        if (low < bound) {
            const std::uint64_t threshold = -bound % bound;
            while (low < threshold) {
                product = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(product);
            }
        }
        return static_cast<std::uint64_t>(product >> 64);
    }

    static constexpr std::uint64_t min() noexcept { return 0; }
    static constexpr std::uint64_t max() noexcept { return ~0ull; }
    std::uint64_t operator()() noexcept { return next(); }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_;
};

// Fisher-Yates shuffle driven by Rng::below, so results do not depend on a
// standard-library shuffle implementation.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        std::swap(values[i - 1], values[rng.below(i)]);
    }
}

}  // namespace oscnet
