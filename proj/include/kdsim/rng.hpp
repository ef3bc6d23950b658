#pragma once

#include <cstdint>

namespace kdsim {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stream key for (seed, a, b), e.g. (run seed, term index, ensemble member).
inline constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t a,
                                          std::uint64_t b = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ a) ^
                      (b * 0xd1b54a32d192ed03ULL));
}

/// Counter-based generator: draw k of stream `key` is a pure function of
/// (key, k), so independent streams need no shared state.
class CounterRng {
  public:
    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    constexpr std::uint64_t operator()() {
        return splitmix64(key_ ^ splitmix64(counter_++));
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform() {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

    [[nodiscard]] constexpr std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace kdsim
