#pragma once

#include <cstdint>
#include <random>

namespace lcrdo {

// Purpose tags for keyed random sub-streams. Every draw in a run is a pure
// function of (seed, stream, key, index), so two runs that differ only in the
// transmission policy see the same channel realisation per (packet, attempt).
enum class Stream : std::uint64_t {
    Channel = 0x6368616e6e656c00ULL,
    Interferer = 0x696e746572660000ULL,
    Content = 0x636f6e74656e7400ULL,
    Calibration = 0x63616c6962000000ULL,
};

// splitmix64 finalizer
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed, Stream stream, std::uint64_t key,
                                 std::uint64_t index) noexcept {
    std::uint64_t h = mix64(seed ^ static_cast<std::uint64_t>(stream));
    h = mix64(h ^ key);
    h = mix64(h ^ (index * 0xd1b54a32d192ed03ULL));
    return h;
}

// Uniform double in [0, 1) from the top 53 bits.
constexpr double to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class KeyedRng {
public:
    explicit KeyedRng(std::uint64_t seed) noexcept : seed_(seed) {}

    double uniform(Stream stream, std::uint64_t key, std::uint64_t index = 0) const noexcept {
        return to_unit(hash_key(seed_, stream, key, index));
    }

    std::uint64_t bits(Stream stream, std::uint64_t key, std::uint64_t index = 0) const noexcept {
        return hash_key(seed_, stream, key, index);
    }

    // Sequential engine for Monte-Carlo loops that do not need keyed access.
    std::mt19937_64 engine(Stream stream, std::uint64_t key = 0) const {
        return std::mt19937_64{hash_key(seed_, stream, key, 0)};
    }

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

}  // namespace lcrdo
