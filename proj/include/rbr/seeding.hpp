#pragma once

#include <cstdint>
#include <random>

namespace rbr {

using Rng = std::mt19937_64;

// Sub-seed derivation: splitmix64 over (master, purpose, index). Each purpose
// gets its own stream so adding a consumer never shifts the others.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t purpose, std::uint64_t index = 0) noexcept;

namespace purpose {
inline constexpr std::uint64_t synthetic_d1 = 1;
inline constexpr std::uint64_t synthetic_d2 = 2;
inline constexpr std::uint64_t split = 3;
inline constexpr std::uint64_t train_current = 4;
inline constexpr std::uint64_t future_subsample = 5;
inline constexpr std::uint64_t future_train = 6;
inline constexpr std::uint64_t local_sampling = 7;
inline constexpr std::uint64_t instance_order = 8;
}  // namespace purpose

}  // namespace rbr
