#pragma once

// Keyed random streams. Every random quantity in a simulation is drawn from an
// engine whose seed is a hash of (base seed, replicate, cell, purpose), so the
// draws do not depend on scheduling or on the number of workers.

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace ctnoise {

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// SplitMix64 (Steele, Lea, Flood 2014). A 64-bit state is cheap to key,
/// which matters because every cell of every replicate gets its own stream;
/// mt19937_64 spends ~4us per construction.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const auto out = detail::splitmix64(state_);
    state_ += 0x9e3779b97f4a7c15ULL;
    return out;
  }

  friend constexpr bool operator==(const SplitMix64&, const SplitMix64&) = default;

 private:
  std::uint64_t state_;
};

using Engine = SplitMix64;

/// Folds a list of key words into one 64-bit seed.
constexpr std::uint64_t hash_key(std::initializer_list<std::uint64_t> words) noexcept {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (const auto w : words) h = detail::splitmix64(h ^ detail::splitmix64(w));
  return h;
}

/// Stream purposes, so that count draws and resample draws never share state.
enum class StreamPurpose : std::uint64_t { Counts = 1, Resample = 2, Aux = 3 };

/// Handle for one replicate's family of per-cell streams.
class KeyedRng {
 public:
  constexpr KeyedRng(std::uint64_t base_seed, std::uint64_t replicate) noexcept
      : base_seed_(base_seed), replicate_(replicate) {}

  [[nodiscard]] Engine cell(std::size_t j, std::size_t k,
                            StreamPurpose purpose = StreamPurpose::Counts) const {
    return Engine(hash_key({base_seed_, replicate_, static_cast<std::uint64_t>(j),
                            static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(purpose)}));
  }

  [[nodiscard]] Engine stream(StreamPurpose purpose = StreamPurpose::Aux) const {
    return Engine(hash_key({base_seed_, replicate_, static_cast<std::uint64_t>(purpose)}));
  }

  [[nodiscard]] constexpr std::uint64_t base_seed() const noexcept { return base_seed_; }
  [[nodiscard]] constexpr std::uint64_t replicate() const noexcept { return replicate_; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t replicate_;
};

}  // namespace ctnoise
