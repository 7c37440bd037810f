#ifndef STEINPP_RNG_HPP
#define STEINPP_RNG_HPP

#include <cstdint>
#include <limits>
#include <string_view>

namespace steinpp {

//! Finalizer of SplitMix64. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

//! FNV-1a over the bytes of a string.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

/// Counter-based 64-bit generator ("SplitMix64 in counter mode").
///
/// Word i of a stream with key k is mix64(k + (i + 1) * golden), so any word
/// can be computed without the previous ones. Streams are derived, never
/// advanced, when work is split:
///
///   split(id)     -> key' = mix64(key ^ mix64(fnv1a(id)))
///   replica(i)    -> key' = mix64(key ^ mix64(i + golden))
///
/// A Monte-Carlo check with identifier `check_id` draws replica i from
/// `root.split(check_id).replica(i)`, which makes its output independent of
/// the number of worker threads. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;
  static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;

  constexpr explicit CounterRng(std::uint64_t seed = 0) noexcept : key_(mix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return mix64(key_ + counter_ * golden);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  [[nodiscard]] constexpr CounterRng split(std::string_view id) const noexcept {
    return from_key(mix64(key_ ^ mix64(fnv1a(id))));
  }

  [[nodiscard]] constexpr CounterRng replica(std::uint64_t index) const noexcept {
    return from_key(mix64(key_ ^ mix64(index + golden)));
  }

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr CounterRng from_key(std::uint64_t key) noexcept {
    CounterRng r;
    r.key_ = key;
    return r;
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace steinpp

#endif  // STEINPP_RNG_HPP
