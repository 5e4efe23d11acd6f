#pragma once

#include <cstdint>
#include <random>

namespace tsuq::nn {

namespace detail {
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}
}  // namespace detail

/// Reproducible random stream identified by (base_seed, stream_id).
///
/// Distinct stream ids are decorrelated by hashing the pair through SplitMix64
/// before seeding the engine, so MC pass b can draw from stream b regardless of
/// the order in which passes are executed.
class SeededRng {
 public:
  using Engine = std::mt19937_64;

  explicit SeededRng(std::uint64_t base_seed, std::uint64_t stream_id = 0)
      : base_seed_(base_seed),
        stream_id_(stream_id),
        engine_(detail::splitmix64(detail::splitmix64(base_seed) ^
                                   detail::splitmix64(stream_id + 0x632BE59BD9B4E019ULL))) {}

  std::uint64_t base_seed() const noexcept { return base_seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Child stream; identical (parent, k) always yields the same child.
  SeededRng substream(std::uint64_t k) const {
    return SeededRng(detail::splitmix64(base_seed_ ^ detail::splitmix64(stream_id_)), k);
  }

  /// Uniform double in [0, 1) built from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal(double mean = 0.0, double stddev = 1.0) {
    return std::normal_distribution<double>(mean, stddev)(engine_);
  }

  std::uint64_t next_u64() { return engine_(); }

  Engine& engine() noexcept { return engine_; }

 private:
  std::uint64_t base_seed_;
  std::uint64_t stream_id_;
  Engine engine_;
};

}  // namespace tsuq::nn
