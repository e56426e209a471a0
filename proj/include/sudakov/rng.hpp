#pragma once

#include <cstdint>
#include <random>

namespace sudakov {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// A reproducible random stream identified by (seed, stream_id). Distinct
/// pairs are seeded through SplitMix64 so their Mersenne Twister states are
/// unrelated; the same pair always replays the same sequence.
class RngStream {
 public:
  using result_type = std::mt19937_64::result_type;

  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t state = seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
    std::uint32_t words[8];
    for (int i = 0; i < 4; ++i) {
      const std::uint64_t v = detail::splitmix64(state);
      words[2 * i] = static_cast<std::uint32_t>(v);
      words[2 * i + 1] = static_cast<std::uint32_t>(v >> 32);
    }
    std::seed_seq seq(std::begin(words), std::end(words));
    engine_.seed(seq);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// A child stream; used to derive per-task streams from a master stream.
  RngStream derive(std::uint64_t task) const {
    std::uint64_t s = seed_ ^ (stream_id_ * 0x9e3779b97f4a7c15ULL);
    return RngStream(detail::splitmix64(s), task);
  }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double normal() { return normal_(engine_); }
  double gamma(double shape) {
    return std::gamma_distribution<double>(shape, 1.0)(engine_);
  }
  double sign() { return (engine_() >> 63) ? 1.0 : -1.0; }
  std::uint64_t below(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace sudakov
