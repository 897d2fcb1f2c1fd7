#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace pdmpclt {

// Counter-based splittable random stream (splitmix64 core). Two properties
// the rest of the library relies on:
//   * identical seed + identical call sequence => bit-identical output,
//   * split(child_id) is const and derives a stream that is independent of
//     both the parent's future output and of siblings with other ids.
class RngStream {
 public:
  RngStream() : RngStream(0) {}

  explicit RngStream(std::uint64_t seed) {
    std::uint64_t s = seed;
    state_ = mix64(s += kGolden);
    gamma_ = mix_gamma(s + kGolden);
  }

  // Child stream keyed by (parent state, parent gamma, child id).
  RngStream split(std::uint64_t child_id) const {
    RngStream out;
    std::uint64_t h = state_;
    h = mix64(h ^ (gamma_ + kGolden * (child_id + 1)));
    out.state_ = mix64(h + kGolden);
    out.gamma_ = mix_gamma(h + 2 * kGolden);
    return out;
  }

  std::uint64_t next_u64() {
    state_ += gamma_;
    return mix64(state_);
  }

  // Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  // Exponential holding time; rate must be positive.
  double exponential(double rate) {
    // uniform01() < 1, so the argument of log stays in (0,1].
    return -std::log1p(-uniform01()) / rate;
  }

  // Index drawn from a finite probability row (weights summing to ~1).
  std::size_t categorical(std::span<const double> probs) {
    if (probs.empty()) throw std::invalid_argument("categorical: empty row");
    const double u = uniform01();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < probs.size(); ++k) {
      acc += probs[k];
      if (u < acc) return k;
    }
    return probs.size() - 1;
  }

  // Stable identifier of the stream's current position, for manifests.
  std::uint64_t token() const { return mix64(state_ ^ (gamma_ >> 1)); }

 private:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

  // Odd increment with decent bit mixing (splitmix gamma derivation).
  static std::uint64_t mix_gamma(std::uint64_t z) {
    z = mix64(z) | 1ull;
    // Avoid weak gammas with too-regular bit patterns.
    int pop = __builtin_popcountll(z ^ (z >> 1));
    if (pop < 24) z ^= 0xAAAAAAAAAAAAAAAAull;
    return z | 1ull;
  }

  std::uint64_t state_ = 0;
  std::uint64_t gamma_ = kGolden | 1;
};

}  // namespace pdmpclt
