#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace pacf {

// Seeded generator used everywhere randomness is needed. The engine is
// std::mt19937_64, whose output sequence is fixed by the C++ standard; the
// uniform and normal transforms below are spelled out here instead of using
// <random> distributions, whose algorithms are implementation-defined. Streams
// are therefore reproducible across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n), via 128-bit multiply-shift. n must be > 0.
  std::size_t index(std::size_t n);
  // Standard normal via Box-Muller (cosine branch, two uniforms per draw).
  double normal();

  // Derives an independent child seed for a named sub-stream.
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

  std::string serialize() const;
  void deserialize(const std::string& text);

  friend bool operator==(const Rng& a, const Rng& b) { return a.engine_ == b.engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace pacf
