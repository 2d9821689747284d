#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace rklab {

/// Philox4x32-10 counter-based generator.
///
/// The key is the 64-bit run seed and the upper half of the counter is a
/// 64-bit stream id, so every (seed, stream) pair addresses an independent
/// sequence without any shared state. Satisfies UniformRandomBitGenerator.
class Philox4x32 {
 public:
  using result_type = std::uint32_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32(std::uint64_t seed, std::uint64_t stream);

  /// The raw bijection: ten Philox rounds of `counter` under `key`.
  static Block encrypt(Block counter, Key key);

  result_type operator()();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform double in the open interval (0, 1).
  double uniform_open();
  /// Multiple of 2^-52 in [2^-52, 1 - 2^-52]; 1 - u is exact.
  double dyadic_fraction();

 private:
  Key key_;
  Block counter_;
  Block buffer_{};
  int next_ = 4;
};

/// Stream namespaces keep the independent random inputs of one run apart.
enum class StreamDomain : std::uint64_t {
  levy_path = 1,
  cb_process = 2,
  cb_flow = 3,
  brownian_example = 4,
  test = 15,
};

constexpr std::uint64_t stream_id(StreamDomain domain, std::uint64_t index) {
  return (static_cast<std::uint64_t>(domain) << 56) ^ index;
}

}  // namespace rklab
