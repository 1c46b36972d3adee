#pragma once

#include <array>
#include <cstdint>

namespace binsreg {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Each
/// simulation draw gets its own substream, so output does not depend on how
/// draws are scheduled across threads.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter counter, Key key);
};

/// Standard normal variates for substream `stream` under `seed`.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  double next();

 private:
  void refill();

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint32_t block_ = 0;
  std::array<double, 2> cache_{};
  int cached_ = 0;
};

}  // namespace binsreg
