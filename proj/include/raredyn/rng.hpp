#pragma once

#include <array>
#include <cstdint>

namespace raredyn {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
// easy as 1, 2, 3"). Pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);

// Counter-based stream keyed by (master seed, trajectory id, step). Two
// streams built from the same triple produce identical draws regardless of
// which thread created them or in which order; this is what makes serial and
// parallel Monte Carlo agree bitwise.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t trajectory, std::uint64_t step);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  // Uniform on the open interval (0, 1).
  double uniform_open();

 private:
  std::array<std::uint32_t, 2> key_;
  std::uint64_t trajectory_;
  std::uint32_t step_;
  std::uint32_t block_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int used_ = 4;
};

}  // namespace raredyn
