#pragma once

#include <array>
#include <cstdint>

namespace gfn {

// Philox-4x32-10 counter-based generator. (key, stream) selects an
// independent sequence; the position within it can be saved and restored, so
// results do not depend on the platform's standard library.
class CounterRng {
 public:
  CounterRng(std::uint64_t key, std::uint64_t stream) noexcept;

  std::uint64_t next_u64() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t stream() const noexcept { return stream_; }
  // Number of 64-bit words drawn so far.
  std::uint64_t position() const noexcept { return position_; }
  void seek(std::uint64_t position) noexcept;

 private:
  std::array<std::uint32_t, 4> block(std::uint64_t counter) const noexcept;

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t position_ = 0;
  std::array<std::uint32_t, 4> cache_{};
  std::uint64_t cached_block_ = ~std::uint64_t{0};
};

}  // namespace gfn
