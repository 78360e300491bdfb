#pragma once

#include <array>
#include <cstdint>
#include <initializer_list>

#include <Eigen/Dense>

namespace rcusum {

// Philox4x32-10 counter-based block cipher (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3").  Stateless: output is a pure function of
// (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter encrypt(Counter ctr, Key key) noexcept;
};

// Mixes a base seed with integer tags into a new 64-bit seed (SplitMix64
// finalizer chain).  Used to give each scenario / procedure its own key.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) noexcept;

// One independent substream of a seeded generator.  The Philox key is the
// 64-bit seed; the upper half of the 128-bit counter is the stream id and
// the lower half counts blocks, so distinct stream ids address disjoint
// counter ranges of the same keyed permutation.
class SeededStream {
 public:
  SeededStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on (0, 1), 53-bit resolution, never exactly 0 or 1.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  // Standard normal via Box-Muller.
  double normal() noexcept;
  void fill_normal(Eigen::Ref<Eigen::VectorXd> out) noexcept;

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int buffered_ = 0;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

// Stream-id namespaces: a simulation purpose tag in the top 16 bits, the
// trial / member index below.
enum class StreamDomain : std::uint16_t {
  arl = 1,
  delay = 2,
  truth = 3,
  verify = 4,
  baseline = 5,
  restart = 6,
  member = 7,
  sample = 8,
};

constexpr std::uint64_t stream_id(StreamDomain domain, std::uint64_t index) noexcept {
  return (static_cast<std::uint64_t>(domain) << 48) | (index & ((std::uint64_t{1} << 48) - 1));
}

}  // namespace rcusum
