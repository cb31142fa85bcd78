#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace heatest {

enum class NoisePurpose : std::uint32_t { Dynamic = 1, Static = 2, Auxiliary = 3 };

/// Identifies one reproducible noise stream: (master seed, trajectory, purpose).
/// Draws inside a stream are addressed by (step, index), so the numbers do not
/// depend on which thread produces them or in what order.
struct SeedSpec {
  std::uint64_t master = 0;
  std::uint64_t trajectory = 0;
  NoisePurpose purpose = NoisePurpose::Dynamic;

  SeedSpec with_purpose(NoisePurpose p) const { return {master, trajectory, p}; }
  SeedSpec with_trajectory(std::uint64_t t) const { return {master, t, purpose}; }
  bool operator==(const SeedSpec&) const = default;
};

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) noexcept;
};

/// Fills `out` with i.i.d. standard normals for row `step` of the stream.
/// Entry k depends only on (seed, step, k).
void fill_normals(const SeedSpec& seed, std::uint64_t step, std::span<double> out);

/// Single draw, identical to fill_normals(seed, step, out)[index].
double normal_at(const SeedSpec& seed, std::uint64_t step, std::uint64_t index);

}  // namespace heatest
