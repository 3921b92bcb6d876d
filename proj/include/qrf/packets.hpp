#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "qrf/error.hpp"

namespace qrf {

using complex = std::complex<double>;

// Amplitude as a function of momentum. Packets built from a shape keep it so
// that exact variable substitutions (boosts, relabelings) can resample them.
using PacketShape = std::function<complex(double)>;

//----------------------------------------------------------------------------
// Uniform 1D sample axis with composite Simpson weights.
//
// An odd point count uses the classic 1-4-2-...-4-1 rule. An even count
// applies Simpson's 3/8 rule on the first three intervals and the 1/3 rule on
// the rest, so both parities are fourth order.
class UniformGrid {
 public:
  UniformGrid(double min, double max, std::size_t points);

  static UniformGrid centered(double center, double half_width,
                              std::size_t points);

  std::size_t size() const noexcept { return points_; }
  double min() const noexcept { return min_; }
  double max() const noexcept { return max_; }
  double spacing() const noexcept { return step_; }
  double operator[](std::size_t i) const noexcept {
    return i + 1 == points_ ? max_ : min_ + static_cast<double>(i) * step_;
  }

  // Simpson quadrature weight of sample i (includes the step).
  double weight(std::size_t i) const noexcept;
  std::vector<double> points() const;
  std::vector<double> weights() const;

  bool covers(double lo, double hi) const noexcept {
    return min_ <= lo && hi <= max_;
  }

  // Same extent, (points - 1) * factor + 1 samples.
  UniformGrid refined(std::size_t factor) const;

 private:
  double min_;
  double max_;
  double step_;
  std::size_t points_;
};

using MomentumGrid = UniformGrid;
using PositionGrid = UniformGrid;

inline constexpr std::size_t kDefaultGridPoints = 2048;
inline constexpr double kGridSigmas = 6.0;

// Grid spanning center +- kGridSigmas * width.
MomentumGrid packet_grid(double center, double width,
                         std::size_t points = kDefaultGridPoints);

// Width used for "sharp" packets: 1e-3 |center|, never below 1e-3.
double delta_width(double center);

struct PacketMeta {
  double center = 0.0;
  double width = 0.0;
};

//----------------------------------------------------------------------------
// Momentum-space amplitude of one object on a uniform grid. Normalized
// (Simpson sum of |amplitude|^2) within 1e-9; mass > 0.
class WavePacket {
 public:
  WavePacket(MomentumGrid grid, std::vector<complex> amplitudes, double mass,
             PacketMeta meta = {}, PacketShape shape = {});

  // Rescales the amplitudes to unit norm before construction.
  static WavePacket normalized(MomentumGrid grid,
                               std::vector<complex> amplitudes, double mass,
                               PacketMeta meta = {}, PacketShape shape = {});

  const MomentumGrid& grid() const noexcept { return grid_; }
  std::span<const complex> amplitudes() const noexcept { return amplitudes_; }
  complex operator[](std::size_t i) const noexcept { return amplitudes_[i]; }
  std::size_t size() const noexcept { return amplitudes_.size(); }
  double mass() const noexcept { return mass_; }
  const PacketMeta& meta() const noexcept { return meta_; }

  // Exact amplitude function, when known.
  const PacketShape& shape() const noexcept { return shape_; }

  double norm() const;

  // |amplitude_i|^2 * weight_i.
  std::vector<double> probabilities() const;

 private:
  MomentumGrid grid_;
  std::vector<complex> amplitudes_;
  double mass_;
  PacketMeta meta_;
  PacketShape shape_;
};

// Independent single-body factors. `internal_body` names the factor carrying
// an internal clock, if any; the clock itself lives with the caller.
struct ProductState {
  std::vector<WavePacket> factors;
  std::optional<std::size_t> internal_body;

  explicit ProductState(std::vector<WavePacket> f,
                        std::optional<std::size_t> internal = std::nullopt);
};

// Simpson norm of an amplitude array on a grid.
double grid_norm(const UniformGrid& grid, std::span<const complex> amplitudes);

// Samples a shape on the grid and normalizes it. The stored shape is rescaled
// by the same constant so it stays consistent with the samples.
WavePacket make_packet(const MomentumGrid& grid, PacketShape shape,
                       double mass, PacketMeta meta = {});

// Gaussian with |Phi|^2 of standard deviation `width` centered at `center`.
// Throws NonPositiveWidth or GridTooNarrow (grid must cover center +- 6 width).
WavePacket make_gaussian(const MomentumGrid& grid, double center, double width,
                         double mass);

// Gaussian on its own default grid.
WavePacket make_gaussian(double center, double width, double mass,
                         std::size_t points = kDefaultGridPoints);

// Sharp packet: Gaussian with delta_width(center).
WavePacket make_delta(double center, double mass,
                      std::size_t points = kDefaultGridPoints);

namespace detail {
[[noreturn]] void throw_non_finite(double p);
}

// Quadrature of f(p) |Phi(p)|^2. Returns double for real f, complex for
// complex f. Throws NonFiniteSample if f is not finite on a grid point.
template <class F>
auto expectation(const WavePacket& packet, F&& f) {
  using R = std::decay_t<std::invoke_result_t<F&, double>>;
  const auto& grid = packet.grid();
  R sum{};
  for (std::size_t i = 0; i < packet.size(); ++i) {
    const double p = grid[i];
    const R value = f(p);
    if constexpr (std::is_same_v<R, complex>) {
      if (!std::isfinite(value.real()) || !std::isfinite(value.imag()))
        detail::throw_non_finite(p);
    } else {
      if (!std::isfinite(value)) detail::throw_non_finite(p);
    }
    sum += value * (std::norm(packet[i]) * grid.weight(i));
  }
  return sum;
}

// <f^2> - <f>^2 for a real f, clamped at zero.
template <class F>
double variance(const WavePacket& packet, F&& f) {
  const double mean = expectation(packet, f);
  const double second =
      expectation(packet, [&f](double p) { const double v = f(p); return v * v; });
  const double var = second - mean * mean;
  return var > 0.0 ? var : 0.0;
}

using Dispersion = std::function<double(double)>;

// Phi(p) -> exp(-i E(p) t) Phi(p).
WavePacket evolve_free(const WavePacket& packet, const Dispersion& energy,
                       double t);

// E(p) = sqrt(m^2 + p^2) with the packet's mass.
Dispersion kgr_dispersion(double mass);

// Derivative of sampled amplitudes: 5-point central stencil inside, 4th-order
// one-sided stencils on the two outermost points at each end.
std::vector<complex> derivative(std::span<const complex> values, double step);

// Same stencil family at second order; used for stencil-error estimates.
std::vector<complex> derivative_second_order(std::span<const complex> values,
                                             double step);

// <x> with x = i d/dp, from the phase derivative of the amplitudes.
double position_expectation(const WavePacket& packet);

// <x^2> - <x>^2 with x = i d/dp.
double position_variance(const WavePacket& packet);

}  // namespace qrf
