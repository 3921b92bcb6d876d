#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qrf/clocks.hpp"
#include "qrf/packets.hpp"
#include "qrf/relkin.hpp"

namespace qrf {

// Philox4x32-10. Draw i of stream s depends only on (key, s, i), so any
// partition of the sample range reproduces the same numbers.
class Philox {
 public:
  explicit Philox(std::uint64_t seed) noexcept;

  std::array<std::uint32_t, 4> block(std::uint64_t stream, std::uint64_t index) const noexcept;

  // Four uniforms in (0, 1) for sample `index` of `stream`.
  std::array<double, 4> uniforms(std::uint64_t stream, std::uint64_t index) const noexcept;

 private:
  std::array<std::uint32_t, 2> key_;
};

// Inverse-CDF sampler for a density tabulated on a uniform grid: piecewise
// constant on cells, cell mass from the trapezoid rule.
class TabulatedSampler {
 public:
  TabulatedSampler(const UniformGrid& grid, const std::vector<double>& density);

  double operator()(double u) const noexcept;

 private:
  double x0_;
  double h_;
  std::vector<double> cdf_;
};

TabulatedSampler packet_sampler(const WavePacket& packet);

// Angle density of the clock on [-pi, pi], tabulated on `points` nodes.
TabulatedSampler angle_sampler(const RotatorClockState& clock, std::size_t points = 1u << 14);

// Mode index k (m = k - jz) with probability |c_m|^2.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const std::vector<double>& weights);
  std::size_t operator()(double u) const noexcept;

 private:
  std::vector<double> cdf_;
};

struct MonteCarloEstimate {
  double tau0 = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double mean_stderr = 0.0;
  double variance_stderr = 0.0;
  std::size_t samples = 0;
};

// Two-pass mean and variance, stderr of the variance from the fourth
// central moment.
MonteCarloEstimate sample_moments(const std::vector<double>& values);

// tau2 = B(p, m' + E_m) tau0 + theta(0) / (2 pi omega), with p ~ |Phi|^2,
// m ~ |c_m|^2, theta(0) ~ initial clock density. Same draws for all tau0.
std::vector<MonteCarloEstimate> mc_rotator_dilation(const RelClockSystem& sys,
                                                    const std::vector<double>& tau0s,
                                                    std::size_t samples, std::uint64_t seed);

// tau2 = (p_x B / pbar) tau0 + mu x0 / pbar, with p ~ |Phi|^2, p_x ~ clock
// packet, x0 ~ N(0, a^2).
std::vector<MonteCarloEstimate> mc_freeclock_dilation(const RelClockSystem& sys,
                                                      const std::vector<double>& tau0s,
                                                      std::size_t samples, std::uint64_t seed);

// Quadratic least-squares fit c0 + c1 t + c2 t^2.
std::array<double, 3> fit_quadratic(const std::vector<double>& t, const std::vector<double>& y);

}  // namespace qrf
