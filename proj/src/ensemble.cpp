#include "qrf/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace qrf {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

// Uniform in (0, 1) from 32 bits.
double to_unit(std::uint32_t x) noexcept { return (static_cast<double>(x) + 0.5) * 0x1p-32; }

std::size_t bucket(const std::vector<double>& cdf, double u) {
  auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
  if (it == cdf.begin()) return 0;
  return std::min(static_cast<std::size_t>(it - cdf.begin()) - 1, cdf.size() - 2);
}
}  // namespace

Philox::Philox(std::uint64_t seed) noexcept
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

std::array<std::uint32_t, 4> Philox::block(std::uint64_t stream, std::uint64_t index) const noexcept {
  std::array<std::uint32_t, 4> c{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                                 static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::array<std::uint32_t, 2> k = key_;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

std::array<double, 4> Philox::uniforms(std::uint64_t stream, std::uint64_t index) const noexcept {
  const auto b = block(stream, index);
  return {to_unit(b[0]), to_unit(b[1]), to_unit(b[2]), to_unit(b[3])};
}

//----------------------------------------------------------------------------
TabulatedSampler::TabulatedSampler(const UniformGrid& grid, const std::vector<double>& density)
    : x0_(grid.min()), h_(grid.spacing()), cdf_(grid.size(), 0.0) {
  if (density.size() != grid.size())
    throw Error(ErrorCode::InvalidArgument, "density must have one value per grid point");
  for (std::size_t i = 1; i < grid.size(); ++i)
    cdf_[i] = cdf_[i - 1] + 0.5 * (density[i - 1] + density[i]) * h_;
  const double total = cdf_.back();
  if (!(total > 0.0)) throw Error(ErrorCode::NotNormalized, "density has zero mass");
  for (auto& c : cdf_) c /= total;
}

double TabulatedSampler::operator()(double u) const noexcept {
  const std::size_t i = bucket(cdf_, u);
  const double mass = cdf_[i + 1] - cdf_[i];
  const double frac = mass > 0.0 ? (u - cdf_[i]) / mass : 0.5;
  return x0_ + (static_cast<double>(i) + frac) * h_;
}

TabulatedSampler packet_sampler(const WavePacket& packet) {
  std::vector<double> d(packet.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(packet[i]);
  return TabulatedSampler(packet.grid(), d);
}

TabulatedSampler angle_sampler(const RotatorClockState& clock, std::size_t points) {
  const UniformGrid grid(-kPi, kPi, points + 1);
  std::vector<double> d(grid.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = clock.density(grid[i]);
  return TabulatedSampler(grid, d);
}

CategoricalSampler::CategoricalSampler(const std::vector<double>& weights) : cdf_(weights.size() + 1, 0.0) {
  for (std::size_t i = 0; i < weights.size(); ++i) cdf_[i + 1] = cdf_[i] + weights[i];
  const double total = cdf_.back();
  if (!(total > 0.0)) throw Error(ErrorCode::NotNormalized, "categorical weights sum to zero");
  for (auto& c : cdf_) c /= total;
}

std::size_t CategoricalSampler::operator()(double u) const noexcept { return bucket(cdf_, u); }

//----------------------------------------------------------------------------
MonteCarloEstimate sample_moments(const std::vector<double>& values) {
  MonteCarloEstimate e;
  e.samples = values.size();
  if (values.size() < 2) return e;
  const auto n = static_cast<double>(values.size());
  double s = 0.0;
  for (double v : values) s += v;
  e.mean = s / n;
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double d = v - e.mean;
    const double d2 = d * d;
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  e.variance = m2 * n / (n - 1.0);
  e.mean_stderr = std::sqrt(e.variance / n);
  e.variance_stderr = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  return e;
}

std::vector<MonteCarloEstimate> mc_rotator_dilation(const RelClockSystem& sys,
                                                    const std::vector<double>& tau0s,
                                                    std::size_t samples, std::uint64_t seed) {
  if (!sys.is_rotator()) throw Error(ErrorCode::ClockModelMismatch, "rotator Monte Carlo needs a rotator clock");
  const auto& clock = std::get<RotatorClockState>(sys.clock());
  const TabulatedSampler draw_p = packet_sampler(sys.external());
  const TabulatedSampler draw_theta = angle_sampler(clock);
  std::vector<double> w(clock.modes());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::norm(clock.coefficients()[k]);
  const CategoricalSampler draw_m(w);
  const Philox rng(seed);
  const double om = kTwoPi * clock.omega();

  std::vector<double> b(samples), th(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto u = rng.uniforms(0, i);
    const double p = draw_p(u[0]);
    const int m = static_cast<int>(draw_m(u[1])) - clock.jz();
    b[i] = time_boost(p, sys.rest_mass() + clock.mode_energy(m));
    th[i] = draw_theta(u[2]) / om;
  }
  std::vector<MonteCarloEstimate> out;
  std::vector<double> tau(samples);
  for (double t : tau0s) {
    for (std::size_t i = 0; i < samples; ++i) tau[i] = b[i] * t + th[i];
    auto e = sample_moments(tau);
    e.tau0 = t;
    out.push_back(e);
  }
  return out;
}

std::vector<MonteCarloEstimate> mc_freeclock_dilation(const RelClockSystem& sys,
                                                      const std::vector<double>& tau0s,
                                                      std::size_t samples, std::uint64_t seed) {
  if (sys.is_rotator()) throw Error(ErrorCode::ClockModelMismatch, "free-clock Monte Carlo needs a free clock");
  const auto& fc = std::get<FreeClockState>(sys.clock());
  const TabulatedSampler draw_p = packet_sampler(sys.external());
  const TabulatedSampler draw_px = packet_sampler(freeclock_packet(fc));
  const Philox rng(seed);

  std::vector<double> slope(samples), offset(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const auto u = rng.uniforms(0, i);
    const double p = draw_p(u[0]);
    const double px = draw_px(u[1]);
    // Box-Muller for x0 ~ N(0, a^2).
    const double x0 = fc.a * std::sqrt(-2.0 * std::log(u[2])) * std::cos(kTwoPi * u[3]);
    slope[i] = px * time_boost(p, sys.rest_mass()) / fc.pbar;
    offset[i] = fc.mu * x0 / fc.pbar;
  }
  std::vector<MonteCarloEstimate> out;
  std::vector<double> tau(samples);
  for (double t : tau0s) {
    for (std::size_t i = 0; i < samples; ++i) tau[i] = slope[i] * t + offset[i];
    auto e = sample_moments(tau);
    e.tau0 = t;
    out.push_back(e);
  }
  return out;
}

std::array<double, 3> fit_quadratic(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 3)
    throw Error(ErrorCode::InvalidArgument, "quadratic fit needs at least three points");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), 3);
  Eigen::VectorXd b(static_cast<Eigen::Index>(t.size()));
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    a(r, 0) = 1.0;
    a(r, 1) = t[i];
    a(r, 2) = t[i] * t[i];
    b[r] = y[i];
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  return {c[0], c[1], c[2]};
}

}  // namespace qrf
