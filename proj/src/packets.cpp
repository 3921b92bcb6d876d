#include "qrf/packets.hpp"

#include <algorithm>
#include <sstream>

namespace qrf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::GridTooNarrow: return "GridTooNarrow";
    case ErrorCode::NonPositiveWidth: return "NonPositiveWidth";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::ChartMismatch: return "ChartMismatch";
    case ErrorCode::BinsDoNotCover: return "BinsDoNotCover";
    case ErrorCode::ClockModelMismatch: return "ClockModelMismatch";
    case ErrorCode::ZeroMeanMomentum: return "ZeroMeanMomentum";
    case ErrorCode::RoughState: return "RoughState";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  return code != ErrorCode::ConfigError && code != ErrorCode::ParseError;
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what),
      code_(code) {}

//----------------------------------------------------------------------------
UniformGrid::UniformGrid(double min, double max, std::size_t points)
    : min_(min), max_(max), step_(0.0), points_(points) {
  if (!(std::isfinite(min) && std::isfinite(max)) || !(max > min))
    throw Error(ErrorCode::InvalidArgument, "grid extent must be finite with max > min");
  if (points < 3)
    throw Error(ErrorCode::InvalidArgument, "grid needs at least 3 points");
  step_ = (max - min) / static_cast<double>(points - 1);
}

UniformGrid UniformGrid::centered(double center, double half_width,
                                  std::size_t points) {
  return UniformGrid(center - half_width, center + half_width, points);
}

double UniformGrid::weight(std::size_t i) const noexcept {
  const std::size_t n = points_;
  const double h = step_;
  if (n % 2 == 1) {
    if (i == 0 || i + 1 == n) return h / 3.0;
    return (i % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
  }
  if (n == 4) {
    return (i == 0 || i == 3 ? 3.0 : 9.0) * h / 8.0;
  }
  // 3/8 rule on samples 0..3, 1/3 rule on samples 3..n-1.
  double w = 0.0;
  if (i <= 3) w += (i == 0 || i == 3 ? 3.0 : 9.0) * h / 8.0;
  if (i >= 3) {
    const std::size_t j = i - 3;
    const std::size_t m = n - 3;
    if (j == 0 || j + 1 == m)
      w += h / 3.0;
    else
      w += (j % 2 == 1 ? 4.0 : 2.0) * h / 3.0;
  }
  return w;
}

std::vector<double> UniformGrid::points() const {
  std::vector<double> out(points_);
  for (std::size_t i = 0; i < points_; ++i) out[i] = (*this)[i];
  return out;
}

std::vector<double> UniformGrid::weights() const {
  std::vector<double> out(points_);
  for (std::size_t i = 0; i < points_; ++i) out[i] = weight(i);
  return out;
}

UniformGrid UniformGrid::refined(std::size_t factor) const {
  return UniformGrid(min_, max_, (points_ - 1) * factor + 1);
}

MomentumGrid packet_grid(double center, double width, std::size_t points) {
  if (!(width > 0.0))
    throw Error(ErrorCode::NonPositiveWidth, "packet width must be positive");
  return UniformGrid::centered(center, kGridSigmas * width, points);
}

double delta_width(double center) {
  return std::max(1e-3 * std::abs(center), 1e-3);
}

//----------------------------------------------------------------------------
double grid_norm(const UniformGrid& grid, std::span<const complex> amplitudes) {
  double sum = 0.0;
  for (std::size_t i = 0; i < amplitudes.size(); ++i)
    sum += std::norm(amplitudes[i]) * grid.weight(i);
  return sum;
}

WavePacket::WavePacket(MomentumGrid grid, std::vector<complex> amplitudes,
                       double mass, PacketMeta meta, PacketShape shape)
    : grid_(grid),
      amplitudes_(std::move(amplitudes)),
      mass_(mass),
      meta_(meta),
      shape_(std::move(shape)) {
  if (amplitudes_.size() != grid_.size())
    throw Error(ErrorCode::InvalidArgument, "amplitude count does not match grid");
  if (!(mass_ > 0.0) || !std::isfinite(mass_))
    throw Error(ErrorCode::InvalidArgument, "packet mass must be positive");
  const double n = norm();
  if (!(std::abs(n - 1.0) <= 1e-9)) {
    std::ostringstream os;
    os << "packet norm " << n << " differs from 1";
    throw Error(ErrorCode::NotNormalized, os.str());
  }
}

WavePacket WavePacket::normalized(MomentumGrid grid,
                                  std::vector<complex> amplitudes, double mass,
                                  PacketMeta meta, PacketShape shape) {
  const double n = grid_norm(grid, amplitudes);
  if (!(n > 0.0) || !std::isfinite(n))
    throw Error(ErrorCode::NotNormalized, "amplitudes have zero or non-finite norm");
  const double scale = 1.0 / std::sqrt(n);
  for (auto& a : amplitudes) a *= scale;
  if (shape) shape = [inner = std::move(shape), scale](double p) { return scale * inner(p); };
  return WavePacket(grid, std::move(amplitudes), mass, meta, std::move(shape));
}

double WavePacket::norm() const { return grid_norm(grid_, amplitudes_); }

std::vector<double> WavePacket::probabilities() const {
  std::vector<double> out(amplitudes_.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::norm(amplitudes_[i]) * grid_.weight(i);
  return out;
}

ProductState::ProductState(std::vector<WavePacket> f,
                           std::optional<std::size_t> internal)
    : factors(std::move(f)), internal_body(internal) {
  if (factors.empty())
    throw Error(ErrorCode::InvalidArgument, "product state needs at least one factor");
  if (internal_body && *internal_body >= factors.size())
    throw Error(ErrorCode::InvalidArgument, "internal body index out of range");
}

WavePacket make_packet(const MomentumGrid& grid, PacketShape shape, double mass,
                       PacketMeta meta) {
  std::vector<complex> amps(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    amps[i] = shape(grid[i]);
    if (!std::isfinite(amps[i].real()) || !std::isfinite(amps[i].imag()))
      detail::throw_non_finite(grid[i]);
  }
  return WavePacket::normalized(grid, std::move(amps), mass, meta, std::move(shape));
}

WavePacket make_gaussian(const MomentumGrid& grid, double center, double width,
                         double mass) {
  if (!(width > 0.0))
    throw Error(ErrorCode::NonPositiveWidth, "packet width must be positive");
  // Relative slack absorbs rounding in grids built as center +- 6 width.
  const double reach = kGridSigmas * width * (1.0 - 1e-12);
  if (!grid.covers(center - reach, center + reach)) {
    std::ostringstream os;
    os << "grid [" << grid.min() << ", " << grid.max() << "] does not cover "
       << center << " +- " << kGridSigmas << " * " << width;
    throw Error(ErrorCode::GridTooNarrow, os.str());
  }
  const double inv = 1.0 / (4.0 * width * width);
  PacketShape shape = [center, inv](double p) {
    const double d = p - center;
    return complex(std::exp(-d * d * inv), 0.0);
  };
  return make_packet(grid, std::move(shape), mass, {center, width});
}

WavePacket make_gaussian(double center, double width, double mass,
                         std::size_t points) {
  return make_gaussian(packet_grid(center, width, points), center, width, mass);
}

WavePacket make_delta(double center, double mass, std::size_t points) {
  return make_gaussian(center, delta_width(center), mass, points);
}

namespace detail {
void throw_non_finite(double p) {
  std::ostringstream os;
  os << "integrand not finite at p = " << p;
  throw Error(ErrorCode::NonFiniteSample, os.str());
}
}  // namespace detail

//----------------------------------------------------------------------------
WavePacket evolve_free(const WavePacket& packet, const Dispersion& energy,
                       double t) {
  if (!std::isfinite(t))
    throw Error(ErrorCode::NonFiniteSample, "evolution time is not finite");
  const auto& grid = packet.grid();
  std::vector<complex> amps(packet.size());
  for (std::size_t i = 0; i < amps.size(); ++i) {
    const double phase = energy(grid[i]) * t;
    if (!std::isfinite(phase)) detail::throw_non_finite(grid[i]);
    amps[i] = packet[i] * std::polar(1.0, -phase);
  }
  PacketShape shape;
  if (packet.shape()) {
    shape = [inner = packet.shape(), energy, t](double p) {
      return inner(p) * std::polar(1.0, -energy(p) * t);
    };
  }
  return WavePacket(grid, std::move(amps), packet.mass(), packet.meta(),
                    std::move(shape));
}

Dispersion kgr_dispersion(double mass) {
  return [m2 = mass * mass](double p) { return std::sqrt(m2 + p * p); };
}

//----------------------------------------------------------------------------
std::vector<complex> derivative(std::span<const complex> f, double h) {
  const std::size_t n = f.size();
  if (n < 5) throw Error(ErrorCode::InvalidArgument, "derivative needs at least 5 samples");
  std::vector<complex> d(n);
  for (std::size_t i = 2; i + 2 < n; ++i)
    d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) / (12.0 * h);
  d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) / (12.0 * h);
  d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) / (12.0 * h);
  return d;
}

std::vector<complex> derivative_second_order(std::span<const complex> f, double h) {
  const std::size_t n = f.size();
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "derivative needs at least 3 samples");
  std::vector<complex> d(n);
  for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (f[i + 1] - f[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h);
  d[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * h);
  return d;
}

double position_expectation(const WavePacket& packet) {
  const auto& grid = packet.grid();
  const auto d = derivative(packet.amplitudes(), grid.spacing());
  const complex i_unit(0.0, 1.0);
  complex sum = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k)
    sum += std::conj(packet[k]) * i_unit * d[k] * grid.weight(k);
  return sum.real();
}

double position_variance(const WavePacket& packet) {
  const auto& grid = packet.grid();
  const auto d = derivative(packet.amplitudes(), grid.spacing());
  double second = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) second += std::norm(d[k]) * grid.weight(k);
  const double mean = position_expectation(packet);
  return std::max(second - mean * mean, 0.0);
}

}  // namespace qrf
