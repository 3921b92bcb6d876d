#include "qrf/clocks.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qrf {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double theta) {
  double w = std::fmod(theta, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  if (w >= kTwoPi * (1.0 - 1e-12)) w = 0.0;
  return w;
}
}  // namespace

const char* to_string(ClockModel model) {
  return model == ClockModel::Rotator ? "rotator" : "free-particle";
}

RotatorClockState::RotatorClockState(int jz, double omega,
                                     std::vector<complex> coefficients,
                                     double elapsed)
    : jz_(jz), omega_(omega), c_(std::move(coefficients)), elapsed_(elapsed) {
  if (jz_ < 0) throw Error(ErrorCode::InvalidArgument, "jz must be non-negative");
  if (!(omega_ > 0.0) || !std::isfinite(omega_))
    throw Error(ErrorCode::InvalidArgument, "rotator frequency must be positive");
  if (c_.size() != static_cast<std::size_t>(2 * jz_ + 1))
    throw Error(ErrorCode::InvalidArgument, "need 2 jz + 1 coefficients");
  double n = 0.0;
  for (const auto& c : c_) n += std::norm(c);
  if (std::abs(n - 1.0) > 1e-12)
    throw Error(ErrorCode::NotNormalized, "rotator coefficients are not normalized");
}

double RotatorClockState::mode_energy(int m) const noexcept {
  return kTwoPi * omega_ * m;
}

double RotatorClockState::density(double theta) const {
  complex s = 0.0;
  for (int m = -jz_; m <= jz_; ++m) s += coefficient(m) * std::polar(1.0, m * theta);
  return std::norm(s) / kTwoPi;
}

RotatorClockState rotator_init(int jz, double omega) {
  if (jz < 1) throw Error(ErrorCode::InvalidArgument, "rotator needs jz >= 1");
  const auto n = static_cast<std::size_t>(2 * jz + 1);
  return RotatorClockState(jz, omega,
                           std::vector<complex>(n, complex(1.0 / std::sqrt(double(n)), 0.0)));
}

RotatorClockState rotator_evolve_rest(const RotatorClockState& state, double t) {
  if (!std::isfinite(t)) throw Error(ErrorCode::NonFiniteSample, "evolution time is not finite");
  std::vector<complex> c(state.modes());
  for (int m = -state.jz(); m <= state.jz(); ++m) {
    const auto k = static_cast<std::size_t>(m + state.jz());
    // Reduce the phase mod 2 pi first so long times stay exact.
    const double phase = std::fmod(state.omega() * t * m, 1.0) * kTwoPi;
    c[k] = state.coefficients()[k] * std::polar(1.0, -phase);
  }
  return RotatorClockState(state.jz(), state.omega(), std::move(c), state.elapsed() + t);
}

Eigen::MatrixXcd angle_matrix(int jz, double center, int power) {
  if (power != 1 && power != 2)
    throw Error(ErrorCode::InvalidArgument, "angle_matrix supports powers 1 and 2");
  const Eigen::Index n = 2 * jz + 1;
  Eigen::MatrixXcd a(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index s = 0; s < n; ++s) {
      const auto k = static_cast<double>(s - r);  // m' - m
      const double sign = ((s - r) % 2 == 0) ? 1.0 : -1.0;
      complex v;
      if (s == r)
        v = power == 1 ? 0.0 : kPi * kPi / 3.0;
      else
        v = power == 1 ? complex(0.0, -sign / k) : complex(2.0 * sign / (k * k), 0.0);
      a(r, s) = v * std::polar(1.0, k * center);
    }
  }
  return a;
}

Eigen::VectorXd rotator_energies(int jz, double omega) {
  Eigen::VectorXd e(2 * jz + 1);
  for (int m = -jz; m <= jz; ++m) e[m + jz] = kTwoPi * omega * m;
  return e;
}

namespace {
Eigen::VectorXcd coeff_vector(const RotatorClockState& state) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(state.modes()));
  for (std::size_t k = 0; k < state.modes(); ++k) v[static_cast<Eigen::Index>(k)] = state.coefficients()[k];
  return v;
}
}  // namespace

double rotator_peak(const RotatorClockState& state) {
  const std::size_t samples = 64 * state.modes();
  const double step = kTwoPi / static_cast<double>(samples);
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double v = state.density(static_cast<double>(i) * step);
    if (v > best_val) {
      best_val = v;
      best = i;
    }
  }
  // Golden-section refinement inside the neighbouring samples.
  double lo = (static_cast<double>(best) - 1.0) * step;
  double hi = (static_cast<double>(best) + 1.0) * step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = state.density(x1), f2 = state.density(x2);
  for (int it = 0; it < 100 && hi - lo > 1e-14; ++it) {
    if (f1 < f2) {
      lo = x1; x1 = x2; f1 = f2;
      x2 = lo + g * (hi - lo); f2 = state.density(x2);
    } else {
      hi = x2; x2 = x1; f2 = f1;
      x1 = hi - g * (hi - lo); f1 = state.density(x1);
    }
  }
  return wrap_angle(0.5 * (lo + hi));
}

AngleMoments angle_moments(const RotatorClockState& state, double center) {
  const Eigen::VectorXcd c = coeff_vector(state);
  const double u1 = (c.adjoint() * angle_matrix(state.jz(), center, 1) * c)(0).real();
  const double u2 = (c.adjoint() * angle_matrix(state.jz(), center, 2) * c)(0).real();
  return {center, center + u1, std::max(u2 - u1 * u1, 0.0)};
}

ClockReadout rotator_read(const RotatorClockState& state) {
  const double peak = rotator_peak(state);
  const AngleMoments mom = angle_moments(state, peak);
  const double w = kTwoPi * state.omega();
  ClockReadout r;
  r.model = ClockModel::Rotator;
  r.mean = wrap_angle(mom.mean) / w;
  r.dispersion = mom.variance / (w * w);
  r.wrapped = state.elapsed() >= state.period();
  return r;
}

double rotator_main_lobe_dispersion(const RotatorClockState& state) {
  const double peak = rotator_peak(state);
  const double half = kTwoPi / static_cast<double>(state.modes());
  const UniformGrid grid(-half, half, 4001);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = grid[i];
    const double w = grid.weight(i) * state.density(peak + u);
    s0 += w;
    s1 += w * u;
    s2 += w * u * u;
  }
  const double mean = s1 / s0;
  const double var = s2 / s0 - mean * mean;
  const double om = kTwoPi * state.omega();
  return var / (om * om);
}

//----------------------------------------------------------------------------
FreeClockState::FreeClockState(double ma_, double mb_, double pbar_, double a_)
    : ma(ma_), mb(mb_), mu(0.0), pbar(pbar_), a(a_) {
  if (!(ma > 0.0) || !(mb > 0.0))
    throw Error(ErrorCode::InvalidArgument, "free clock masses must be positive");
  if (!(a > 0.0)) throw Error(ErrorCode::NonPositiveWidth, "free clock a_x must be positive");
  if (pbar == 0.0) throw Error(ErrorCode::ZeroMeanMomentum, "free clock needs pbar != 0");
  mu = 1.0 / (1.0 / ma + 1.0 / mb);
}

WavePacket freeclock_packet(const FreeClockState& state, std::size_t points) {
  return make_gaussian(state.pbar, state.momentum_width(), state.mu, points);
}

FreeClockMoments freeclock_moments(const WavePacket& packet) {
  const auto& grid = packet.grid();
  const double h = grid.spacing();
  const auto psi = packet.amplitudes();
  std::vector<complex> ppsi(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) ppsi[k] = grid[k] * psi[k];
  const auto dpsi = derivative(psi, h);
  const auto dppsi = derivative(ppsi, h);
  const complex i_unit(0.0, 1.0);
  complex xp = 0.0, px = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double w = grid.weight(k);
    xp += std::conj(psi[k]) * i_unit * dppsi[k] * w;
    px += std::conj(psi[k]) * grid[k] * i_unit * dpsi[k] * w;
  }
  FreeClockMoments m{};
  m.mean_p = expectation(packet, [](double p) { return p; });
  m.var_p = variance(packet, [](double p) { return p; });
  m.mean_x = position_expectation(packet);
  m.var_x = position_variance(packet);
  m.anti_xp = (xp + px).real();
  return m;
}

ClockReadout freeclock_read(const WavePacket& packet, const FreeClockState& state,
                            double t) {
  if (state.pbar == 0.0)
    throw Error(ErrorCode::ZeroMeanMomentum, "free clock needs pbar != 0");
  const auto& meta = packet.meta();
  const double w = state.momentum_width();
  if (std::abs(meta.center - state.pbar) > 1e-9 * std::max(1.0, std::abs(state.pbar)) ||
      std::abs(meta.width - w) > 1e-9 * w) {
    throw Error(ErrorCode::ClockModelMismatch, "packet does not match the free clock parameters");
  }
  const FreeClockMoments m = freeclock_moments(packet);
  const double pb = state.pbar;
  ClockReadout r;
  r.model = ClockModel::FreeParticle;
  r.mean = (state.mu * m.mean_x + m.mean_p * t) / pb;
  r.dispersion = (state.mu * state.mu * m.var_x + t * t * m.var_p +
                  state.mu * t * (m.anti_xp - 2.0 * m.mean_x * m.mean_p)) /
                 (pb * pb);
  r.dispersion = std::max(r.dispersion, 0.0);
  return r;
}

}  // namespace qrf
