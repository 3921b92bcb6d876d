#include "qrf/relkin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qrf {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double energy(double m, double p) { return std::sqrt(m * m + p * p); }

// sqrt(m^2 + p^2) - m without cancellation.
double kinetic(double m, double p) { return p * p / (energy(m, p) + m); }

const RotatorClockState& rotator_of(const RelClockSystem& sys) {
  if (!sys.is_rotator())
    throw Error(ErrorCode::ClockModelMismatch, "operation needs a rotator clock");
  return std::get<RotatorClockState>(sys.clock());
}

const FreeClockState& freeclock_of(const RelClockSystem& sys) {
  if (sys.is_rotator())
    throw Error(ErrorCode::ClockModelMismatch, "operation needs a free-particle clock");
  return std::get<FreeClockState>(sys.clock());
}

void check_tau(double tau0) {
  if (!(tau0 >= 0.0) || !std::isfinite(tau0))
    throw Error(ErrorCode::InvalidArgument, "observer time must be finite and >= 0");
}
}  // namespace

double time_boost(double p, double mass) {
  if (!(mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "time_boost needs m > 0");
  return mass / energy(mass, p);
}

double time_boost_mass_slope(double p, double mass) {
  const double e = energy(mass, p);
  return p * p / (e * e * e);
}

//----------------------------------------------------------------------------
RelClockSystem::RelClockSystem(double rest_mass, InternalClock clock, WavePacket external)
    : rest_mass_(rest_mass), clock_(std::move(clock)), external_(std::move(external)), alpha_(0.0) {
  if (!(rest_mass_ > 0.0) || !std::isfinite(rest_mass_))
    throw Error(ErrorCode::InvalidArgument, "constituent rest mass must be positive");
  if (const auto* rot = std::get_if<RotatorClockState>(&clock_)) {
    double h2 = 0.0;
    for (int m = -rot->jz(); m <= rot->jz(); ++m) {
      const double w = std::norm(rot->coefficient(m));
      if (w > 0.0 && !(rest_mass_ + rot->mode_energy(m) > 0.0))
        throw Error(ErrorCode::InvalidArgument, "mass operator m' + H_c is not positive on a populated mode");
      h2 += w * rot->mode_energy(m) * rot->mode_energy(m);
    }
    alpha_ = std::sqrt(h2) / rest_mass_;
  } else {
    const auto& fc = std::get<FreeClockState>(clock_);
    const WavePacket px = freeclock_packet(fc);
    const double h2 = expectation(px, [mu = fc.mu](double p) {
      const double h = p * p / (2.0 * mu);
      return h * h;
    });
    alpha_ = std::sqrt(h2) / rest_mass_;
  }
}

//----------------------------------------------------------------------------
TimeOperatorStats proper_time_stats_rotator(const RelClockSystem& sys, double tau0) {
  const RotatorClockState& clock = rotator_of(sys);
  check_tau(tau0);
  const WavePacket& phi = sys.external();
  const double mp = sys.rest_mass();
  const int jz = clock.jz();
  const double w = kTwoPi * clock.omega();

  // Per-mode packet averages of B and B^2.
  const auto n = static_cast<Eigen::Index>(clock.modes());
  Eigen::VectorXd b1(n), b2(n);
  for (int m = -jz; m <= jz; ++m) {
    const double mass = mp + clock.mode_energy(m);
    b1[m + jz] = expectation(phi, [mass](double p) { return time_boost(p, mass); });
    b2[m + jz] = expectation(phi, [mass](double p) { const double b = time_boost(p, mass); return b * b; });
  }
  Eigen::VectorXcd c(n);
  for (int m = -jz; m <= jz; ++m) c[m + jz] = clock.coefficient(m);
  const Eigen::VectorXd weights = c.cwiseAbs2();
  const double bbar = weights.dot(b1);
  const double bsq = weights.dot(b2);

  // theta(0): angle observable on the initial state, branch centred at 0.
  const Eigen::MatrixXcd theta = angle_matrix(jz, 0.0, 1);
  const Eigen::MatrixXcd theta2 = angle_matrix(jz, 0.0, 2);
  const double th = (c.adjoint() * theta * c)(0).real();
  const double th2 = (c.adjoint() * theta2 * c)(0).real();

  // First order in H_c: {B, theta} ~ 2 B(m') theta + dB/dm {H_c, theta}.
  const double b_rest = expectation(phi, [mp](double p) { return time_boost(p, mp); });
  const double slope = expectation(phi, [mp](double p) { return time_boost_mass_slope(p, mp); });
  const Eigen::VectorXd e = rotator_energies(jz, clock.omega());
  complex anti_h = 0.0;
  complex anti_b = 0.0;
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index s = 0; s < n; ++s) {
      const complex amp = std::conj(c[r]) * theta(r, s) * c[s];
      anti_h += amp * (e[r] + e[s]);
      anti_b += amp * (b1[r] + b1[s]);
    }

  TimeOperatorStats st;
  st.model = ClockModel::Rotator;
  st.tau0 = tau0;
  st.mean_boost = bbar;
  st.mean = bbar * tau0 + th / w;
  st.d_b2 = std::max(bsq - bbar * bbar, 0.0);
  st.d0 = std::max(th2 - th * th, 0.0) / (w * w);
  st.g2 = (2.0 * b_rest * th + slope * anti_h.real() - 2.0 * bbar * th) / w;
  st.g2_exact = (anti_b.real() - 2.0 * bbar * th) / w;
  st.dispersion = std::max(st.assembled(), 0.0);
  return st;
}

double rotator_dispersion_direct(const RelClockSystem& sys, double tau0) {
  const RotatorClockState& clock = rotator_of(sys);
  const WavePacket& phi = sys.external();
  const int jz = clock.jz();
  const auto n = static_cast<Eigen::Index>(clock.modes());
  const double w = kTwoPi * clock.omega();
  const Eigen::MatrixXcd theta = angle_matrix(jz, 0.0, 1);
  const Eigen::MatrixXcd theta2 = angle_matrix(jz, 0.0, 2);
  Eigen::VectorXcd c(n);
  for (int m = -jz; m <= jz; ++m) c[m + jz] = clock.coefficient(m);

  // tau = B tau0 (diagonal in p and m) + I_p x Theta / w. Sum over p points
  // of the per-point mode expectations.
  const auto& grid = phi.grid();
  const Eigen::VectorXd masses = Eigen::VectorXd::Constant(n, sys.rest_mass()) + rotator_energies(jz, clock.omega());
  double first = 0.0, second = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const double wp = std::norm(phi[i]) * grid.weight(i);
    if (wp == 0.0) continue;
    Eigen::VectorXd b(n);
    for (Eigen::Index k = 0; k < n; ++k) b[k] = time_boost(grid[i], masses[k]);
    // <c| (B t + T/w)^2 |c> = t^2 <B^2> + t <{B, T}> / w + <T^2> / w^2
    complex cross = 0.0;
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index s = 0; s < n; ++s)
        cross += std::conj(c[r]) * theta(r, s) * c[s] * (b[r] + b[s]);
    double bb = 0.0, b1 = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
      bb += std::norm(c[k]) * b[k] * b[k];
      b1 += std::norm(c[k]) * b[k];
    }
    const double t1 = (c.adjoint() * theta * c)(0).real();
    const double t2 = (c.adjoint() * theta2 * c)(0).real();
    first += wp * (b1 * tau0 + t1 / w);
    second += wp * (bb * tau0 * tau0 + cross.real() * tau0 / w + t2 / (w * w));
  }
  return std::max(second - first * first, 0.0);
}

TimeOperatorStats proper_time_stats_freeclock(const RelClockSystem& sys, double tau0,
                                              const std::optional<WavePacket>& clock_packet) {
  const FreeClockState& fc = freeclock_of(sys);
  check_tau(tau0);
  if (fc.pbar == 0.0) throw Error(ErrorCode::ZeroMeanMomentum, "free clock needs pbar != 0");
  const WavePacket px = clock_packet ? *clock_packet : freeclock_packet(fc);
  const FreeClockMoments mom = freeclock_moments(px);
  const WavePacket& phi = sys.external();
  const double mp = sys.rest_mass();
  const double bbar = expectation(phi, [mp](double p) { return time_boost(p, mp); });
  const double bsq = expectation(phi, [mp](double p) { const double b = time_boost(p, mp); return b * b; });
  const double pb = fc.pbar;
  const double px2 = mom.var_p + mom.mean_p * mom.mean_p;

  TimeOperatorStats st;
  st.model = ClockModel::FreeParticle;
  st.tau0 = tau0;
  st.mean_boost = bbar;
  st.mean = (mom.mean_p * bbar * tau0 + fc.mu * mom.mean_x) / pb;
  st.d_b2 = std::max((px2 * bsq - mom.mean_p * mom.mean_p * bbar * bbar) / (pb * pb), 0.0);
  st.d0 = fc.mu * fc.mu * mom.var_x / (pb * pb);
  st.g2 = fc.mu * bbar * (mom.anti_xp - 2.0 * mom.mean_x * mom.mean_p) / (pb * pb);
  st.g2_exact = st.g2;
  st.d_x = st.d0 + mom.var_p / (mom.mean_p * mom.mean_p) * bbar * bbar * tau0 * tau0;
  st.dispersion = std::max(st.assembled(), 0.0);
  return st;
}

//----------------------------------------------------------------------------
double EntangledClockState::density(double theta) const {
  double rho = 0.0;
  for (const auto& m : modes) rho += std::norm(m.weight) * m.clock.density(theta);
  return rho;
}

std::vector<double> EntangledClockState::marginal() const {
  std::vector<double> out;
  out.reserve(modes.size());
  for (const auto& m : modes) out.push_back(std::norm(m.weight));
  return out;
}

EntangledClockState boosted_evolve(const std::vector<MomentumMode>& modes,
                                   const RotatorClockState& clock, double rest_mass,
                                   double tau0) {
  check_tau(tau0);
  if (modes.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one momentum mode");
  double norm = 0.0;
  for (const auto& m : modes) norm += std::norm(m.weight);
  if (std::abs(norm - 1.0) > 1e-9)
    throw Error(ErrorCode::NotNormalized, "mode weights must satisfy sum |c_l|^2 = 1");
  EntangledClockState out;
  out.tau0 = tau0;
  out.modes.reserve(modes.size());
  for (const auto& m : modes) {
    const double b = time_boost(m.momentum, rest_mass);
    const double e = energy(rest_mass, m.momentum);
    out.modes.push_back({m.momentum, m.weight, b, std::polar(1.0, -e * tau0),
                         rotator_evolve_rest(clock, b * tau0)});
  }
  return out;
}

EntangledClockState boosted_evolve(const RelClockSystem& sys, double tau0) {
  const RotatorClockState& clock = rotator_of(sys);
  const WavePacket& phi = sys.external();
  std::vector<MomentumMode> modes;
  modes.reserve(phi.size());
  double norm = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    const complex c = phi[i] * std::sqrt(phi.grid().weight(i));
    modes.push_back({phi.grid()[i], c});
    norm += std::norm(c);
  }
  for (auto& m : modes) m.weight /= std::sqrt(norm);
  return boosted_evolve(modes, clock, sys.rest_mass(), tau0);
}

std::vector<double> density_peaks(const std::function<double(double)>& density,
                                  double threshold, std::size_t samples) {
  if (samples < 8) throw Error(ErrorCode::InvalidArgument, "too few samples for peak search");
  const double step = kTwoPi / static_cast<double>(samples);
  std::vector<double> v(samples);
  double vmax = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    v[i] = density(static_cast<double>(i) * step);
    vmax = std::max(vmax, v[i]);
  }
  std::vector<double> peaks;
  for (std::size_t i = 0; i < samples; ++i) {
    const double prev = v[(i + samples - 1) % samples];
    const double next = v[(i + 1) % samples];
    if (!(v[i] > prev && v[i] >= next) || v[i] < threshold * vmax) continue;
    // Parabolic refinement through the three samples.
    const double denom = prev - 2.0 * v[i] + next;
    double offset = denom != 0.0 ? 0.5 * (prev - next) / denom : 0.0;
    offset = std::clamp(offset, -1.0, 1.0);
    double theta = (static_cast<double>(i) + offset) * step;
    theta = std::fmod(theta + kTwoPi, kTwoPi);
    peaks.push_back(theta);
  }
  std::sort(peaks.begin(), peaks.end());
  return peaks;
}

//----------------------------------------------------------------------------
KinematicPoint kinematics_point(double m1, double m2, double p1, double p2) {
  KinematicPoint k;
  k.p1 = p1;
  k.p2 = p2;
  k.e1 = energy(m1, p1);
  k.e2 = energy(m2, p2);
  k.p12 = (k.e1 * p2 - k.e2 * p1) / m1;
  k.e12 = energy(m2, k.p12);
  k.es = m1 + k.e12;
  const double et = k.e1 + k.e2;
  const double pt = p1 + p2;
  k.s = std::sqrt((et - pt) * (et + pt));
  k.q12 = m1 * k.p12 / k.s;
  k.beta1 = p1 / k.e1;
  return k;
}

Kinematics3 kinematics_point(double m1, double m2, const Eigen::Vector3d& p1,
                             const Eigen::Vector3d& p2) {
  const double e1 = std::sqrt(m1 * m1 + p1.squaredNorm());
  const double e2 = std::sqrt(m2 * m2 + p2.squaredNorm());
  const double pn = p1.norm();
  const Eigen::Vector3d n = pn > 0.0 ? Eigen::Vector3d(p1 / pn) : Eigen::Vector3d::Zero();
  Kinematics3 k;
  k.p12 = p2 + (n.dot(p2) * (e1 - m1) * n - e2 * p1) / m1;
  k.es = m1 + std::sqrt(m2 * m2 + k.p12.squaredNorm());
  const double et = e1 + e2;
  k.s = std::sqrt(et * et - (p1 + p2).squaredNorm());
  k.q12 = m1 * k.p12 / k.s;
  k.beta1 = p1 / e1;
  return k;
}

double TwoBodyKinematics::invariant_residual() const {
  double r = 0.0;
  for (const auto& k : points) r = std::max(r, std::abs(k.es * k.es - k.p12 * k.p12 - k.s * k.s));
  return r;
}

TwoBodyKinematics two_body_kinematics(double m1, const WavePacket& frame1, const WavePacket& g2) {
  if (!(m1 > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame mass must be positive");
  TwoBodyKinematics kin;
  kin.m1 = m1;
  kin.m2 = g2.mass();
  kin.p1 = frame1.meta().center;
  kin.points.reserve(g2.size());
  for (std::size_t i = 0; i < g2.size(); ++i)
    kin.points.push_back(kinematics_point(m1, kin.m2, kin.p1, g2.grid()[i]));
  return kin;
}

WavePacket boost_to_frame(const WavePacket& g2, double m1, double p1,
                          std::optional<MomentumGrid> grid) {
  if (!g2.shape())
    throw Error(ErrorCode::InvalidArgument, "boost_to_frame needs a packet with a shape");
  const double m2 = g2.mass();
  const double e1 = energy(m1, p1);
  if (!grid) {
    const auto lo = kinematics_point(m1, m2, p1, g2.grid().min());
    const auto hi = kinematics_point(m1, m2, p1, g2.grid().max());
    grid = MomentumGrid(lo.p12, hi.p12, g2.size());
  }
  const PacketShape& phi = g2.shape();
  PacketShape shape = [phi, m1, m2, p1, e1](double p12) {
    const double e12 = energy(m2, p12);
    const double p2 = (e1 * p12 + e12 * p1) / m1;
    const double e2 = energy(m2, p2);
    return std::sqrt(e2 / e12) * phi(p2);
  };
  std::vector<complex> amps(grid->size());
  for (std::size_t i = 0; i < amps.size(); ++i) amps[i] = shape((*grid)[i]);
  PacketMeta meta{kinematics_point(m1, m2, p1, g2.meta().center).p12, g2.meta().width};
  // The map is norm preserving; renormalize only the quadrature residue.
  return WavePacket::normalized(*grid, std::move(amps), m2, meta, std::move(shape));
}

WavePacket evolve_in_frame(double m1, const WavePacket& state, double tau1) {
  const double m2 = state.mass();
  return evolve_free(state, [m1, m2](double p) { return m1 + energy(m2, p); }, tau1);
}

double kg_square_check(double m1, const WavePacket& state) {
  const double m2 = state.mass();
  double r = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) {
    const double p = state.grid()[i];
    const double h = m1 + energy(m2, p);
    const double lhs = (h - m1) * (h - m1);
    const double rhs = m2 * m2 + p * p;
    r = std::max(r, std::abs((lhs - rhs) * state[i]));
  }
  return r;
}

double ClusterHamiltonian::operator()(double s23, double p23) const {
  return m1 + std::sqrt(s23 * s23 + p23 * p23);
}

double pair_invariant_mass(double m2, double p2, double m3, double p3) {
  const double et = energy(m2, p2) + energy(m3, p3);
  const double pt = p2 + p3;
  return std::sqrt((et - pt) * (et + pt));
}

std::vector<ClusterMode> cluster_hamiltonian(double m1, const WavePacket& g2,
                                             const std::optional<WavePacket>& g3) {
  const ClusterHamiltonian h{m1};
  std::vector<ClusterMode> out;
  if (!g3) {
    out.reserve(g2.size());
    for (std::size_t i = 0; i < g2.size(); ++i) {
      const double p = g2.grid()[i];
      out.push_back({p, 0.0, g2.mass(), p, h(g2.mass(), p)});
    }
    return out;
  }
  out.reserve(g2.size() * g3->size());
  for (std::size_t i = 0; i < g2.size(); ++i)
    for (std::size_t j = 0; j < g3->size(); ++j) {
      const double p2 = g2.grid()[i], p3 = g3->grid()[j];
      const double s = pair_invariant_mass(g2.mass(), p2, g3->mass(), p3);
      out.push_back({p2, p3, s, p2 + p3, h(s, p2 + p3)});
    }
  return out;
}

//----------------------------------------------------------------------------
namespace {
std::vector<complex> nw_apply(const UniformGrid& grid, std::span<const complex> psi, double mass,
                              const std::vector<complex>& dpsi) {
  const complex i_unit(0.0, 1.0);
  std::vector<complex> out(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double p = grid[k];
    const double e2 = mass * mass + p * p;
    out[k] = i_unit * dpsi[k] - i_unit * p / (2.0 * e2) * psi[k];
  }
  return out;
}

// Relative change of the derivative between steps h and 2h on even samples.
double stencil_error(std::span<const complex> psi, double h, const std::vector<complex>& dpsi) {
  std::vector<complex> coarse;
  coarse.reserve(psi.size() / 2 + 1);
  for (std::size_t k = 0; k < psi.size(); k += 2) coarse.push_back(psi[k]);
  if (coarse.size() < 5) return std::numeric_limits<double>::infinity();
  const auto d2 = derivative(coarse, 2.0 * h);
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < d2.size(); ++j) {
    num += std::norm(d2[j] - dpsi[2 * j]);
    den += std::norm(dpsi[2 * j]);
  }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}
}  // namespace

NewtonWignerResult newton_wigner_x(const WavePacket& state) {
  const auto& grid = state.grid();
  const double m = state.mass();
  std::vector<complex> psi(state.size());
  for (std::size_t k = 0; k < psi.size(); ++k) psi[k] = std::sqrt(energy(m, grid[k])) * state[k];
  const auto dpsi = derivative(psi, grid.spacing());
  NewtonWignerResult r;
  r.stencil_error = stencil_error(psi, grid.spacing(), dpsi);
  if (r.stencil_error > 0.01) {
    std::ostringstream os;
    os << "derivative stencil error estimate " << r.stencil_error << " exceeds 1%";
    throw Error(ErrorCode::RoughState, os.str());
  }
  const auto xpsi = nw_apply(grid, psi, m, dpsi);
  complex sum = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k)
    sum += std::conj(psi[k]) * xpsi[k] * grid.weight(k) / energy(m, grid[k]);
  r.mean = sum.real();
  r.imaginary = sum.imag();
  return r;
}

double nw_commutator_residual(const WavePacket& state) {
  const auto& grid = state.grid();
  const double m = state.mass();
  const double h = grid.spacing();
  const auto psi = state.amplitudes();
  std::vector<complex> ppsi(psi.size());
  for (std::size_t k = 0; k < psi.size(); ++k) ppsi[k] = grid[k] * psi[k];
  const auto x_ppsi = nw_apply(grid, ppsi, m, derivative(ppsi, h));
  const auto x_psi = nw_apply(grid, psi, m, derivative(psi, h));
  const complex i_unit(0.0, 1.0);
  double r = 0.0, scale = 0.0;
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const complex comm = x_ppsi[k] - grid[k] * x_psi[k];
    r = std::max(r, std::abs(comm - i_unit * psi[k]));
    scale = std::max(scale, std::abs(psi[k]));
  }
  return r / scale;
}

WavePacket frame_to_frame(const WavePacket& state, double m1, double m2, double tau1,
                          double tau2) {
  if (!(m1 > 0.0) || !(m2 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "frame masses must be positive");
  const auto& g = state.grid();
  const std::size_t n = state.size();
  const double k = m1 / m2;
  const MomentumGrid out_grid(-k * g.max(), -k * g.min(), n);
  const double amp = std::sqrt(m2 / m1);
  std::vector<complex> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = n - 1 - i;
    const double p12 = g[j];
    const double p21 = -k * p12;
    const double h1 = m1 + energy(m2, p12);
    const double h2 = m2 + energy(m1, p21);
    out[i] = amp * state[j] * std::polar(1.0, h1 * tau1 - h2 * tau2);
  }
  PacketShape shape;
  if (state.shape()) {
    shape = [inner = state.shape(), k, amp, m1, m2, tau1, tau2](double p21) {
      const double p12 = -p21 / k;
      const double phase = (m1 + energy(m2, p12)) * tau1 - (m2 + energy(m1, p21)) * tau2;
      return amp * inner(p12) * std::polar(1.0, phase);
    };
  }
  PacketMeta meta{-k * state.meta().center, k * state.meta().width};
  return WavePacket(out_grid, std::move(out), m1, meta, std::move(shape));
}

//----------------------------------------------------------------------------
double mass_factor(double m1, double m2) { return (m1 + m2) / m1; }

namespace {
// p12 for the c.m. configuration with relative momentum q.
double p12_of_q(double m1, double m2, double q) {
  return q * (energy(m1, q) + energy(m2, q)) / m1;
}

double dp12_dq(double m1, double m2, double q) {
  const double e1 = energy(m1, q), e2 = energy(m2, q);
  return (e1 + e2 + q * q * (1.0 / e1 + 1.0 / e2)) / m1;
}

double q_of_p12(double m1, double m2, double p12, double guess) {
  double q = guess;
  for (int it = 0; it < 60; ++it) {
    const double f = p12_of_q(m1, m2, q) - p12;
    const double step = f / dp12_dq(m1, m2, q);
    q -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(q))) break;
  }
  return q;
}
}  // namespace

NonrelReport nonrel_limit_report(double m1, double m2, const std::vector<double>& betas,
                                 std::size_t points) {
  if (!(m1 > 0.0) || !(m2 > 0.0))
    throw Error(ErrorCode::InvalidArgument, "masses must be positive");
  NonrelReport rep;
  rep.m1 = m1;
  rep.m2 = m2;
  rep.km = mass_factor(m1, m2);
  const double mu = m1 * m2 / (m1 + m2);
  for (double beta : betas) {
    if (!(beta > 0.0) || beta > 0.1)
      throw Error(ErrorCode::InvalidArgument, "beta values must lie in (0, 0.1]");
    NonrelRow row;
    row.beta = beta;
    const double q = mu * beta;
    const double p12 = p12_of_q(m1, m2, q);
    row.h_ratio = kinetic(m2, p12) / (q * q / (2.0 * mu));

    // Relative packet in q with <x> = x0, carried to the p12 grid.
    const double sigma = 0.1 * q;
    const double x0 = 1.0 / sigma;
    const double inv = 1.0 / (4.0 * sigma * sigma);
    auto phi_q = [q, x0, inv](double qq) {
      const double d = qq - q;
      return std::exp(-d * d * inv) * std::polar(1.0, -qq * x0);
    };
    const MomentumGrid grid(p12_of_q(m1, m2, q - kGridSigmas * sigma),
                            p12_of_q(m1, m2, q + kGridSigmas * sigma), points);
    std::vector<complex> amps(points);
    double guess = q - kGridSigmas * sigma;
    for (std::size_t i = 0; i < points; ++i) {
      const double qq = q_of_p12(m1, m2, grid[i], guess);
      guess = qq;
      amps[i] = phi_q(qq) / std::sqrt(dp12_dq(m1, m2, qq));
    }
    const WavePacket packet = WavePacket::normalized(grid, std::move(amps), m2, {p12, sigma});
    row.x_ratio = newton_wigner_x(packet).mean / x0;
    row.h_residual = std::abs(row.h_ratio - rep.km);
    row.x_residual = std::abs(row.x_ratio - 1.0 / rep.km);
    rep.rows.push_back(row);
  }
  const double floor = 1e-12;
  rep.h_exact = !rep.rows.empty();
  for (const auto& r : rep.rows)
    if (r.h_residual > floor * rep.km) rep.h_exact = false;
  auto ratio = [floor](double a, double b, double scale) {
    if (a <= floor * scale && b <= floor * scale) return std::numeric_limits<double>::quiet_NaN();
    return a / b;
  };
  for (std::size_t i = 0; i + 1 < rep.rows.size(); ++i) {
    rep.h_ratio_of_residuals.push_back(ratio(rep.rows[i].h_residual, rep.rows[i + 1].h_residual, rep.km));
    rep.x_ratio_of_residuals.push_back(ratio(rep.rows[i].x_residual, rep.rows[i + 1].x_residual, 1.0 / rep.km));
  }
  return rep;
}

}  // namespace qrf
