#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "qrf/packets.hpp"

namespace qrf {

enum class ClockModel { Rotator, FreeParticle };

const char* to_string(ClockModel model);

// Rotator clock over modes m = -jz..jz, wave function
// phi(theta) = sum_m c_m e^{i m theta} / sqrt(2 pi). H_c = 2 pi omega m.
class RotatorClockState {
 public:
  RotatorClockState(int jz, double omega, std::vector<complex> coefficients,
                    double elapsed = 0.0);

  int jz() const noexcept { return jz_; }
  std::size_t modes() const noexcept { return c_.size(); }
  double omega() const noexcept { return omega_; }
  double period() const noexcept { return 1.0 / omega_; }
  // Rest time accumulated by rotator_evolve_rest.
  double elapsed() const noexcept { return elapsed_; }

  std::span<const complex> coefficients() const noexcept { return c_; }
  complex coefficient(int m) const { return c_.at(static_cast<std::size_t>(m + jz_)); }
  double mode_energy(int m) const noexcept;

  // |phi(theta)|^2, integrating to 1 over any 2 pi branch.
  double density(double theta) const;

 private:
  int jz_;
  double omega_;
  std::vector<complex> c_;
  double elapsed_;
};

RotatorClockState rotator_init(int jz, double omega);

// c_m -> c_m exp(-i 2 pi omega m t): the density translates by +2 pi omega t.
RotatorClockState rotator_evolve_rest(const RotatorClockState& state, double t);

struct ClockReadout {
  double mean = 0.0;
  double dispersion = 0.0;
  ClockModel model = ClockModel::Rotator;
  // Elapsed time is past one period, so `mean` is t mod T.
  bool wrapped = false;
};

// Matrix of u^power (power 1 or 2) in the mode basis, u = theta - center on the
// branch [center - pi, center + pi]. Exact, no quadrature.
Eigen::MatrixXcd angle_matrix(int jz, double center, int power);

// diag(2 pi omega m).
Eigen::VectorXd rotator_energies(int jz, double omega);

// Angle of the density maximum in [0, 2 pi).
double rotator_peak(const RotatorClockState& state);

struct AngleMoments {
  double center = 0.0;  // branch center
  double mean = 0.0;    // <theta> on that branch
  double variance = 0.0;
};

AngleMoments angle_moments(const RotatorClockState& state, double center);

// Mean <theta>/(2 pi omega) on the branch centred at the peak, dispersion
// Var(theta)/(2 pi omega)^2.
ClockReadout rotator_read(const RotatorClockState& state);

// Variance of theta restricted to (and renormalized on) the central lobe
// |theta - peak| < 2 pi / N, in time units. Diagnostic only.
double rotator_main_lobe_dispersion(const RotatorClockState& state);

//----------------------------------------------------------------------------
// Free-particle clock: a particle of reduced mass mu_ab leaves the clock with
// momentum packet phi(p) ~ exp(-a^2 (p - pbar)^2) and t = mu x / pbar.
struct FreeClockState {
  double ma;
  double mb;
  double mu;
  double pbar;
  double a;

  FreeClockState(double ma, double mb, double pbar, double a);

  double momentum_width() const noexcept { return 0.5 / a; }
};

WavePacket freeclock_packet(const FreeClockState& state,
                            std::size_t points = kDefaultGridPoints);

// Packet moments needed by the free clock and by the time operator.
struct FreeClockMoments {
  double mean_p;
  double var_p;
  double mean_x;
  double var_x;
  double anti_xp;  // <{x, p}>
};

FreeClockMoments freeclock_moments(const WavePacket& packet);

// Throws ZeroMeanMomentum for pbar = 0 and ClockModelMismatch when the packet
// does not carry the state's (pbar, 1/2a) parameters.
ClockReadout freeclock_read(const WavePacket& packet, const FreeClockState& state,
                            double t);

}  // namespace qrf
