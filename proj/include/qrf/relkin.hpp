#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qrf/clocks.hpp"
#include "qrf/packets.hpp"

namespace qrf {

// m / sqrt(m^2 + p^2).
double time_boost(double p, double mass);

// d B / d m at fixed p: p^2 / (m^2 + p^2)^{3/2}.
double time_boost_mass_slope(double p, double mass);

using InternalClock = std::variant<RotatorClockState, FreeClockState>;

// A moving frame: constituent mass m'_2, internal clock, external packet.
class RelClockSystem {
 public:
  RelClockSystem(double rest_mass, InternalClock clock, WavePacket external);

  double rest_mass() const noexcept { return rest_mass_; }
  const InternalClock& clock() const noexcept { return clock_; }
  const WavePacket& external() const noexcept { return external_; }
  bool is_rotator() const noexcept { return clock_.index() == 0; }

  // sqrt(<H_c^2>) / m'_2 on the initial internal state; for the free clock
  // H_c = p_x^2 / 2 mu_ab over the default free-clock packet.
  double alpha() const noexcept { return alpha_; }

 private:
  double rest_mass_;
  InternalClock clock_;
  WavePacket external_;
  double alpha_;
};

struct TimeOperatorStats {
  double tau0 = 0.0;
  double mean = 0.0;        // tau bar
  double dispersion = 0.0;  // D(B2) tau0^2 + G2 tau0 + D0
  double d_b2 = 0.0;
  double g2 = 0.0;
  double d0 = 0.0;
  double mean_boost = 0.0;  // B bar
  // Rotator: the cross term evaluated without the first-order mass expansion.
  double g2_exact = 0.0;
  // Free clock only.
  std::optional<double> d_x;
  ClockModel model = ClockModel::Rotator;

  double assembled() const noexcept { return d_b2 * tau0 * tau0 + g2 * tau0 + d0; }
};

// Joint moments of B(p, m'_2 + E_m) over |c_m|^2 |Phi(p)|^2, with the
// cross term assembled on the initial product state.
TimeOperatorStats proper_time_stats_rotator(const RelClockSystem& sys, double tau0);

// tau = (p_x B / pbar) tau0 + mu x(0) / pbar, B from m'_2 alone.
// `clock_packet` defaults to freeclock_packet(state).
TimeOperatorStats proper_time_stats_freeclock(
    const RelClockSystem& sys, double tau0,
    const std::optional<WavePacket>& clock_packet = std::nullopt);

// <tau^2> - <tau>^2 of the rotator time operator B tau0 + Theta / (2 pi omega)
// on the product state, using the exact Theta and Theta^2 mode matrices.
double rotator_dispersion_direct(const RelClockSystem& sys, double tau0);

//----------------------------------------------------------------------------
struct EntangledMode {
  double momentum = 0.0;
  complex weight;          // c_l
  double boost = 1.0;      // B0(p_l)
  complex external_phase;  // exp(-i E(p_l) tau0)
  RotatorClockState clock;
};

struct EntangledClockState {
  double tau0 = 0.0;
  std::vector<EntangledMode> modes;

  // Hand-angle density with the external modes traced out.
  double density(double theta) const;
  // |c_l|^2 per mode.
  std::vector<double> marginal() const;
};

struct MomentumMode {
  double momentum;
  complex weight;
};

// Each mode's clock runs for rest time B0(p_l) tau0; the external part picks
// up exp(-i E tau0), E = sqrt(m'^2 + p^2).
EntangledClockState boosted_evolve(const std::vector<MomentumMode>& modes,
                                   const RotatorClockState& clock,
                                   double rest_mass, double tau0);

// Modes taken from the external packet's grid (c_l = Phi(p_l) sqrt(w_l)).
// Throws ClockModelMismatch for a free clock.
EntangledClockState boosted_evolve(const RelClockSystem& sys, double tau0);

// Local maxima of the density above `threshold` times the global maximum,
// found on `samples` points and refined.
std::vector<double> density_peaks(const std::function<double(double)>& density,
                                  double threshold, std::size_t samples);

//----------------------------------------------------------------------------
struct KinematicPoint {
  double p1 = 0.0, p2 = 0.0;
  double e1 = 0.0, e2 = 0.0;
  double p12 = 0.0;  // G2 momentum in the F1 rest frame
  double e12 = 0.0;  // sqrt(m2^2 + p12^2)
  double es = 0.0;   // m1 + e12
  double s = 0.0;    // pair invariant mass
  double q12 = 0.0;  // m1 p12 / s
  double beta1 = 0.0;
};

KinematicPoint kinematics_point(double m1, double m2, double p1, double p2);

struct Kinematics3 {
  Eigen::Vector3d p12;
  double es;
  double s;
  Eigen::Vector3d q12;
  Eigen::Vector3d beta1;
};

// Full vector form p12 = p2 + [(n.p2)(E1 - m1) n - E2 p1] / m1.
Kinematics3 kinematics_point(double m1, double m2, const Eigen::Vector3d& p1,
                             const Eigen::Vector3d& p2);

// F1 is taken sharp at its packet center; one point per G2 grid sample.
struct TwoBodyKinematics {
  double m1 = 0.0;
  double m2 = 0.0;
  double p1 = 0.0;
  std::vector<KinematicPoint> points;

  // max |Es^2 - p12^2 - s^2| over the points.
  double invariant_residual() const;
};

TwoBodyKinematics two_body_kinematics(double m1, const WavePacket& frame1,
                                      const WavePacket& g2);

// G2 state resampled on a p12 grid through the exact inverse map
// p2 = (E1 p12 + E12 p1) / m1, with amplitude factor sqrt(E2 / E12).
// Requires g2.shape(). The grid defaults to the image of g2's grid.
WavePacket boost_to_frame(const WavePacket& g2, double m1, double p1,
                          std::optional<MomentumGrid> grid = std::nullopt);

// exp(-i [m1 + sqrt(m2^2 + p12^2)] tau1); m2 is the state's mass.
WavePacket evolve_in_frame(double m1, const WavePacket& state, double tau1);

// max |((H - m1)^2 - (m2^2 + p^2)) psi| over the grid.
double kg_square_check(double m1, const WavePacket& state);

// H = m1 + sqrt(s23^2 + p23^2).
struct ClusterHamiltonian {
  double m1;
  double operator()(double s23, double p23) const;
};

double pair_invariant_mass(double m2, double p2, double m3, double p3);

struct ClusterMode {
  double p2, p3;
  double s23, p23;
  double energy;
};

// Evaluated on every (p2, p3) grid pair; G3 absent gives s23 = m2.
std::vector<ClusterMode> cluster_hamiltonian(double m1, const WavePacket& g2,
                                             const std::optional<WavePacket>& g3);

//----------------------------------------------------------------------------
struct NewtonWignerResult {
  double mean = 0.0;
  double imaginary = 0.0;
  double stencil_error = 0.0;  // relative, h vs 2h
};

// <x> with x = i d/dp - i p / (2 E^2) acting on psi = sqrt(E) Phi in the
// dp / E measure. E uses the state's mass. Throws RoughState when the
// derivative changes by more than 1% between step h and 2h.
NewtonWignerResult newton_wigner_x(const WavePacket& state);

// max |[x, p] psi - i psi| / max |psi| on the grid.
double nw_commutator_residual(const WavePacket& state);

// W2(tau2) U21(0,0) W1^-1(tau1): p21 = -(m1/m2) p12, amplitude sqrt(m2/m1),
// H^1 = m1 + sqrt(m2^2 + p12^2), H^2 = m2 + sqrt(m1^2 + p21^2). The input's
// mass is m2 and the output's is m1.
WavePacket frame_to_frame(const WavePacket& state, double m1, double m2,
                          double tau1, double tau2);

struct NonrelRow {
  double beta = 0.0;
  double h_ratio = 0.0;
  double x_ratio = 0.0;
  double h_residual = 0.0;  // |h_ratio - k_m|
  double x_residual = 0.0;  // |x_ratio - 1/k_m|
};

struct NonrelReport {
  double m1 = 0.0;
  double m2 = 0.0;
  double km = 0.0;
  std::vector<NonrelRow> rows;
  // residual[i] / residual[i + 1]; NaN where both are at rounding level.
  std::vector<double> h_ratio_of_residuals;
  std::vector<double> x_ratio_of_residuals;
  // True when every H residual is at rounding level (the ratio is k_m for
  // every beta).
  bool h_exact = false;
};

double mass_factor(double m1, double m2);

NonrelReport nonrel_limit_report(double m1, double m2,
                                 const std::vector<double>& betas,
                                 std::size_t points = kDefaultGridPoints);

}  // namespace qrf
