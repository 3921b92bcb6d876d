#pragma once

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qrf/packets.hpp"

namespace qrf {

enum class Role { Frame, Particle };

struct Body {
  double mass;
  Role role;
};

// Ordered bodies. Labels are 1-based throughout the public interface, so body
// l is bodies()[l - 1].
class FrameSystem {
 public:
  explicit FrameSystem(std::vector<Body> bodies);

  static FrameSystem frames(std::vector<double> masses);

  std::size_t size() const noexcept { return bodies_.size(); }
  const std::vector<Body>& bodies() const noexcept { return bodies_; }
  double mass(std::size_t label) const { return body(label).mass; }
  const Body& body(std::size_t label) const;
  double total_mass() const noexcept { return total_; }
  std::size_t frame_count() const noexcept;
  std::size_t particle_count() const noexcept { return size() - frame_count(); }

  // Body order used by frame l: (l, 1, ..., l-1, l+1, ..., N), 0-based indices.
  std::vector<std::size_t> ordering(std::size_t label) const;

 private:
  std::vector<Body> bodies_;
  double total_;
};

// Sentinel label for the infinitely massive absolute frame.
inline constexpr std::size_t kArfLabel = 0;

// Jacobi chart of one frame. Row i of `coords` gives q_i as a combination of
// body positions r_j (columns in original body order); `momenta` does the same
// for pi_i over body momenta. For i < N,
//   q_i  = sum_{j>i} m_j r_j / M_{i+1} - r_i
//   pi_i = mu_i (P_{i+1} / M_{i+1} - p_i / m_i)
// over the chart's body ordering, and the last row is the c.m. / total
// momentum pair.
struct JacobiChart {
  std::size_t label = 1;
  std::vector<std::size_t> ordering;
  Eigen::VectorXd ordered_masses;
  Eigen::MatrixXd coords;
  Eigen::MatrixXd momenta;
  // mu_1 .. mu_{N-1} followed by M_N for the c.m. pair.
  Eigen::VectorXd reduced_masses;

  std::size_t size() const noexcept { return ordering.size(); }

  // {q_i, pi_j}; the identity for a canonical chart.
  Eigen::MatrixXd pairing() const { return coords * momenta.transpose(); }
};

// Chart for bodies in an arbitrary order.
JacobiChart chart_for_ordering(const FrameSystem& system,
                               std::vector<std::size_t> ordering,
                               std::size_t label);

// Throws BadLabel unless 1 <= label <= N and body `label` is a frame.
JacobiChart build_chart(const FrameSystem& system, std::size_t label);

// beta = -acos sqrt(m1 m2 / ((m3 + m2)(m1 + m3))). m3 = 0 gives 0 (pure
// parity on the last relative coordinate).
double exchange_angle(double m1, double m2, double m3);

// Swap of the bodies at chart positions (first, first + 1). In mass-weighted
// coordinates xi = sqrt(mu) q the swap acts on the (first, first + 1) plane as
// R(beta) diag(-1, 1); the surrounding dilatations restore plain q.
struct ExchangeOp {
  std::size_t first = 0;
  double beta = 0.0;
  // sqrt(mu) of the source chart and 1 / sqrt(mu') of the target, both for
  // the two affected coordinates.
  std::pair<double, double> pre_dilatation{1.0, 1.0};
  std::pair<double, double> post_dilatation{1.0, 1.0};
  bool parity = true;
  std::vector<std::size_t> from_ordering;
  std::vector<std::size_t> to_ordering;

  // Full q-space map C2 R P C1 (identity outside the affected plane).
  Eigen::MatrixXd matrix() const;
  Eigen::Matrix2d block() const;
};

ExchangeOp make_exchange(const FrameSystem& system,
                         const std::vector<std::size_t>& ordering,
                         std::size_t first);

// State of the whole system on a chart, in chart momenta pi.
struct ChartState {
  std::vector<std::size_t> ordering;
  std::function<complex(const Eigen::VectorXd&)> amplitude;
};

// Gaussian product in chart momenta: pi_i ~ centers_i, |psi|^2 std widths_i,
// optional position offsets x0_i (phase exp(-i pi.x0)).
ChartState chart_gaussian(const JacobiChart& chart, Eigen::VectorXd centers,
                          Eigen::VectorXd widths,
                          Eigen::VectorXd offsets = Eigen::VectorXd());

// Push-forward through a linear canonical map q' = A q (pi' = A^-T pi), with
// the |det A|^(1/2) amplitude factor. Throws ChartMismatch if the state is not
// on the op's source chart.
ChartState apply_exchange(const ChartState& state, const ExchangeOp& op);
ChartState apply_linear(const ChartState& state, const Eigen::MatrixXd& map,
                        std::vector<std::size_t> to_ordering);

// Adjacent exchanges taking the label-1 chart to the label-k chart, in
// application order.
std::vector<ExchangeOp> exchange_sequence(const FrameSystem& system,
                                          std::size_t label);

// q^k = U q^j as a matrix, built from the exchange sequences:
// U_{j,k} = U_{k,1} U_{j,1}^-1.
Eigen::MatrixXd compose_transform(const FrameSystem& system, std::size_t from,
                                  std::size_t to);

// Chart of the system plus an appended body of mass m_A (default
// 1e8 * max m_i), ordered (1, ..., N, A). Relative rows are sign-flipped so
// they approach r_i - r_A; the last row approaches r_A.
JacobiChart arf_limit_chart(const FrameSystem& system, double mass_factor = 1e8);

struct ArfConvergence {
  double deviation;         // max |row - limit| at m_A
  double deviation_double;  // same at 2 m_A
  double ratio;             // deviation / deviation_double, ~2
};

// Limit rows: q_i = r_i - r_A, last row r_A. Columns: bodies 1..N, then A.
Eigen::MatrixXd arf_limit_rows(std::size_t n);
ArfConvergence arf_convergence(const FrameSystem& system,
                               double mass_factor = 1e8);

// H_c = sum_{i<N} pi_i^2 / 2 mu_i; H_s = pi_N^2 / 2M.
class InternalHamiltonian {
 public:
  explicit InternalHamiltonian(const JacobiChart& chart);

  double internal(const Eigen::VectorXd& pi) const;
  double cm(const Eigen::VectorXd& pi) const;
  double total(const Eigen::VectorXd& pi) const { return internal(pi) + cm(pi); }

  // H_c as a quadratic form over body momenta: H_c = p^T K p / 2.
  Eigen::MatrixXd body_form() const;

 private:
  JacobiChart chart_;
};

InternalHamiltonian internal_hamiltonian(const FrameSystem& system,
                                         const JacobiChart& chart);

//----------------------------------------------------------------------------
// Delta = x_n - x_1 measurement with detector flags.

// Closed intervals; a point on a shared edge belongs to the lower bin.
class DeltaBins {
 public:
  explicit DeltaBins(std::vector<std::pair<double, double>> intervals);
  static DeltaBins uniform(double lo, double hi, std::size_t count);

  std::size_t size() const noexcept { return intervals_.size(); }
  const std::pair<double, double>& operator[](std::size_t j) const {
    return intervals_[j];
  }
  // Bin index containing delta, or size() if none.
  std::size_t locate(double delta) const noexcept;

 private:
  std::vector<std::pair<double, double>> intervals_;
};

inline constexpr std::size_t kDetectorReady = static_cast<std::size_t>(-1);

// One pure component of the block-diagonal density matrix. `indices` are flat
// indices a * n1 + b into the (x_n, x_1) product grid; `amplitude` holds
// quadrature-weighted values (unit l2 norm).
struct Branch {
  std::size_t flag = kDetectorReady;
  double probability = 0.0;
  std::vector<std::size_t> indices;
  std::vector<complex> amplitude;
};

class ReducedDensityMatrix {
 public:
  ReducedDensityMatrix(PositionGrid xn, PositionGrid x1, DeltaBins bins,
                       std::vector<Branch> branches,
                       std::vector<std::size_t> empty_bins = {});

  // Pure product psi_n(x_n) psi_1(x_1) with the detector ready.
  static ReducedDensityMatrix product(const WavePacket& psi_n,
                                      const WavePacket& psi_1,
                                      const DeltaBins& bins);

  const PositionGrid& xn_grid() const noexcept { return xn_; }
  const PositionGrid& x1_grid() const noexcept { return x1_; }
  const DeltaBins& bins() const noexcept { return bins_; }
  const std::vector<Branch>& branches() const noexcept { return branches_; }
  const std::vector<std::size_t>& empty_bins() const noexcept { return empty_; }

  double trace() const;

  // Full matrix over (grid point, detector state); detector states are
  // ready, then one flag per bin. Only for small grids.
  Eigen::MatrixXcd dense() const;

  // Mean and standard deviation of one coordinate (0: x_n, 1: x_1) within a
  // branch's conditional state.
  std::pair<double, double> branch_moments(std::size_t branch,
                                           int axis) const;

 private:
  PositionGrid xn_;
  PositionGrid x1_;
  DeltaBins bins_;
  std::vector<Branch> branches_;
  std::vector<std::size_t> empty_;
};

// rho_f = sum_j P_Dj P_phij rho P_Dj P_phij, where the measurement sets the
// detector to flag j for a ready component with Delta in bin j. A component
// already carrying flag j keeps only its part inside bin j. Throws
// BinsDoNotCover if a ready component has weight outside every bin.
ReducedDensityMatrix measurement_reduce(const ReducedDensityMatrix& rho);
ReducedDensityMatrix measurement_reduce(const WavePacket& psi_n,
                                        const WavePacket& psi_1,
                                        const DeltaBins& bins);

}  // namespace qrf
