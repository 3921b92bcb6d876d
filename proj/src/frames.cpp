#include "qrf/frames.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace qrf {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string label_message(std::size_t label, std::size_t n) {
  std::ostringstream os;
  os << "frame label " << label << " invalid for a system of " << n << " bodies";
  return os.str();
}

void check_frame_label(const FrameSystem& system, std::size_t label) {
  if (label < 1 || label > system.size())
    throw Error(ErrorCode::BadLabel, label_message(label, system.size()));
  if (system.body(label).role != Role::Frame)
    throw Error(ErrorCode::BadLabel, "body " + std::to_string(label) + " is not a frame");
}

// sqrt(mu) weights of coordinates i and i + 1 on a chart; the c.m. slot uses M.
std::pair<double, double> sqrt_mu(const JacobiChart& chart, std::size_t i) {
  return {std::sqrt(chart.reduced_masses[static_cast<Eigen::Index>(i)]),
          std::sqrt(chart.reduced_masses[static_cast<Eigen::Index>(i + 1)])};
}

}  // namespace

FrameSystem::FrameSystem(std::vector<Body> bodies)
    : bodies_(std::move(bodies)), total_(0.0) {
  if (bodies_.empty())
    throw Error(ErrorCode::InvalidArgument, "system needs at least one body");
  for (const auto& b : bodies_) {
    if (!(b.mass > 0.0) || !std::isfinite(b.mass))
      throw Error(ErrorCode::InvalidArgument, "body masses must be finite and positive");
    total_ += b.mass;
  }
}

FrameSystem FrameSystem::frames(std::vector<double> masses) {
  std::vector<Body> bodies;
  bodies.reserve(masses.size());
  for (double m : masses) bodies.push_back({m, Role::Frame});
  return FrameSystem(std::move(bodies));
}

const Body& FrameSystem::body(std::size_t label) const {
  if (label < 1 || label > bodies_.size())
    throw Error(ErrorCode::BadLabel, label_message(label, bodies_.size()));
  return bodies_[label - 1];
}

std::size_t FrameSystem::frame_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      bodies_.begin(), bodies_.end(), [](const Body& b) { return b.role == Role::Frame; }));
}

std::vector<std::size_t> FrameSystem::ordering(std::size_t label) const {
  if (label < 1 || label > size())
    throw Error(ErrorCode::BadLabel, label_message(label, size()));
  std::vector<std::size_t> order{label - 1};
  for (std::size_t j = 0; j < size(); ++j)
    if (j != label - 1) order.push_back(j);
  return order;
}

//----------------------------------------------------------------------------
JacobiChart chart_for_ordering(const FrameSystem& system,
                               std::vector<std::size_t> ordering,
                               std::size_t label) {
  const std::size_t n = system.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "a chart needs at least two bodies");
  if (ordering.size() != n)
    throw Error(ErrorCode::InvalidArgument, "ordering must list every body once");
  {
    auto sorted = ordering;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < n; ++j)
      if (sorted[j] != j)
        throw Error(ErrorCode::InvalidArgument, "ordering must be a permutation");
  }
  const auto N = static_cast<Eigen::Index>(n);
  JacobiChart chart;
  chart.label = label;
  chart.ordering = ordering;
  chart.ordered_masses.resize(N);
  for (Eigen::Index i = 0; i < N; ++i)
    chart.ordered_masses[i] = system.bodies()[ordering[static_cast<std::size_t>(i)]].mass;
  const auto& m = chart.ordered_masses;

  // tail[i] = sum_{j >= i} m_j over the ordering.
  Eigen::VectorXd tail(N + 1);
  tail[N] = 0.0;
  for (Eigen::Index i = N - 1; i >= 0; --i) tail[i] = tail[i + 1] + m[i];

  chart.coords = Eigen::MatrixXd::Zero(N, N);
  chart.momenta = Eigen::MatrixXd::Zero(N, N);
  chart.reduced_masses.resize(N);
  auto col = [&](Eigen::Index j) { return static_cast<Eigen::Index>(ordering[static_cast<std::size_t>(j)]); };
  for (Eigen::Index i = 0; i + 1 < N; ++i) {
    const double rest = tail[i + 1];
    const double mu = 1.0 / (1.0 / rest + 1.0 / m[i]);
    chart.reduced_masses[i] = mu;
    chart.coords(i, col(i)) = -1.0;
    chart.momenta(i, col(i)) = -mu / m[i];
    for (Eigen::Index j = i + 1; j < N; ++j) {
      chart.coords(i, col(j)) = m[j] / rest;
      chart.momenta(i, col(j)) = mu / rest;
    }
  }
  chart.reduced_masses[N - 1] = tail[0];
  for (Eigen::Index j = 0; j < N; ++j) {
    chart.coords(N - 1, col(j)) = m[j] / tail[0];
    chart.momenta(N - 1, col(j)) = 1.0;
  }
  return chart;
}

JacobiChart build_chart(const FrameSystem& system, std::size_t label) {
  check_frame_label(system, label);
  if (system.size() < 2)
    throw Error(ErrorCode::BadLabel, "a frame chart needs at least two bodies");
  return chart_for_ordering(system, system.ordering(label), label);
}

double exchange_angle(double m1, double m2, double m3) {
  if (!(m1 > 0.0) || !(m2 > 0.0) || !(m3 >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "exchange masses must be positive");
  const double c = std::sqrt(m2 * m1 / ((m3 + m2) * (m1 + m3)));
  return -std::acos(std::min(c, 1.0));
}

//----------------------------------------------------------------------------
Eigen::Matrix2d ExchangeOp::block() const {
  Eigen::Matrix2d pre = Eigen::Vector2d(pre_dilatation.first, pre_dilatation.second).asDiagonal();
  Eigen::Matrix2d post = Eigen::Vector2d(post_dilatation.first, post_dilatation.second).asDiagonal();
  Eigen::Matrix2d rot;
  rot << std::cos(beta), -std::sin(beta), std::sin(beta), std::cos(beta);
  Eigen::Matrix2d par = Eigen::Vector2d(parity ? -1.0 : 1.0, 1.0).asDiagonal();
  return post * rot * par * pre;
}

Eigen::MatrixXd ExchangeOp::matrix() const {
  const auto n = static_cast<Eigen::Index>(from_ordering.size());
  Eigen::MatrixXd out = Eigen::MatrixXd::Identity(n, n);
  out.block<2, 2>(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(first)) = block();
  return out;
}

ExchangeOp make_exchange(const FrameSystem& system,
                         const std::vector<std::size_t>& ordering,
                         std::size_t first) {
  if (first + 1 >= ordering.size())
    throw Error(ErrorCode::InvalidArgument, "exchange position out of range");
  const JacobiChart from = chart_for_ordering(system, ordering, 1);
  auto swapped = ordering;
  std::swap(swapped[first], swapped[first + 1]);
  const JacobiChart to = chart_for_ordering(system, swapped, 1);

  const auto i = static_cast<Eigen::Index>(first);
  double rest = 0.0;
  for (Eigen::Index j = i + 2; j < from.ordered_masses.size(); ++j) rest += from.ordered_masses[j];

  ExchangeOp op;
  op.first = first;
  op.beta = exchange_angle(from.ordered_masses[i], from.ordered_masses[i + 1], rest);
  op.pre_dilatation = sqrt_mu(from, first);
  const auto post = sqrt_mu(to, first);
  op.post_dilatation = {1.0 / post.first, 1.0 / post.second};
  op.parity = true;
  op.from_ordering = ordering;
  op.to_ordering = std::move(swapped);
  return op;
}

//----------------------------------------------------------------------------
ChartState chart_gaussian(const JacobiChart& chart, Eigen::VectorXd centers,
                          Eigen::VectorXd widths, Eigen::VectorXd offsets) {
  const auto n = static_cast<Eigen::Index>(chart.size());
  if (centers.size() != n || widths.size() != n)
    throw Error(ErrorCode::InvalidArgument, "one center and width per chart coordinate");
  if (offsets.size() == 0) offsets = Eigen::VectorXd::Zero(n);
  if (offsets.size() != n)
    throw Error(ErrorCode::InvalidArgument, "one offset per chart coordinate");
  double norm = 1.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(widths[i] > 0.0))
      throw Error(ErrorCode::NonPositiveWidth, "chart Gaussian widths must be positive");
    norm *= std::pow(2.0 * kPi * widths[i] * widths[i], -0.25);
  }
  ChartState state;
  state.ordering = chart.ordering;
  state.amplitude = [centers, widths, offsets, norm](const Eigen::VectorXd& pi) {
    double arg = 0.0;
    double phase = 0.0;
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
      const double d = pi[i] - centers[i];
      arg += d * d / (4.0 * widths[i] * widths[i]);
      phase -= pi[i] * offsets[i];
    }
    return norm * std::exp(-arg) * std::polar(1.0, phase);
  };
  return state;
}

ChartState apply_linear(const ChartState& state, const Eigen::MatrixXd& map,
                        std::vector<std::size_t> to_ordering) {
  const double scale = std::sqrt(std::abs(map.determinant()));
  const Eigen::MatrixXd back = map.transpose();
  ChartState out;
  out.ordering = std::move(to_ordering);
  out.amplitude = [inner = state.amplitude, back, scale](const Eigen::VectorXd& pi) {
    return scale * inner(back * pi);
  };
  return out;
}

ChartState apply_exchange(const ChartState& state, const ExchangeOp& op) {
  if (state.ordering != op.from_ordering)
    throw Error(ErrorCode::ChartMismatch, "state is not on the exchange's source chart");
  return apply_linear(state, op.matrix(), op.to_ordering);
}

std::vector<ExchangeOp> exchange_sequence(const FrameSystem& system,
                                          std::size_t label) {
  check_frame_label(system, label);
  std::vector<std::size_t> order(system.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<ExchangeOp> ops;
  for (std::size_t pos = label - 1; pos > 0; --pos) {
    ops.push_back(make_exchange(system, order, pos - 1));
    order = ops.back().to_ordering;
  }
  return ops;
}

namespace {
Eigen::MatrixXd from_label_one(const FrameSystem& system, std::size_t label) {
  const auto n = static_cast<Eigen::Index>(system.size());
  Eigen::MatrixXd u = Eigen::MatrixXd::Identity(n, n);
  for (const auto& op : exchange_sequence(system, label)) u = op.matrix() * u;
  return u;
}
}  // namespace

Eigen::MatrixXd compose_transform(const FrameSystem& system, std::size_t from,
                                  std::size_t to) {
  check_frame_label(system, from);
  check_frame_label(system, to);
  if (from == to) {
    const auto n = static_cast<Eigen::Index>(system.size());
    return Eigen::MatrixXd::Identity(n, n);
  }
  const Eigen::MatrixXd uk = from_label_one(system, to);
  const Eigen::MatrixXd uj = from_label_one(system, from);
  return uk * uj.inverse();
}

//----------------------------------------------------------------------------
namespace {
JacobiChart arf_chart_with_mass(const FrameSystem& system, double mass_a) {
  std::vector<Body> bodies = system.bodies();
  bodies.push_back({mass_a, Role::Frame});
  const FrameSystem extended(std::move(bodies));
  std::vector<std::size_t> order(extended.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  JacobiChart chart = chart_for_ordering(extended, std::move(order), kArfLabel);
  const auto n = static_cast<Eigen::Index>(system.size());
  chart.coords.topRows(n) *= -1.0;
  chart.momenta.topRows(n) *= -1.0;
  return chart;
}

double max_mass(const FrameSystem& system) {
  double m = 0.0;
  for (const auto& b : system.bodies()) m = std::max(m, b.mass);
  return m;
}
}  // namespace

JacobiChart arf_limit_chart(const FrameSystem& system, double mass_factor) {
  return arf_chart_with_mass(system, mass_factor * max_mass(system));
}

Eigen::MatrixXd arf_limit_rows(std::size_t n) {
  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd rows = Eigen::MatrixXd::Zero(N + 1, N + 1);
  for (Eigen::Index i = 0; i < N; ++i) {
    rows(i, i) = 1.0;
    rows(i, N) = -1.0;
  }
  rows(N, N) = 1.0;
  return rows;
}

ArfConvergence arf_convergence(const FrameSystem& system, double mass_factor) {
  const Eigen::MatrixXd limit = arf_limit_rows(system.size());
  const double ma = mass_factor * max_mass(system);
  ArfConvergence c{};
  c.deviation = (arf_chart_with_mass(system, ma).coords - limit).cwiseAbs().maxCoeff();
  c.deviation_double = (arf_chart_with_mass(system, 2.0 * ma).coords - limit).cwiseAbs().maxCoeff();
  c.ratio = c.deviation / c.deviation_double;
  return c;
}

//----------------------------------------------------------------------------
InternalHamiltonian::InternalHamiltonian(const JacobiChart& chart) : chart_(chart) {}

double InternalHamiltonian::internal(const Eigen::VectorXd& pi) const {
  double h = 0.0;
  for (Eigen::Index i = 0; i + 1 < pi.size(); ++i)
    h += pi[i] * pi[i] / (2.0 * chart_.reduced_masses[i]);
  return h;
}

double InternalHamiltonian::cm(const Eigen::VectorXd& pi) const {
  const Eigen::Index last = pi.size() - 1;
  return pi[last] * pi[last] / (2.0 * chart_.reduced_masses[last]);
}

Eigen::MatrixXd InternalHamiltonian::body_form() const {
  const Eigen::Index n = chart_.momenta.rows();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) inv[i] = 1.0 / chart_.reduced_masses[i];
  return chart_.momenta.transpose() * inv.asDiagonal() * chart_.momenta;
}

InternalHamiltonian internal_hamiltonian(const FrameSystem& system,
                                         const JacobiChart& chart) {
  if (chart.size() != system.size() && chart.label != kArfLabel)
    throw Error(ErrorCode::ChartMismatch, "chart does not belong to this system");
  const Eigen::MatrixXd pairing = chart.pairing();
  const auto n = pairing.rows();
  if ((pairing - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-10)
    throw Error(ErrorCode::ChartMismatch, "chart is not canonical");
  return InternalHamiltonian(chart);
}

//----------------------------------------------------------------------------
DeltaBins::DeltaBins(std::vector<std::pair<double, double>> intervals)
    : intervals_(std::move(intervals)) {
  if (intervals_.empty()) throw Error(ErrorCode::InvalidArgument, "at least one bin required");
  for (const auto& [lo, hi] : intervals_)
    if (!(hi > lo) || !std::isfinite(lo) || !std::isfinite(hi))
      throw Error(ErrorCode::InvalidArgument, "bins need finite lo < hi");
  std::sort(intervals_.begin(), intervals_.end());
  for (std::size_t j = 1; j < intervals_.size(); ++j)
    if (intervals_[j].first < intervals_[j - 1].second)
      throw Error(ErrorCode::InvalidArgument, "bins must not overlap");
}

DeltaBins DeltaBins::uniform(double lo, double hi, std::size_t count) {
  if (count == 0 || !(hi > lo))
    throw Error(ErrorCode::InvalidArgument, "uniform bins need count > 0 and lo < hi");
  std::vector<std::pair<double, double>> v;
  const double w = (hi - lo) / static_cast<double>(count);
  for (std::size_t j = 0; j < count; ++j) {
    const double a = lo + static_cast<double>(j) * w;
    const double b = j + 1 == count ? hi : lo + static_cast<double>(j + 1) * w;
    v.emplace_back(a, b);
  }
  return DeltaBins(std::move(v));
}

std::size_t DeltaBins::locate(double delta) const noexcept {
  // First match in ascending order, so a shared edge lands in the lower bin.
  auto it = std::lower_bound(
      intervals_.begin(), intervals_.end(), delta,
      [](const std::pair<double, double>& bin, double d) { return bin.second < d; });
  if (it != intervals_.end() && it->first <= delta && delta <= it->second)
    return static_cast<std::size_t>(it - intervals_.begin());
  return intervals_.size();
}

ReducedDensityMatrix::ReducedDensityMatrix(PositionGrid xn, PositionGrid x1,
                                           DeltaBins bins,
                                           std::vector<Branch> branches,
                                           std::vector<std::size_t> empty_bins)
    : xn_(xn), x1_(x1), bins_(std::move(bins)), branches_(std::move(branches)),
      empty_(std::move(empty_bins)) {}

ReducedDensityMatrix ReducedDensityMatrix::product(const WavePacket& psi_n,
                                                   const WavePacket& psi_1,
                                                   const DeltaBins& bins) {
  const auto& gn = psi_n.grid();
  const auto& g1 = psi_1.grid();
  Branch b;
  b.indices.resize(gn.size() * g1.size());
  b.amplitude.resize(b.indices.size());
  double total = 0.0;
  for (std::size_t a = 0; a < gn.size(); ++a) {
    const complex fa = psi_n[a] * std::sqrt(gn.weight(a));
    for (std::size_t c = 0; c < g1.size(); ++c) {
      const std::size_t k = a * g1.size() + c;
      b.indices[k] = k;
      b.amplitude[k] = fa * psi_1[c] * std::sqrt(g1.weight(c));
      total += std::norm(b.amplitude[k]);
    }
  }
  const double s = 1.0 / std::sqrt(total);
  for (auto& v : b.amplitude) v *= s;
  b.probability = total;
  return ReducedDensityMatrix(gn, g1, bins, {std::move(b)});
}

double ReducedDensityMatrix::trace() const {
  double t = 0.0;
  for (const auto& b : branches_) t += b.probability;
  return t;
}

Eigen::MatrixXcd ReducedDensityMatrix::dense() const {
  const std::size_t cells = xn_.size() * x1_.size();
  const auto dim = static_cast<Eigen::Index>(cells * (bins_.size() + 1));
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& b : branches_) {
    const std::size_t slot = b.flag == kDetectorReady ? 0 : b.flag + 1;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dim);
    for (std::size_t k = 0; k < b.indices.size(); ++k)
      v[static_cast<Eigen::Index>(slot * cells + b.indices[k])] = b.amplitude[k];
    rho += b.probability * v * v.adjoint();
  }
  return rho;
}

std::pair<double, double> ReducedDensityMatrix::branch_moments(std::size_t branch,
                                                               int axis) const {
  const auto& b = branches_.at(branch);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t k = 0; k < b.indices.size(); ++k) {
    const std::size_t idx = b.indices[k];
    const double x = axis == 0 ? xn_[idx / x1_.size()] : x1_[idx % x1_.size()];
    const double w = std::norm(b.amplitude[k]);
    s0 += w;
    s1 += w * x;
    s2 += w * x * x;
  }
  const double mean = s1 / s0;
  return {mean, std::sqrt(std::max(s2 / s0 - mean * mean, 0.0))};
}

ReducedDensityMatrix measurement_reduce(const ReducedDensityMatrix& rho) {
  const auto& gn = rho.xn_grid();
  const auto& g1 = rho.x1_grid();
  const auto& bins = rho.bins();
  const std::size_t nb = bins.size();
  std::vector<Branch> out;
  std::vector<double> captured(nb, 0.0);
  double lost = 0.0;

  for (const auto& in : rho.branches()) {
    std::vector<Branch> parts(nb);
    for (std::size_t k = 0; k < in.indices.size(); ++k) {
      const std::size_t idx = in.indices[k];
      const double delta = gn[idx / g1.size()] - g1[idx % g1.size()];
      const std::size_t j = bins.locate(delta);
      const bool keep = j < nb && (in.flag == kDetectorReady || in.flag == j);
      if (!keep) {
        lost += in.probability * std::norm(in.amplitude[k]);
        continue;
      }
      parts[j].indices.push_back(idx);
      parts[j].amplitude.push_back(in.amplitude[k]);
    }
    for (std::size_t j = 0; j < nb; ++j) {
      auto& p = parts[j];
      double w = 0.0;
      for (const auto& a : p.amplitude) w += std::norm(a);
      if (!(w > 0.0)) continue;
      const double s = 1.0 / std::sqrt(w);
      for (auto& a : p.amplitude) a *= s;
      p.flag = j;
      p.probability = in.probability * w;
      captured[j] += p.probability;
      out.push_back(std::move(p));
    }
  }
  if (lost > 1e-9) {
    std::ostringstream os;
    os << "bins miss probability " << lost << " of the state";
    throw Error(ErrorCode::BinsDoNotCover, os.str());
  }
  std::vector<std::size_t> empty;
  for (std::size_t j = 0; j < nb; ++j)
    if (!(captured[j] > 0.0)) empty.push_back(j);
  return ReducedDensityMatrix(gn, g1, bins, std::move(out), std::move(empty));
}

ReducedDensityMatrix measurement_reduce(const WavePacket& psi_n,
                                        const WavePacket& psi_1,
                                        const DeltaBins& bins) {
  return measurement_reduce(ReducedDensityMatrix::product(psi_n, psi_1, bins));
}

}  // namespace qrf
