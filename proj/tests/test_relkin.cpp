#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qrf/relkin.hpp"

using namespace qrf;
using std::numbers::pi;

TEST_CASE("time boost") {
  CHECK(time_boost(0.75, 1.0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(time_boost(0.0, 2.0) == 1.0);
  const double h = 1e-5;
  const double fd = (time_boost(0.6, 1.3 + h) - time_boost(0.6, 1.3 - h)) / (2 * h);
  CHECK(time_boost_mass_slope(0.6, 1.3) == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("sharp packet reproduces the classical boost") {
  const RelClockSystem sys(1.0, rotator_init(4, 5e-4), make_delta(0.75, 1.0));
  const auto st = proper_time_stats_rotator(sys, 10.0);
  CHECK(st.mean_boost == doctest::Approx(0.8).epsilon(1e-4));
  CHECK(std::abs(st.mean - 8.0) < 1e-3);
  CHECK(sys.alpha() > 0.0);
}

TEST_CASE("rotator time operator: decomposition against exact matrices") {
  const RelClockSystem sys(1.0, rotator_init(4, 0.02), make_gaussian(0.75, 0.1, 1.0));
  for (double t : {0.0, 1.0, 8.0, 32.0}) {
    const auto st = proper_time_stats_rotator(sys, t);
    CHECK(st.dispersion == doctest::Approx(st.assembled()).epsilon(1e-14));
    CHECK(st.dispersion == doctest::Approx(rotator_dispersion_direct(sys, t)).epsilon(1e-6));
    CHECK(st.d_b2 > 0.0);
  }
  // Oracle: B over the joint |c_m|^2 |Phi(p)|^2 law, clock energy in the mass.
  const auto st = proper_time_stats_rotator(sys, 1.0);
  const auto& ext = sys.external();
  const auto& clock = std::get<RotatorClockState>(sys.clock());
  double b1 = 0.0, b2 = 0.0;
  for (int m = -4; m <= 4; ++m) {
    const double w = std::norm(clock.coefficient(m));
    const double mass = 1.0 + 2 * pi * 0.02 * m;
    b1 += w * expectation(ext, [mass](double p) { return mass / std::sqrt(mass * mass + p * p); });
    b2 += w * expectation(ext, [mass](double p) { return mass * mass / (mass * mass + p * p); });
  }
  CHECK(st.mean_boost == doctest::Approx(b1).epsilon(1e-12));
  CHECK(st.d_b2 == doctest::Approx(b2 - b1 * b1).epsilon(1e-9));
}

TEST_CASE("free clock time operator") {
  const FreeClockState fc(1.0, 1.0, 2.0, 2.5);
  const RelClockSystem sys(1.0, fc, make_gaussian(0.5, 0.05, 1.0));
  const auto st = proper_time_stats_freeclock(sys, 0.0);
  CHECK(st.model == ClockModel::FreeParticle);
  CHECK(st.dispersion == doctest::Approx(fc.mu * fc.mu * fc.a * fc.a / (fc.pbar * fc.pbar)).epsilon(1e-6));
  const auto s10 = proper_time_stats_freeclock(sys, 10.0);
  REQUIRE(s10.d_x.has_value());
  const double bbar = expectation(sys.external(), [](double p) { return time_boost(p, 1.0); });
  CHECK(*s10.d_x == doctest::Approx(st.d0 + (1.0 / (4 * fc.a * fc.a)) / 4.0 * bbar * bbar * 100.0).epsilon(1e-6));
}

TEST_CASE("boosted evolution equals rest evolution at B0 tau0") {
  const auto clock = rotator_init(6, 0.05);
  const std::vector<MomentumMode> modes{{0.0, complex(std::sqrt(0.5), 0)}, {0.75, complex(0, std::sqrt(0.5))}};
  const auto ent = boosted_evolve(modes, clock, 1.0, 10.0);
  REQUIRE(ent.modes.size() == 2);
  for (const auto& m : ent.modes) {
    const auto rest = rotator_evolve_rest(clock, time_boost(m.momentum, 1.0) * 10.0);
    for (int k = -6; k <= 6; ++k) CHECK(std::abs(m.clock.coefficient(k) - rest.coefficient(k)) < 1e-12);
    const complex ph = std::exp(complex(0, -std::sqrt(1.0 + m.momentum * m.momentum) * 10.0));
    CHECK(std::abs(m.external_phase - ph) < 1e-12);
  }
  const auto marg = ent.marginal();
  CHECK(marg[0] == doctest::Approx(0.5));
  CHECK(marg[1] == doctest::Approx(0.5));
  const double total = [&] {
    double s = 0.0;
    const int n = 4001;
    for (int i = 0; i < n; ++i) {
      const double th = -pi + 2 * pi * i / (n - 1);
      s += ent.density(th) * (i == 0 || i == n - 1 ? 1 : (i % 2 ? 4 : 2));
    }
    return s * (2 * pi / (n - 1)) / 3;
  }();
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("density peaks") {
  const auto peaks = density_peaks([](double t) { return std::exp(-20 * (t - 1) * (t - 1)) + 0.5 * std::exp(-20 * (t - 4) * (t - 4)); },
                                   0.2, 2000);
  REQUIRE(peaks.size() == 2);
  std::vector<double> s = peaks;
  std::sort(s.begin(), s.end());
  CHECK(s[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s[1] == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("two-body kinematics") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    const double m1 = 0.5 + std::abs(u(rng)), m2 = 0.2 + std::abs(u(rng));
    const double p1 = u(rng), p2 = u(rng);
    const auto k = kinematics_point(m1, m2, p1, p2);
    // Oracle: Lorentz boost of G2 into the rest frame of F1.
    const double e1 = std::hypot(m1, p1), e2 = std::hypot(m2, p2);
    const double g = e1 / m1, gb = p1 / m1;
    CHECK(k.p12 == doctest::Approx(g * p2 - gb * e2).epsilon(1e-12));
    CHECK(k.es == doctest::Approx(m1 + std::hypot(m2, k.p12)).epsilon(1e-12));
    const double s2 = (e1 + e2) * (e1 + e2) - (p1 + p2) * (p1 + p2);
    CHECK(k.s == doctest::Approx(std::sqrt(s2)).epsilon(1e-12));
    CHECK(std::abs(k.es * k.es - k.p12 * k.p12 - k.s * k.s) < 1e-10 * k.s * k.s);
  }
  // 3D form reduces to 1D along a common axis.
  const Eigen::Vector3d p1(0.0, 0.0, 0.7), p2(0.0, 0.0, -0.4);
  const auto k3 = kinematics_point(1.2, 0.4, p1, p2);
  const auto k1 = kinematics_point(1.2, 0.4, 0.7, -0.4);
  CHECK(k3.p12.z() == doctest::Approx(k1.p12).epsilon(1e-13));
  CHECK(k3.s == doctest::Approx(k1.s).epsilon(1e-13));
  // Transverse momenta are untouched by a longitudinal boost.
  const auto kt = kinematics_point(1.2, 0.4, p1, Eigen::Vector3d(0.3, -0.2, 0.1));
  CHECK(kt.p12.x() == doctest::Approx(0.3));
  CHECK(kt.p12.y() == doctest::Approx(-0.2));
  const double e1 = std::sqrt(1.44 + 0.49), e2 = std::sqrt(0.16 + 0.09 + 0.04 + 0.01);
  const double s = std::sqrt((e1 + e2) * (e1 + e2) - 0.09 - 0.04 - 0.64);
  CHECK(kt.s == doctest::Approx(s).epsilon(1e-13));
  CHECK(std::abs(kt.es * kt.es - kt.p12.squaredNorm() - kt.s * kt.s) < 1e-12);
}

TEST_CASE("frame-1 Hamiltonian satisfies the squared KG relation") {
  const auto g2 = make_gaussian(0.4, 0.1, 0.5);
  const auto b = boost_to_frame(g2, 1.5, 0.3);
  CHECK(std::abs(b.norm() - 1.0) < 1e-9);
  const auto ev = evolve_in_frame(1.5, b, 2.0);
  CHECK(kg_square_check(1.5, ev) <= 1e-10);
  const auto tk = two_body_kinematics(1.5, make_delta(0.3, 1.5), g2);
  CHECK(tk.invariant_residual() < 1e-10);
}

TEST_CASE("cluster Hamiltonian") {
  const auto g2 = make_gaussian(0.2, 0.1, 1.0, 31);
  for (const auto& m : cluster_hamiltonian(2.0, g2, std::nullopt))
    CHECK(m.energy == doctest::Approx(2.0 + std::hypot(1.0, m.p2)).epsilon(1e-12));
  const auto g3 = make_gaussian(-0.3, 0.1, 0.5, 31);
  for (const auto& m : cluster_hamiltonian(2.0, g2, g3)) {
    const double e = std::hypot(1.0, m.p2) + std::hypot(0.5, m.p3);
    CHECK(m.s23 == doctest::Approx(std::sqrt(e * e - (m.p2 + m.p3) * (m.p2 + m.p3))).epsilon(1e-12));
    CHECK(m.energy == doctest::Approx(ClusterHamiltonian{2.0}(m.s23, m.p23)).epsilon(1e-14));
  }
  CHECK(pair_invariant_mass(1.0, 0.3, 1.0, -0.3) == doctest::Approx(2 * std::hypot(1.0, 0.3)));
}

TEST_CASE("Newton-Wigner coordinate") {
  const auto real = make_gaussian(0.0, 0.3, 1.0);
  const auto nw = newton_wigner_x(real);
  CHECK(std::abs(nw.mean) < 1e-10);
  CHECK(nw.stencil_error < 0.01);
  const auto grid = packet_grid(0.6, 0.2);
  const auto shifted = make_packet(
      grid, [](double p) { return std::exp(-(p - 0.6) * (p - 0.6) / 0.16) * std::exp(complex(0, -1.5 * p)); }, 2.0);
  CHECK(newton_wigner_x(shifted).mean == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(nw_commutator_residual(shifted) < 1e-6);
}

TEST_CASE("Newton-Wigner rejects rough states") {
  const UniformGrid g(-1.0, 1.0, 41);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<complex> a(41);
  for (auto& x : a) x = complex(u(rng), u(rng));
  const auto rough = WavePacket::normalized(g, a, 1.0);
  try {
    newton_wigner_x(rough);
    FAIL("expected RoughState");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RoughState);
  }
}

TEST_CASE("frame-to-frame map") {
  const auto in = make_gaussian(0.4, 0.05, 1.0);
  const auto out = frame_to_frame(in, 2.0, 1.0, 1.5, 0.5);
  CHECK(out.mass() == 2.0);
  CHECK(std::abs(out.norm() - 1.0) < 1e-9);
  CHECK(expectation(out, [](double p) { return p; }) == doctest::Approx(-0.8).epsilon(1e-9));
  const auto back = frame_to_frame(out, 1.0, 2.0, 0.5, 1.5);
  REQUIRE(back.size() == in.size());
  double err = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) err = std::max(err, std::abs(back[i] - in[i]));
  CHECK(err < 1e-9);
}

TEST_CASE("nonrelativistic limit") {
  CHECK(mass_factor(1.0, 3.0) == doctest::Approx(4.0));
  const std::vector<double> betas{0.08, 0.04, 0.02};
  const auto r = nonrel_limit_report(1.0, 3.0, betas);
  REQUIRE(r.rows.size() == 3);
  CHECK(r.km == doctest::Approx(4.0));
  for (double q : r.h_ratio_of_residuals) CHECK(q == doctest::Approx(4.0).epsilon(0.125));
  for (double q : r.x_ratio_of_residuals) CHECK(q == doctest::Approx(4.0).epsilon(0.125));
  CHECK(r.rows.back().h_residual < r.rows.front().h_residual);
  const auto eq = nonrel_limit_report(1.0, 1.0, betas);
  CHECK(eq.h_exact);
}
