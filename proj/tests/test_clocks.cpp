#include <doctest.h>

#include <cmath>
#include <numbers>

#include "qrf/clocks.hpp"

using namespace qrf;
using std::numbers::pi;

namespace {

// Simpson over [a, b] with n (odd) points.
template <class F>
auto simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / (n - 1);
  decltype(f(a)) s = f(a) + f(b);
  for (int i = 1; i < n - 1; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * (h / 3.0);
}

complex amplitude(const RotatorClockState& st, double theta) {
  complex s = 0.0;
  for (int m = -st.jz(); m <= st.jz(); ++m)
    s += st.coefficient(m) * std::exp(complex(0, m * theta));
  return s / std::sqrt(2 * pi);
}

}  // namespace

TEST_CASE("initial rotator state is normalized and peaked at zero") {
  const auto st = rotator_init(4, 0.02);
  CHECK(st.modes() == 9);
  double n2 = 0.0;
  for (auto c : st.coefficients()) n2 += std::norm(c);
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-14));
  const double total = simpson([&](double t) { return st.density(t); }, -pi, pi, 2001);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  const double peak = rotator_peak(st);
  CHECK(std::min(peak, 2 * pi - peak) < 1e-7);
  CHECK_THROWS_AS(rotator_init(0, 0.02), Error);
  CHECK_THROWS_AS(rotator_init(3, -1.0), Error);
}

TEST_CASE("angle matrices match quadrature") {
  const int jz = 3;
  for (double center : {0.0, 1.3}) {
    for (int power : {1, 2}) {
      const auto a = angle_matrix(jz, center, power);
      for (int m = -jz; m <= jz; ++m)
        for (int n = -jz; n <= jz; ++n) {
          // <m| u^k |n> = (1/2 pi) int u^k e^{i (n - m) theta} d theta
          const complex want = simpson(
              [&](double t) {
                const double u = t - center;
                return std::pow(u, power) * std::exp(complex(0, (n - m) * t)) / (2 * pi);
              },
              center - pi, center + pi, 4001);
          CHECK(std::abs(a(m + jz, n + jz) - want) < 1e-10);
        }
    }
  }
}

TEST_CASE("rest evolution translates the density") {
  const auto st = rotator_init(5, 0.1);
  const double t = 2.3;
  const auto ev = rotator_evolve_rest(st, t);
  CHECK(ev.elapsed() == doctest::Approx(t));
  const double shift = 2 * pi * 0.1 * t;
  for (double th = -3.0; th < 3.0; th += 0.37)
    CHECK(ev.density(th) == doctest::Approx(st.density(th - shift)).epsilon(1e-12));
  // Oracle: explicit phase e^{-i 2 pi omega m t}.
  for (int m = -5; m <= 5; ++m) {
    const complex want = st.coefficient(m) * std::exp(complex(0, -2 * pi * 0.1 * m * t));
    CHECK(std::abs(ev.coefficient(m) - want) < 1e-13);
  }
}

TEST_CASE("angle moments agree with direct quadrature of the density") {
  const auto st = rotator_evolve_rest(rotator_init(6, 0.05), 3.0);
  const double c = 2 * pi * 0.05 * 3.0;
  const auto mom = angle_moments(st, c);
  const double mean = simpson([&](double t) { return t * std::norm(amplitude(st, t)); }, c - pi, c + pi, 8001);
  const double second =
      simpson([&](double t) { return t * t * std::norm(amplitude(st, t)); }, c - pi, c + pi, 8001);
  CHECK(mom.mean == doctest::Approx(mean).epsilon(1e-10));
  CHECK(mom.variance == doctest::Approx(second - mean * mean).epsilon(1e-9));
}

TEST_CASE("rotator readout tracks rest time inside one period") {
  const double omega = 0.02;
  for (int jz : {4, 8}) {
    const auto st = rotator_init(jz, omega);
    const double n = 2 * jz + 1;
    for (double t : {1.0, 10.0, 24.9, 37.0, 49.0}) {
      const auto r = rotator_read(rotator_evolve_rest(st, t));
      CHECK(r.model == ClockModel::Rotator);
      CHECK_FALSE(r.wrapped);
      CHECK(std::abs(r.mean - t) <= 1.0 / (2 * omega * n));
      CHECK(r.dispersion > 0.0);
    }
  }
  const auto late = rotator_read(rotator_evolve_rest(rotator_init(4, omega), 60.0));
  CHECK(late.wrapped);
  CHECK(std::abs(late.mean - 10.0) <= 1.0 / (2 * omega * 9));
}

TEST_CASE("free clock packet and readout") {
  const FreeClockState fc(1.0, 3.0, 2.0, 2.5);
  CHECK(fc.mu == doctest::Approx(0.75));
  const auto pk = freeclock_packet(fc);
  const auto m = freeclock_moments(pk);
  CHECK(m.mean_p == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.var_p == doctest::Approx(1.0 / (4 * 2.5 * 2.5)).epsilon(1e-6));
  CHECK(m.var_x == doctest::Approx(2.5 * 2.5).epsilon(1e-6));
  CHECK(std::abs(m.mean_x) < 1e-9);
  CHECK(std::abs(m.anti_xp) < 1e-8);
  // Heisenberg oracle: x(t) = x0 + p t / mu, reading mu x(t) / pbar.
  for (double t : {0.0, 1.0, 5.0, 10.0}) {
    const auto r = freeclock_read(pk, fc, t);
    CHECK(r.model == ClockModel::FreeParticle);
    CHECK(r.mean == doctest::Approx(t).epsilon(1e-10));
    const double want = (fc.mu * fc.mu * fc.a * fc.a + t * t / (4 * fc.a * fc.a)) / (fc.pbar * fc.pbar);
    CHECK(r.dispersion == doctest::Approx(want).epsilon(1e-6));  // grid truncation
  }
  try {
    freeclock_read(pk, FreeClockState(1.0, 3.0, 2.0, 1.0), 1.0);
    FAIL("expected ClockModelMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ClockModelMismatch);
  }
  try {
    freeclock_read(pk, FreeClockState(1.0, 3.0, 0.0, 2.5), 1.0);
    FAIL("expected ZeroMeanMomentum");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ZeroMeanMomentum);
  }
}
