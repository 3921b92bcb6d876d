#include <doctest.h>

#include <cmath>

#include "qrf/ensemble.hpp"

using namespace qrf;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  // Counter words (index lo, index hi, stream lo, stream hi), key (seed lo, seed hi).
  using B = std::array<std::uint32_t, 4>;
  CHECK(Philox(0).block(0, 0) == B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox(~0ull).block(~0ull, ~0ull) == B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  const Philox pi_key(0x299f31d0a4093822ull);
  CHECK(pi_key.block(0x0370734413198a2eull, 0x85a308d3243f6a88ull) ==
        B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniforms are in (0, 1) with the right mean") {
  const Philox rng(42);
  double s = 0.0, s2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i)
    for (double u : rng.uniforms(0, static_cast<std::uint64_t>(i))) {
      CHECK_MESSAGE((u > 0.0 && u < 1.0), u);
      s += u;
      s2 += u * u;
    }
  const double mean = s / (4.0 * n), var = s2 / (4.0 * n) - mean * mean;
  CHECK(std::abs(mean - 0.5) < 5 * std::sqrt(1.0 / 12 / (4.0 * n)));
  CHECK(var == doctest::Approx(1.0 / 12).epsilon(0.01));
  CHECK(rng.uniforms(1, 7) != rng.uniforms(0, 7));
}

TEST_CASE("tabulated sampler inverts the CDF") {
  const UniformGrid g(0.0, 2.0, 2001);
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) d[i] = g[i];  // density x/2
  const TabulatedSampler s(g, d);
  // F(x) = x^2 / 4  =>  x = 2 sqrt(u).
  for (double u : {0.01, 0.25, 0.5, 0.9, 0.999})
    CHECK(s(u) == doctest::Approx(2 * std::sqrt(u)).epsilon(1e-3));
  CHECK_THROWS_AS(TabulatedSampler(g, std::vector<double>(g.size(), 0.0)), Error);
}

TEST_CASE("categorical sampler") {
  const CategoricalSampler c({0.2, 0.0, 0.8});
  CHECK(c(0.1) == 0);
  CHECK(c(0.2000001) == 2);
  CHECK(c(0.99) == 2);
}

TEST_CASE("sample moments") {
  const std::vector<double> v{1.0, 2.0, 4.0, 7.0};
  const auto m = sample_moments(v);
  CHECK(m.mean == doctest::Approx(3.5));
  CHECK(m.variance == doctest::Approx(7.0));  // n - 1 form
  CHECK(m.samples == 4);
  CHECK(m.mean_stderr == doctest::Approx(std::sqrt(7.0 / 4)));
  // m4 = (2.5^4 + 1.5^4 + 0.5^4 + 3.5^4) / 4
  const double m4 = (39.0625 + 5.0625 + 0.0625 + 150.0625) / 4;
  CHECK(m.variance_stderr == doctest::Approx(std::sqrt((m4 - 5.25 * 5.25) / 4)));
}

TEST_CASE("quadratic fit is exact on a parabola") {
  std::vector<double> t, y;
  for (int i = 0; i <= 10; ++i) {
    t.push_back(i * 3.2);
    y.push_back(1.5 - 0.25 * t.back() + 0.0125 * t.back() * t.back());
  }
  const auto c = fit_quadratic(t, y);
  CHECK(c[0] == doctest::Approx(1.5).epsilon(1e-10));
  CHECK(c[1] == doctest::Approx(-0.25).epsilon(1e-10));
  CHECK(c[2] == doctest::Approx(0.0125).epsilon(1e-10));
}

TEST_CASE("Monte Carlo is deterministic and agrees with the operator moments") {
  const RelClockSystem sys(1.0, rotator_init(4, 0.02), make_gaussian(0.75, 0.1, 1.0));
  const std::vector<double> taus{1.0, 16.0};
  const auto a = mc_rotator_dilation(sys, taus, 20000, 3);
  const auto b = mc_rotator_dilation(sys, taus, 20000, 3);
  const auto c = mc_rotator_dilation(sys, taus, 20000, 4);
  REQUIRE(a.size() == 2);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean == b[i].mean);
    CHECK(a[i].variance == b[i].variance);
    CHECK(a[i].mean != c[i].mean);
    const double direct = rotator_dispersion_direct(sys, taus[i]);
    CHECK(std::abs(a[i].variance - direct) < 4 * a[i].variance_stderr);
  }
  const FreeClockState fc(1.0, 1.0, 2.0, 2.5);
  const RelClockSystem fs(1.0, fc, make_gaussian(0.5, 0.05, 1.0));
  const auto f = mc_freeclock_dilation(fs, {0.0, 10.0}, 20000, 5);
  for (std::size_t i = 0; i < f.size(); ++i) {
    const auto st = proper_time_stats_freeclock(fs, f[i].tau0);
    CHECK(std::abs(f[i].variance - st.dispersion) < 4 * f[i].variance_stderr);
    CHECK(std::abs(f[i].mean - st.mean) < 4 * f[i].mean_stderr);
  }
}
