#include "qrf/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "qrf/clocks.hpp"
#include "qrf/ensemble.hpp"
#include "qrf/frames.hpp"
#include "qrf/packets.hpp"
#include "qrf/relkin.hpp"

#ifndef QRF_VERSION
#define QRF_VERSION "unknown"
#endif

namespace qrf {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

std::string number_text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

MomentumGrid scenario_grid(const Scenario& sc, double center, double width) {
  const double half = sc.number_or("grid.half_width", kGridSigmas * width);
  return MomentumGrid::centered(center, half, sc.grid_points());
}

WavePacket scenario_packet(const Scenario& sc, double mass) {
  const double center = sc.number("packet.center");
  const double width = sc.number("packet.width");
  return make_gaussian(scenario_grid(sc, center, width), center, width, mass);
}

//----------------------------------------------------------------------------
ResultTable run_rotator(const Scenario& sc) {
  const double mass = sc.number("mass");
  const auto clock = rotator_init(static_cast<int>(sc.number("clock.jz")), sc.number("clock.omega"));
  const RelClockSystem sys(mass, clock, scenario_packet(sc, mass));
  const auto taus = sc.numbers("tau0");
  const std::size_t samples = sc.mc_samples();

  ResultTable t;
  t.columns = {{"tau0", "time"},          {"tau_mean", "time"},     {"dispersion", "time^2"},
               {"d_b2", "1"},             {"g2", "time"},           {"d0", "time^2"},
               {"mean_boost", "1"},       {"dispersion_direct", "time^2"},
               {"wrapped", "flag"}};
  std::vector<MonteCarloEstimate> mc;
  if (samples > 0) {
    mc = mc_rotator_dilation(sys, taus, samples, sc.seed());
    for (const char* c : {"mc_mean", "mc_variance", "mc_mean_stderr", "mc_variance_stderr"})
      t.columns.push_back({c, std::string(c).find("variance") != std::string::npos ? "time^2" : "time"});
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto st = proper_time_stats_rotator(sys, taus[i]);
    std::vector<double> row{taus[i], st.mean, st.dispersion, st.d_b2, st.g2, st.d0, st.mean_boost,
                            rotator_dispersion_direct(sys, taus[i]),
                            st.mean >= clock.period() ? 1.0 : 0.0};
    if (!mc.empty())
      row.insert(row.end(), {mc[i].mean, mc[i].variance, mc[i].mean_stderr, mc[i].variance_stderr});
    t.add_row(std::move(row));
  }
  t.summary["alpha"] = sys.alpha();
  t.summary["classical_boost"] = time_boost(sc.number("packet.center"), mass);
  t.summary["period"] = clock.period();
  return t;
}

ResultTable run_freeclock(const Scenario& sc) {
  const double mass = sc.number("mass");
  const FreeClockState fc(sc.number("clock.ma"), sc.number("clock.mb"), sc.number("clock.pbar"),
                          sc.number("clock.a"));
  const RelClockSystem sys(mass, fc, scenario_packet(sc, mass));
  const auto taus = sc.numbers("tau0");
  const std::size_t samples = sc.mc_samples();
  const WavePacket px = freeclock_packet(fc, sc.grid_points());

  ResultTable t;
  t.columns = {{"tau0", "time"}, {"tau_mean", "time"}, {"dispersion", "time^2"}, {"d_b2", "1"},
               {"g2", "time"},   {"d0", "time^2"},     {"d_x", "time^2"},        {"mean_boost", "1"}};
  std::vector<MonteCarloEstimate> mc;
  if (samples > 0) {
    mc = mc_freeclock_dilation(sys, taus, samples, sc.seed());
    for (const char* c : {"mc_mean", "mc_variance", "mc_mean_stderr", "mc_variance_stderr"})
      t.columns.push_back({c, std::string(c).find("variance") != std::string::npos ? "time^2" : "time"});
  }
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto st = proper_time_stats_freeclock(sys, taus[i], px);
    std::vector<double> row{taus[i], st.mean, st.dispersion, st.d_b2, st.g2, st.d0, *st.d_x, st.mean_boost};
    if (!mc.empty())
      row.insert(row.end(), {mc[i].mean, mc[i].variance, mc[i].mean_stderr, mc[i].variance_stderr});
    t.add_row(std::move(row));
  }
  t.summary["alpha"] = sys.alpha();
  t.summary["mu_ab"] = fc.mu;
  return t;
}

ResultTable run_entangled(const Scenario& sc) {
  const double mass = sc.number("mass");
  const auto clock = rotator_init(static_cast<int>(sc.number("clock.jz")), sc.number("clock.omega"));
  const double tau0 = sc.number("tau0");
  const auto momenta = sc.numbers("modes.momenta");
  const auto weights = sc.numbers("modes.weights");
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<MomentumMode> modes;
  for (std::size_t l = 0; l < momenta.size(); ++l)
    modes.push_back({momenta[l], complex(std::sqrt(weights[l] / total), 0.0)});
  const auto state = boosted_evolve(modes, clock, mass, tau0);

  const auto bins = static_cast<std::size_t>(sc.number_or("output.bins", 720));
  ResultTable t;
  t.columns = {{"theta", "rad"}, {"density", "1/rad"}};
  for (std::size_t i = 0; i < bins; ++i) {
    const double theta = kTwoPi * static_cast<double>(i) / static_cast<double>(bins);
    t.add_row({theta, state.density(theta)});
  }
  const auto peaks = density_peaks([&](double th) { return state.density(th); }, 0.25,
                                   std::max<std::size_t>(64 * clock.modes(), 4096));
  json predicted = json::array();
  json marginal = json::array();
  for (const auto& m : state.modes) {
    predicted.push_back(std::fmod(kTwoPi * clock.omega() * m.boost * tau0, kTwoPi));
    marginal.push_back(std::norm(m.weight));
  }
  t.summary["peaks"] = peaks;
  t.summary["predicted_peaks"] = predicted;
  t.summary["mode_probabilities"] = marginal;
  t.summary["peak_tolerance"] = kPi / static_cast<double>(clock.modes());
  return t;
}

ResultTable run_frame_transform(const Scenario& sc) {
  const double m1 = sc.number("m1"), m2 = sc.number("m2");
  const WavePacket state = scenario_packet(sc, m2);
  const auto tau1 = sc.numbers("tau1");
  const auto tau2 = sc.numbers("tau2");
  ResultTable t;
  t.columns = {{"tau1", "time"},      {"tau2", "time"},           {"norm_out", "1"},
               {"center_out", "momentum"}, {"expected_center", "momentum"}, {"round_trip_error", "1"}};
  for (std::size_t i = 0; i < tau1.size(); ++i) {
    const WavePacket out = frame_to_frame(state, m1, m2, tau1[i], tau2[i]);
    const WavePacket back = frame_to_frame(out, m2, m1, tau2[i], tau1[i]);
    double err = 0.0;
    for (std::size_t k = 0; k < state.size(); ++k) err = std::max(err, std::abs(back[k] - state[k]));
    t.add_row({tau1[i], tau2[i], out.norm(), expectation(out, [](double p) { return p; }),
               -(m1 / m2) * sc.number("packet.center"), err});
  }
  return t;
}

ResultTable run_nonrel(const Scenario& sc) {
  const auto rep = nonrel_limit_report(sc.number("m1"), sc.number("m2"), sc.numbers("beta"), sc.grid_points());
  ResultTable t;
  t.columns = {{"beta", "1"}, {"h_ratio", "1"}, {"x_ratio", "1"}, {"k_m", "1"}, {"h_residual", "1"}, {"x_residual", "1"}};
  for (const auto& r : rep.rows) t.add_row({r.beta, r.h_ratio, r.x_ratio, rep.km, r.h_residual, r.x_residual});
  json hr = json::array(), xr = json::array();
  for (double v : rep.h_ratio_of_residuals) hr.push_back(finite_or_null(v));
  for (double v : rep.x_ratio_of_residuals) xr.push_back(finite_or_null(v));
  t.summary["k_m"] = rep.km;
  t.summary["h_exact"] = rep.h_exact;
  t.summary["h_residual_ratios"] = hr;
  t.summary["x_residual_ratios"] = xr;
  return t;
}

ResultTable run_jacobi(const Scenario& sc) {
  const auto masses = sc.numbers("masses");
  std::vector<Body> bodies;
  for (double m : masses) bodies.push_back({m, Role::Frame});
  if (sc.has("particles"))
    for (double l : sc.numbers("particles")) bodies.at(static_cast<std::size_t>(l) - 1).role = Role::Particle;
  const FrameSystem sys(bodies);
  const auto n = static_cast<Eigen::Index>(sys.size());
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);

  std::vector<std::size_t> labels;
  for (std::size_t l = 1; l <= sys.size(); ++l)
    if (sys.body(l).role == Role::Frame) labels.push_back(l);
  const JacobiChart base = chart_for_ordering(sys, sys.ordering(1), 1);

  ResultTable t;
  t.columns = {{"label", "1"}, {"pairing_error", "1"}, {"compose_error", "1"}, {"inverse_error", "1"},
               {"cm_row_error", "length"}, {"det", "1"}};
  for (std::size_t l : labels) {
    const JacobiChart chart = build_chart(sys, l);
    const double pairing = (chart.pairing() - id).cwiseAbs().maxCoeff();
    const std::size_t from = labels.front();
    const Eigen::MatrixXd u = compose_transform(sys, from, l);
    const JacobiChart src = build_chart(sys, from);
    const double compose = (u - chart.coords * src.coords.inverse()).cwiseAbs().maxCoeff();
    const double inverse = (compose_transform(sys, l, from) * u - id).cwiseAbs().maxCoeff();
    Eigen::RowVectorXd cm(n);
    for (Eigen::Index j = 0; j < n; ++j) cm[j] = masses[static_cast<std::size_t>(j)] / sys.total_mass();
    const double cm_err = (chart.coords.row(n - 1) - cm).cwiseAbs().maxCoeff();
    t.add_row({static_cast<double>(l), pairing, compose, inverse, cm_err, u.determinant()});
  }
  const auto arf = arf_convergence(sys);
  t.summary["arf_deviation"] = arf.deviation;
  t.summary["arf_halving_ratio"] = arf.ratio;
  json mus = json::array();
  for (Eigen::Index i = 0; i + 1 < n; ++i) mus.push_back(base.reduced_masses[i]);
  t.summary["reduced_masses_label1"] = mus;
  return t;
}

}  // namespace

//----------------------------------------------------------------------------
void ResultTable::add_row(std::vector<double> row) {
  if (row.size() != columns.size())
    throw Error(ErrorCode::InvalidArgument, "row does not match the column schema");
  rows.push_back(std::move(row));
}

std::string ResultTable::csv() const {
  std::string out;
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (c) out += ',';
    out += csv_field(columns[c].name);
  }
  out += "\r\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += number_text(row[c]);
    }
    out += "\r\n";
  }
  return out;
}

std::string ResultTable::sidecar() const {
  json cols = json::array();
  for (const auto& c : columns) cols.push_back({{"name", c.name}, {"unit", c.unit}});
  json doc = {{"columns", cols}, {"provenance", provenance}, {"summary", summary}};
  return doc.dump(2) + "\n";
}

std::string version() { return QRF_VERSION; }

ResultTable run(const Scenario& sc) {
  const auto diags = validate(sc);
  if (!diags.empty()) throw ScenarioError(ErrorCode::ConfigError, diags);
  ResultTable t;
  const std::string kind = sc.kind();
  try {
    if (kind == "rotator-dilation") t = run_rotator(sc);
    else if (kind == "freeclock-dilation") t = run_freeclock(sc);
    else if (kind == "entangled-clock") t = run_entangled(sc);
    else if (kind == "frame-transform") t = run_frame_transform(sc);
    else if (kind == "nonrel-limit") t = run_nonrel(sc);
    else t = run_jacobi(sc);
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    throw Error(e.code(), "scenario '" + sc.name() + "': " + e.what());
  }
  t.provenance = {{"scenario", sc.name()},
                  {"kind", kind},
                  {"scenario_hash", hex64(sc.hash())},
                  {"seed", sc.seed()},
                  {"grid_points", sc.grid_points()},
                  {"mc_samples", sc.mc_samples()},
                  {"version", version()}};
  return t;
}

void write_atomic(const std::filesystem::path& path, const std::string& bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::ConfigError, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_table(const ResultTable& table, const std::filesystem::path& dir, const std::string& stem) {
  std::filesystem::create_directories(dir);
  write_atomic(dir / (stem + ".csv"), table.csv());
  write_atomic(dir / (stem + ".json"), table.sidecar());
}

std::size_t thread_cap() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QRF_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) n = static_cast<std::size_t>(v);
  }
  return n;
}

std::vector<SweepOutcome> run_sweep(const std::vector<Scenario>& variants,
                                    const std::filesystem::path& dir, std::size_t threads) {
  std::vector<SweepOutcome> out(variants.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < variants.size(); i = next++) {
      auto& o = out[i];
      o.name = variants[i].name();
      try {
        write_table(run(variants[i]), dir, variants[i].name());
        o.ok = true;
      } catch (const Error& e) {
        o.error = e.what();
        o.code = e.code();
      } catch (const std::exception& e) {
        o.error = e.what();
        o.code = ErrorCode::ConfigError;
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(threads, variants.size()));
  std::vector<std::thread> pool;
  for (std::size_t k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace qrf
