#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrf/runner.hpp"
#include "qrf/scenario.hpp"

using namespace qrf;
namespace fs = std::filesystem;

namespace {

bool has_field(const std::vector<Diagnostic>& d, const std::string& field, ErrorCode code) {
  return std::any_of(d.begin(), d.end(), [&](const Diagnostic& x) { return x.field == field && x.code == code; });
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("text format: dotted keys, lists, comments") {
  const auto sc = Scenario::parse_text(
      "# header\n"
      "kind = rotator-dilation\n"
      "mass = 1   # trailing\n"
      "packet.center = 0.75\n"
      "packet.width = 1e-3\n"
      "tau0 = 1, 2, 4\n"
      "label = hello world\n",
      "t");
  CHECK(sc.kind() == "rotator-dilation");
  CHECK(sc.params()["packet"]["center"].get<double>() == 0.75);
  CHECK(sc.number("packet.width") == 1e-3);
  CHECK(sc.numbers("tau0") == std::vector<double>{1, 2, 4});
  CHECK(sc.numbers("mass") == std::vector<double>{1});
  CHECK(sc.text_or("label", "") == "hello world");
  CHECK(sc.seed() == kDefaultSeed);
  CHECK(sc.mc_samples() == kDefaultMcSamples);
}

TEST_CASE("parse errors name the line") {
  try {
    Scenario::parse_text("kind = nonrel-limit\nno equals here\n", "t");
    FAIL("expected ParseError");
  } catch (const ScenarioError& e) {
    CHECK(e.code() == ErrorCode::ParseError);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(Scenario::parse_text("a = 1\na = 2\n", "t"), ScenarioError);
}

TEST_CASE("validation lists every problem") {
  auto sc = Scenario::parse_text(
      "kind = rotator-dilation\nmass = -1\npacket.center = 0\npacket.width = 0\n"
      "clock.jz = 0\nclock.omega = 0.02\n",
      "bad");
  const auto d = validate(sc);
  CHECK(has_field(d, "mass", ErrorCode::ConfigError));
  CHECK(has_field(d, "packet.width", ErrorCode::NonPositiveWidth));
  CHECK(has_field(d, "clock.jz", ErrorCode::ConfigError));
  CHECK(has_field(d, "tau0", ErrorCode::ConfigError));
  CHECK_THROWS_AS(run(sc), ScenarioError);

  auto narrow = Scenario::parse_text(
      "kind = rotator-dilation\nmass = 1\npacket.center = 0\npacket.width = 0.1\ngrid.half_width = 0.3\n"
      "clock.jz = 4\nclock.omega = 0.02\ntau0 = 1\n",
      "n");
  CHECK(has_field(validate(narrow), "grid.half_width", ErrorCode::GridTooNarrow));

  auto fc = Scenario::parse_text(
      "kind = freeclock-dilation\nmass = 1\npacket.center = 0\npacket.width = 0.1\n"
      "clock.ma = 1\nclock.mb = 1\nclock.a = 1\nclock.pbar = 0\ntau0 = 1\n",
      "f");
  CHECK(has_field(validate(fc), "clock.pbar", ErrorCode::ZeroMeanMomentum));

  auto jd = Scenario::parse_text("kind = jacobi-demo\nmasses = 1, 2\nparticles = 1, 2\n", "j");
  CHECK(has_field(validate(jd), "particles", ErrorCode::BadLabel));

  auto heavy = Scenario::parse_text(
      "kind = entangled-clock\nmass = 1\nclock.jz = 16\nclock.omega = 0.05\ntau0 = 1\n"
      "modes.momenta = 0\nmodes.weights = 1\n",
      "h");
  CHECK(has_field(validate(heavy), "clock.omega", ErrorCode::ConfigError));

  auto unknown = Scenario::parse_text("kind = warp-drive\n", "u");
  CHECK_FALSE(validate(unknown).empty());
}

TEST_CASE("integral floats are accepted for counts") {
  auto sc = Scenario::parse_text("kind = nonrel-limit\nm1 = 1\nm2 = 1\nbeta = 0.01\nnumerics.mc_samples = 1e6\n", "x");
  CHECK(sc.mc_samples() == 1000000);
  sc.set("numerics.mc_samples", 2.5);
  CHECK_THROWS_AS(sc.mc_samples(), ScenarioError);
}

TEST_CASE("canonical form and hash ignore key order") {
  const auto a = Scenario::parse_text("kind = nonrel-limit\nm1 = 1\nm2 = 3\nbeta = 0.01\n", "a");
  const auto b = Scenario::parse_text("beta = 0.01\nm2 = 3\nm1 = 1\nkind = nonrel-limit\n", "b");
  CHECK(a.canonical() == b.canonical());
  CHECK(a.hash() == b.hash());
  auto c = a;
  c.set("m2", 4.0);
  CHECK(c.hash() != a.hash());
  // FNV-1a 64 reference values.
  CHECK(fnv1a("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(hex64(0xabcull) == "0000000000000abc");
}

TEST_CASE("sweep expansion") {
  const auto sc = Scenario::parse_text(
      "kind = nonrel-limit\nm1 = 1\nm2 = 1\nbeta = 0.01\nnumerics.seed = 10\n"
      "sweep.m1 = 1, 10\nsweep.m2 = 1, 2, 3\n",
      "sw");
  const auto v = expand_sweep(sc);
  REQUIRE(v.size() == 6);
  CHECK(v[0].name() == "sw_000");
  CHECK(v[5].name() == "sw_005");
  CHECK(v[1].number("m2") == 2.0);  // last axis fastest
  CHECK(v[3].number("m1") == 10.0);
  CHECK(v[4].seed() == 14);
  for (const auto& x : v) CHECK_FALSE(x.has("sweep"));
  const auto plain = Scenario::parse_text("kind = nonrel-limit\nm1 = 1\nm2 = 1\nbeta = 0.01\n", "p");
  CHECK(expand_sweep(plain).size() == 1);
}

TEST_CASE("every shipped scenario validates") {
  std::size_t count = 0;
  for (const auto& e : fs::directory_iterator(QRF_SCENARIO_DIR)) {
    if (e.path().extension() != ".scn") continue;
    ++count;
    const auto sc = Scenario::load(e.path());
    for (const auto& v : expand_sweep(sc)) {
      const auto d = validate(v);
      CHECK_MESSAGE(d.empty(), e.path().filename().string(), (d.empty() ? "" : format(d.front())));
    }
  }
  CHECK(count >= 6);
}

TEST_CASE("json scenarios load like text ones") {
  const auto dir = fs::temp_directory_path() / "qrf_test_scenario";
  fs::create_directories(dir);
  const auto p = dir / "nr.json";
  std::ofstream(p) << R"({"kind": "nonrel-limit", "m1": 1, "m2": 3, "beta": [0.02, 0.01]})";
  const auto sc = Scenario::load(p);
  CHECK(sc.name() == "nr");
  const auto t = Scenario::parse_text("kind = nonrel-limit\nm1 = 1\nm2 = 3\nbeta = 0.02, 0.01\n", "nr");
  CHECK(sc.canonical() == t.canonical());
  fs::remove_all(dir);
}

TEST_CASE("result tables: CSV and sidecar") {
  ResultTable t;
  t.columns = {{"a", "1"}, {"b,c", "time"}};
  t.add_row({1.0, 0.1});
  t.add_row({-2.5e-20, 3.0});
  CHECK_THROWS_AS(t.add_row({1.0}), Error);
  const auto csv = t.csv();
  CHECK(csv == "a,\"b,c\"\r\n1,0.1\r\n-2.5e-20,3\r\n");
  const auto side = json::parse(t.sidecar());
  CHECK(side["columns"][1]["unit"] == "time");
}

TEST_CASE("run writes provenance and atomic outputs") {
  const auto sc = Scenario::parse_text("kind = nonrel-limit\nm1 = 1\nm2 = 3\nbeta = 0.04, 0.02, 0.01\n", "nr");
  const auto t = run(sc);
  CHECK(t.rows.size() == 3);
  CHECK(t.provenance["scenario"] == "nr");
  CHECK(t.provenance["scenario_hash"] == hex64(sc.hash()));
  CHECK(t.provenance["kind"] == "nonrel-limit");
  const auto dir = fs::temp_directory_path() / "qrf_test_out";
  fs::remove_all(dir);
  write_table(t, dir, "nr");
  CHECK(slurp(dir / "nr.csv") == t.csv());
  CHECK(json::parse(slurp(dir / "nr.json"))["provenance"] == t.provenance);
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++files;
  CHECK(files == 2);  // no temporaries left behind
  fs::remove_all(dir);
}

TEST_CASE("explicit grid half width is honoured") {
  auto sc = Scenario::parse_text(
      "kind = frame-transform\nm1 = 1\nm2 = 1\npacket.center = 0\npacket.width = 0.1\n"
      "grid.half_width = 0.6\ntau1 = 0\ntau2 = 0\n",
      "ft");
  CHECK(validate(sc).empty());
  CHECK_NOTHROW(run(sc));
}
