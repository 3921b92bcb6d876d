#include "qrf/scenario.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "qrf/packets.hpp"

namespace qrf {

namespace {

std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

json::json_pointer pointer(std::string_view key) {
  std::string p;
  std::size_t start = 0;
  while (start <= key.size()) {
    const auto dot = key.find('.', start);
    const auto part = key.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::ConfigError, "empty component in key '" + std::string(key) + "'");
    p += '/';
    p += part;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return json::json_pointer(p);
}

json parse_scalar(const std::string& token) {
  if (token == "true") return true;
  if (token == "false") return false;
  if (token.size() >= 2 && token.front() == '"' && token.back() == '"')
    return token.substr(1, token.size() - 2);
  if (!token.empty()) {
    const bool integral = token.find_first_of(".eEnN") == std::string::npos;
    errno = 0;
    char* end = nullptr;
    if (integral) {
      const long long v = std::strtoll(token.c_str(), &end, 10);
      if (end && *end == '\0' && errno == 0) return v;
    }
    errno = 0;
    const double d = std::strtod(token.c_str(), &end);
    if (end && *end == '\0' && errno == 0 && std::isfinite(d)) return d;
  }
  return token;
}

json parse_value(const std::string& raw) {
  if (raw.find(',') == std::string::npos) return parse_scalar(raw);
  json arr = json::array();
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) arr.push_back(parse_scalar(trim(item)));
  return arr;
}

ScenarioError config_error(std::string_view field, const std::string& msg) {
  return ScenarioError(ErrorCode::ConfigError, {{std::string(field), ErrorCode::ConfigError, msg}});
}

}  // namespace

std::string format(const Diagnostic& d) {
  return d.field + ": " + to_string(d.code) + ": " + d.message;
}

namespace {
std::string join(const std::vector<Diagnostic>& ds) {
  std::string s;
  for (const auto& d : ds) {
    if (!s.empty()) s += "; ";
    s += format(d);
  }
  return s;
}
}  // namespace

ScenarioError::ScenarioError(ErrorCode code, std::vector<Diagnostic> diagnostics)
    : Error(code, join(diagnostics)), diagnostics_(std::move(diagnostics)) {}

//----------------------------------------------------------------------------
Scenario::Scenario(json params, std::string name) : params_(std::move(params)), name_(std::move(name)) {
  if (!params_.is_object())
    throw ScenarioError(ErrorCode::ParseError, {{"<root>", ErrorCode::ParseError, "scenario must be an object"}});
}

Scenario Scenario::parse_text(std::string_view text, std::string name) {
  Scenario sc(json::object(), std::move(name));
  std::stringstream ss{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos)
      throw ScenarioError(ErrorCode::ParseError, {{where, ErrorCode::ParseError, "expected 'key = value'"}});
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty() || value.empty())
      throw ScenarioError(ErrorCode::ParseError, {{where, ErrorCode::ParseError, "empty key or value"}});
    if (sc.has(key))
      throw ScenarioError(ErrorCode::ParseError, {{where, ErrorCode::ParseError, "duplicate key '" + key + "'"}});
    try {
      sc.set(key, parse_value(value));
    } catch (const json::exception& e) {
      throw ScenarioError(ErrorCode::ParseError, {{where, ErrorCode::ParseError, "key '" + key + "' conflicts with an earlier key"}});
    } catch (const ScenarioError&) {
      throw;
    } catch (const Error& e) {
      throw ScenarioError(ErrorCode::ParseError, {{where, ErrorCode::ParseError, e.what()}});
    }
  }
  return sc;
}

Scenario Scenario::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ScenarioError(ErrorCode::ParseError, {{path.string(), ErrorCode::ParseError, "cannot read file"}});
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  std::string name = path.stem().string();
  Scenario sc;
  if (path.extension() == ".json") {
    try {
      sc = Scenario(json::parse(text), name);
    } catch (const json::parse_error& e) {
      throw ScenarioError(ErrorCode::ParseError, {{path.string() + " byte " + std::to_string(e.byte), ErrorCode::ParseError, "invalid JSON"}});
    }
  } else {
    sc = parse_text(text, name);
  }
  if (sc.has("name") && sc.at("name").is_string()) sc.set_name(sc.at("name").get<std::string>());
  return sc;
}

std::string Scenario::kind() const { return text_or("kind", ""); }

bool Scenario::has(std::string_view key) const {
  try {
    return params_.contains(pointer(key));
  } catch (const json::exception&) {
    return false;
  }
}

const json& Scenario::at(std::string_view key) const {
  try {
    return params_.at(pointer(key));
  } catch (const json::exception&) {
    throw config_error(key, "missing");
  }
}

void Scenario::set(std::string_view key, json value) { params_[pointer(key)] = std::move(value); }

void Scenario::erase(std::string_view key) {
  const auto ptr = pointer(key);
  if (!params_.contains(ptr)) return;
  params_[ptr.parent_pointer()].erase(ptr.back());
}

double Scenario::number(std::string_view key) const {
  const json& v = at(key);
  if (!v.is_number()) throw config_error(key, "expected a number");
  return v.get<double>();
}

double Scenario::number_or(std::string_view key, double fallback) const {
  return has(key) ? number(key) : fallback;
}

std::vector<double> Scenario::numbers(std::string_view key) const {
  const json& v = at(key);
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) throw config_error(key, "expected a number or a list of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw config_error(key, "list entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::string Scenario::text_or(std::string_view key, std::string fallback) const {
  if (!has(key)) return fallback;
  const json& v = at(key);
  if (!v.is_string()) throw config_error(key, "expected a string");
  return v.get<std::string>();
}

namespace {
std::uint64_t non_negative_integer(const Scenario& sc, std::string_view key, std::uint64_t fallback) {
  if (!sc.has(key)) return fallback;
  const json& v = sc.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  // Accepts integral floats such as 1e6.
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d < 1.8e19 && std::floor(d) == d) return static_cast<std::uint64_t>(d);
  }
  throw config_error(key, "expected a non-negative integer");
}
}  // namespace

std::uint64_t Scenario::seed() const { return non_negative_integer(*this, "numerics.seed", kDefaultSeed); }

std::size_t Scenario::grid_points() const {
  return static_cast<std::size_t>(non_negative_integer(*this, "numerics.grid_points", kDefaultGridPoints));
}

std::size_t Scenario::mc_samples() const {
  return static_cast<std::size_t>(non_negative_integer(*this, "numerics.mc_samples", kDefaultMcSamples));
}

std::string Scenario::canonical() const { return params_.dump(); }

std::uint64_t Scenario::hash() const { return fnv1a(canonical()); }

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

//----------------------------------------------------------------------------
namespace {

class Checker {
 public:
  explicit Checker(const Scenario& sc) : sc_(sc) {}

  void add(std::string field, ErrorCode code, std::string msg) {
    out_.push_back({std::move(field), code, std::move(msg)});
  }

  std::optional<double> number(std::string_view key) {
    if (!sc_.has(key)) {
      add(std::string(key), ErrorCode::ConfigError, "missing");
      return std::nullopt;
    }
    try {
      return sc_.number(key);
    } catch (const ScenarioError& e) {
      for (const auto& d : e.diagnostics()) out_.push_back(d);
      return std::nullopt;
    }
  }

  std::optional<std::vector<double>> numbers(std::string_view key) {
    if (!sc_.has(key)) {
      add(std::string(key), ErrorCode::ConfigError, "missing");
      return std::nullopt;
    }
    try {
      auto v = sc_.numbers(key);
      if (v.empty()) {
        add(std::string(key), ErrorCode::ConfigError, "list must not be empty");
        return std::nullopt;
      }
      return v;
    } catch (const ScenarioError& e) {
      for (const auto& d : e.diagnostics()) out_.push_back(d);
      return std::nullopt;
    }
  }

  std::optional<double> positive(std::string_view key, ErrorCode code = ErrorCode::ConfigError) {
    auto v = number(key);
    if (v && !(*v > 0.0)) {
      add(std::string(key), code, "must be > 0");
      return std::nullopt;
    }
    return v;
  }

  std::optional<long long> integer(std::string_view key, long long min) {
    auto v = number(key);
    if (!v) return std::nullopt;
    if (std::floor(*v) != *v || *v < static_cast<double>(min)) {
      add(std::string(key), ErrorCode::ConfigError, "must be an integer >= " + std::to_string(min));
      return std::nullopt;
    }
    return static_cast<long long>(*v);
  }

  double number_or_nan(std::string_view key) const {
    const auto& v = sc_.at(key);
    return v.is_number() ? v.get<double>() : std::nan("");
  }

  // Clock parameters, plus m' + H_c > 0 on every mode.
  void rotator_mass(std::string_view mass_key) {
    auto jz = integer("clock.jz", 1);
    auto omega = positive("clock.omega");
    if (!jz || !omega || !sc_.has(mass_key)) return;
    const double mass = number_or_nan(mass_key);
    if (mass > 0.0 && !(mass - 2.0 * std::numbers::pi * *omega * static_cast<double>(*jz) > 0.0))
      add("clock.omega", ErrorCode::ConfigError, "2 pi omega jz must be below the rest mass");
  }

  void times(std::string_view key) {
    if (auto v = numbers(key))
      for (double t : *v)
        if (!(t >= 0.0) || !std::isfinite(t)) {
          add(std::string(key), ErrorCode::ConfigError, "times must be finite and >= 0");
          break;
        }
  }

  void packet(std::string_view prefix) {
    const std::string p(prefix);
    number(p + ".center");
    auto width = positive(p + ".width", ErrorCode::NonPositiveWidth);
    if (width && sc_.has("grid.half_width")) {
      auto hw = number("grid.half_width");
      if (hw && *hw < kGridSigmas * *width * (1.0 - 1e-12))
        add("grid.half_width", ErrorCode::GridTooNarrow,
            "grid half width must be at least 6 * " + p + ".width");
    }
  }

  void numerics() {
    for (const char* key : {"numerics.seed", "numerics.grid_points", "numerics.mc_samples"}) {
      if (!sc_.has(key)) continue;
      try {
        if (std::string_view(key) == "numerics.seed") sc_.seed();
        else if (std::string_view(key) == "numerics.grid_points") {
          if (sc_.grid_points() < 16) add(key, ErrorCode::ConfigError, "must be >= 16");
        } else sc_.mc_samples();
      } catch (const ScenarioError& e) {
        for (const auto& d : e.diagnostics()) out_.push_back(d);
      }
    }
  }

  std::vector<Diagnostic> take() { return std::move(out_); }

 private:
  const Scenario& sc_;
  std::vector<Diagnostic> out_;
};

}  // namespace

std::vector<Diagnostic> validate(const Scenario& sc) {
  Checker c(sc);
  const json* kind_value = sc.has("kind") ? &sc.at("kind") : nullptr;
  if (!kind_value || !kind_value->is_string()) {
    c.add("kind", ErrorCode::ConfigError, "missing or not a string");
    return c.take();
  }
  const std::string kind = kind_value->get<std::string>();
  c.numerics();

  if (kind == "rotator-dilation" || kind == "freeclock-dilation") {
    c.positive("mass");
    c.packet("packet");
    c.times("tau0");
    if (kind == "rotator-dilation") {
      c.rotator_mass("mass");
    } else {
      c.positive("clock.ma");
      c.positive("clock.mb");
      c.positive("clock.a", ErrorCode::NonPositiveWidth);
      if (auto pb = c.number("clock.pbar"); pb && *pb == 0.0)
        c.add("clock.pbar", ErrorCode::ZeroMeanMomentum, "must be nonzero");
    }
  } else if (kind == "entangled-clock") {
    c.positive("mass");
    c.rotator_mass("mass");
    if (auto t = c.number("tau0"); t && !(*t >= 0.0)) c.add("tau0", ErrorCode::ConfigError, "must be >= 0");
    auto p = c.numbers("modes.momenta");
    auto w = c.numbers("modes.weights");
    if (p && w) {
      if (p->size() != w->size())
        c.add("modes.weights", ErrorCode::ConfigError, "need one weight per momentum");
      double total = 0.0;
      for (double x : *w) {
        if (x < 0.0) c.add("modes.weights", ErrorCode::ConfigError, "weights must be >= 0");
        total += x;
      }
      if (!(total > 0.0)) c.add("modes.weights", ErrorCode::ConfigError, "weights must not all be zero");
    }
    if (sc.has("output.bins")) c.integer("output.bins", 8);
  } else if (kind == "frame-transform") {
    c.positive("m1");
    c.positive("m2");
    c.packet("packet");
    c.times("tau1");
    c.times("tau2");
    if (sc.has("tau1") && sc.has("tau2")) {
      try {
        if (sc.numbers("tau1").size() != sc.numbers("tau2").size())
          c.add("tau2", ErrorCode::ConfigError, "tau1 and tau2 need the same length");
      } catch (const ScenarioError&) {
      }
    }
  } else if (kind == "nonrel-limit") {
    c.positive("m1");
    c.positive("m2");
    if (auto b = c.numbers("beta"))
      for (double x : *b)
        if (!(x > 0.0) || x > 0.1) {
          c.add("beta", ErrorCode::ConfigError, "values must lie in (0, 0.1]");
          break;
        }
  } else if (kind == "jacobi-demo") {
    if (auto m = c.numbers("masses")) {
      if (m->size() < 2) c.add("masses", ErrorCode::ConfigError, "need at least two bodies");
      for (double x : *m)
        if (!(x > 0.0)) {
          c.add("masses", ErrorCode::ConfigError, "masses must be > 0");
          break;
        }
      if (sc.has("particles")) {
        if (auto parts = c.numbers("particles")) {
          std::set<double> seen(parts->begin(), parts->end());
          for (double l : *parts)
            if (std::floor(l) != l || l < 1 || l > static_cast<double>(m->size()))
              c.add("particles", ErrorCode::BadLabel, "particle labels must be body indices 1..N");
          if (seen.size() >= m->size())
            c.add("particles", ErrorCode::BadLabel, "at least one body must be a frame");
        }
      }
    }
  } else {
    c.add("kind", ErrorCode::ConfigError, "unknown kind '" + kind + "'");
  }
  return c.take();
}

//----------------------------------------------------------------------------
std::vector<Scenario> expand_sweep(const Scenario& sc) {
  if (!sc.has("sweep")) return {sc};
  std::vector<std::pair<std::string, json>> axes;
  // Walk leaf keys under "sweep" in sorted order.
  std::function<void(const json&, const std::string&)> walk = [&](const json& node, const std::string& prefix) {
    if (node.is_object()) {
      for (auto it = node.begin(); it != node.end(); ++it)
        walk(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key());
    } else {
      axes.emplace_back(prefix, node.is_array() ? node : json::array({node}));
    }
  };
  walk(sc.at("sweep"), "");
  Scenario base = sc;
  base.erase("sweep");
  const std::uint64_t seed = sc.seed();

  std::size_t total = 1;
  for (const auto& [key, values] : axes) {
    if (values.empty()) throw config_error("sweep." + key, "sweep list must not be empty");
    total *= values.size();
  }
  std::vector<Scenario> out;
  out.reserve(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Scenario v = base;
    std::size_t rem = idx;
    // Last axis varies fastest.
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      const std::size_t n = it->second.size();
      v.set(it->first, it->second[rem % n]);
      rem /= n;
    }
    v.set("numerics.seed", seed + idx);
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%03zu", idx);
    v.set_name(sc.name() + suffix);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace qrf
