#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrf/error.hpp"

namespace qrf {

using json = nlohmann::json;

struct Diagnostic {
  std::string field;
  ErrorCode code;
  std::string message;
};

std::string format(const Diagnostic& d);

// Config problem with per-field diagnostics.
class ScenarioError : public Error {
 public:
  ScenarioError(ErrorCode code, std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

inline constexpr const char* kScenarioKinds[] = {
    "jacobi-demo", "rotator-dilation", "freeclock-dilation",
    "entangled-clock", "frame-transform", "nonrel-limit"};

// Parsed scenario. Parameters are held as nested JSON, with dotted keys
// ("packet.center") addressing nested objects.
class Scenario {
 public:
  Scenario() = default;
  Scenario(json params, std::string name);

  // key = value lines, '#' comments, comma-separated lists. Throws
  // ParseError naming the line.
  static Scenario parse_text(std::string_view text, std::string name);
  static Scenario load(const std::filesystem::path& path);

  const std::string& name() const noexcept { return name_; }
  void set_name(std::string n) { name_ = std::move(n); }
  const json& params() const noexcept { return params_; }
  std::string kind() const;

  bool has(std::string_view key) const;
  const json& at(std::string_view key) const;
  void set(std::string_view key, json value);
  void erase(std::string_view key);

  // Throw ScenarioError(ConfigError) naming the field on absence or type
  // mismatch. Scalars are accepted where a list is expected.
  double number(std::string_view key) const;
  double number_or(std::string_view key, double fallback) const;
  std::vector<double> numbers(std::string_view key) const;
  std::string text_or(std::string_view key, std::string fallback) const;

  std::uint64_t seed() const;
  std::size_t grid_points() const;
  std::size_t mc_samples() const;

  // Sorted-key compact JSON; the hash is FNV-1a 64 over it.
  std::string canonical() const;
  std::uint64_t hash() const;

 private:
  json params_ = json::object();
  std::string name_;
};

inline constexpr std::uint64_t kDefaultSeed = 1;
inline constexpr std::size_t kDefaultMcSamples = 100000;

std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::string hex64(std::uint64_t value);

// All violated preconditions, without running anything.
std::vector<Diagnostic> validate(const Scenario& scenario);

// Cartesian product over "sweep.<key> = v1, v2, ..." entries. Variant i gets
// seed = base seed + i and name "<name>_<i>". No sweep keys: the scenario
// itself.
std::vector<Scenario> expand_sweep(const Scenario& scenario);

}  // namespace qrf
