#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "llambo/common.hpp"

namespace llambo {

enum class ParamKind { continuous, integer, categorical };
enum class Scale { linear, log };

// One hyperparameter dimension.  Numeric kinds use [lower, upper]; categorical
// kinds use `choices` and ignore the bounds.
struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::continuous;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<std::string> choices;
  Scale scale = Scale::linear;

  void validate() const;
  int choice_index(std::string_view label) const;  // -1 if absent
};

struct SearchSpace {
  std::vector<ParamSpec> params;

  std::size_t dim() const { return params.size(); }
  const ParamSpec* find(std::string_view name) const;
  void validate() const;

  static SearchSpace from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

// A concrete assignment of values, keyed by parameter name.  std::map keeps
// serialization order deterministic.
using ParamValue = std::variant<double, std::int64_t, std::string>;

struct Config {
  std::map<std::string, ParamValue> values;

  bool operator==(const Config&) const = default;
};

// A point in the unit hypercube [0,1]^d, ordered like space.params.
struct UnitPoint {
  Eigen::VectorXd coords;

  std::size_t dim() const { return static_cast<std::size_t>(coords.size()); }
};

struct Observation {
  Config config;
  double score = 0.0;
};
using History = std::vector<Observation>;

// Throws ValidationError naming the first offending parameter (in space order)
// if the config is missing a key, has the wrong value type, or is out of range.
void validate_config(const SearchSpace& space, const Config& config);

// Bijective map between configs and the unit cube (up to integer/categorical
// quantization).  Categorical choice i maps to the cell midpoint (i + 0.5) / k;
// integers round to nearest (ties to even) and clamp; log-scaled dimensions
// interpolate in log space.
UnitPoint normalize(const SearchSpace& space, const Config& config);
Config denormalize(const SearchSpace& space, const UnitPoint& point);

nlohmann::json config_to_json(const Config& config);
Config config_from_json(const SearchSpace& space, const nlohmann::json& doc);

// Initial-design generators.  All are deterministic in (space, n, seed).
std::vector<Config> sample_random(const SearchSpace& space, int n, std::uint64_t seed);
std::vector<Config> sample_sobol(const SearchSpace& space, int n, std::uint64_t seed);
std::vector<Config> sample_lhc(const SearchSpace& space, int n, std::uint64_t seed);

std::vector<UnitPoint> normalize_all(const SearchSpace& space, const std::vector<Config>& configs);

}  // namespace llambo
