#include "llambo/space.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "llambo/sobol.hpp"

namespace llambo {

void ParamSpec::validate() const {
  if (name.empty()) throw ValidationError("parameter with empty name");
  if (kind == ParamKind::categorical) {
    if (choices.size() < 2)
      throw ValidationError("categorical parameter '" + name + "' needs at least two choices");
    std::set<std::string> uniq(choices.begin(), choices.end());
    if (uniq.size() != choices.size())
      throw ValidationError("categorical parameter '" + name + "' has duplicate choices");
    return;
  }
  if (!(lower < upper))
    throw ValidationError("parameter '" + name + "' needs lower < upper");
  if (scale == Scale::log && !(lower > 0.0))
    throw ValidationError("log-scaled parameter '" + name + "' needs lower > 0");
  if (kind == ParamKind::integer) {
    if (std::floor(lower) != lower || std::floor(upper) != upper)
      throw ValidationError("integer parameter '" + name + "' needs integral bounds");
  }
}

int ParamSpec::choice_index(std::string_view label) const {
  for (std::size_t i = 0; i < choices.size(); ++i)
    if (choices[i] == label) return static_cast<int>(i);
  return -1;
}

const ParamSpec* SearchSpace::find(std::string_view name) const {
  for (const auto& p : params)
    if (p.name == name) return &p;
  return nullptr;
}

void SearchSpace::validate() const {
  if (params.empty()) throw ValidationError("search space has no parameters");
  std::set<std::string> names;
  for (const auto& p : params) {
    p.validate();
    if (!names.insert(p.name).second)
      throw ValidationError("duplicate parameter name '" + p.name + "'");
  }
}

namespace {

ParamKind kind_from_string(const std::string& s) {
  if (s == "continuous") return ParamKind::continuous;
  if (s == "integer") return ParamKind::integer;
  if (s == "categorical") return ParamKind::categorical;
  throw SchemaError("unknown parameter kind '" + s + "'");
}

const char* kind_to_string(ParamKind k) {
  switch (k) {
    case ParamKind::continuous: return "continuous";
    case ParamKind::integer: return "integer";
    case ParamKind::categorical: return "categorical";
  }
  return "?";
}

}  // namespace

SearchSpace SearchSpace::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("params") || !doc["params"].is_array())
    throw SchemaError("search space document needs a 'params' array");
  SearchSpace space;
  for (const auto& item : doc["params"]) {
    if (!item.is_object()) throw SchemaError("search space entry must be an object");
    ParamSpec p;
    if (!item.contains("name") || !item["name"].is_string())
      throw SchemaError("search space entry needs a string 'name'");
    p.name = item["name"].get<std::string>();
    p.kind = kind_from_string(item.value("kind", std::string("continuous")));
    if (p.kind == ParamKind::categorical) {
      if (!item.contains("choices") || !item["choices"].is_array())
        throw SchemaError("categorical parameter '" + p.name + "' needs a 'choices' array");
      for (const auto& c : item["choices"]) {
        if (!c.is_string())
          throw SchemaError("choices of '" + p.name + "' must be strings");
        p.choices.push_back(c.get<std::string>());
      }
    } else {
      if (!item.contains("lower") || !item.contains("upper"))
        throw SchemaError("parameter '" + p.name + "' needs 'lower' and 'upper'");
      p.lower = item["lower"].get<double>();
      p.upper = item["upper"].get<double>();
      const std::string scale = item.value("scale", std::string("linear"));
      if (scale == "log")
        p.scale = Scale::log;
      else if (scale == "linear")
        p.scale = Scale::linear;
      else
        throw SchemaError("unknown scale '" + scale + "' on parameter '" + p.name + "'");
    }
    space.params.push_back(std::move(p));
  }
  space.validate();
  return space;
}

nlohmann::json SearchSpace::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& p : params) {
    nlohmann::json item;
    item["name"] = p.name;
    item["kind"] = kind_to_string(p.kind);
    if (p.kind == ParamKind::categorical) {
      item["choices"] = p.choices;
    } else {
      item["lower"] = p.lower;
      item["upper"] = p.upper;
      item["scale"] = p.scale == Scale::log ? "log" : "linear";
    }
    arr.push_back(std::move(item));
  }
  return nlohmann::json{{"params", arr}};
}

void validate_config(const SearchSpace& space, const Config& config) {
  for (const auto& p : space.params) {
    auto it = config.values.find(p.name);
    if (it == config.values.end())
      throw ValidationError("config is missing parameter '" + p.name + "'");
    const ParamValue& v = it->second;
    switch (p.kind) {
      case ParamKind::continuous: {
        if (!std::holds_alternative<double>(v))
          throw ValidationError("parameter '" + p.name + "' must be a real number");
        const double x = std::get<double>(v);
        if (!std::isfinite(x) || x < p.lower || x > p.upper)
          throw ValidationError("parameter '" + p.name + "' = " + std::to_string(x) +
                                " outside [" + std::to_string(p.lower) + ", " +
                                std::to_string(p.upper) + "]");
        break;
      }
      case ParamKind::integer: {
        if (!std::holds_alternative<std::int64_t>(v))
          throw ValidationError("parameter '" + p.name + "' must be an integer");
        const auto x = std::get<std::int64_t>(v);
        if (x < static_cast<std::int64_t>(p.lower) || x > static_cast<std::int64_t>(p.upper))
          throw ValidationError("parameter '" + p.name + "' = " + std::to_string(x) +
                                " outside [" + std::to_string(p.lower) + ", " +
                                std::to_string(p.upper) + "]");
        break;
      }
      case ParamKind::categorical: {
        if (!std::holds_alternative<std::string>(v))
          throw ValidationError("parameter '" + p.name + "' must be a choice label");
        if (p.choice_index(std::get<std::string>(v)) < 0)
          throw ValidationError("parameter '" + p.name + "' has unknown choice '" +
                                std::get<std::string>(v) + "'");
        break;
      }
    }
  }
}

namespace {

double to_unit(const ParamSpec& p, const ParamValue& v) {
  switch (p.kind) {
    case ParamKind::continuous: {
      const double x = std::get<double>(v);
      if (p.scale == Scale::log)
        return (std::log(x) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower));
      return (x - p.lower) / (p.upper - p.lower);
    }
    case ParamKind::integer: {
      const double x = static_cast<double>(std::get<std::int64_t>(v));
      if (p.scale == Scale::log)
        return (std::log(x) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower));
      return (x - p.lower) / (p.upper - p.lower);
    }
    case ParamKind::categorical: {
      const int idx = p.choice_index(std::get<std::string>(v));
      const double k = static_cast<double>(p.choices.size());
      return (static_cast<double>(idx) + 0.5) / k;
    }
  }
  return 0.0;
}

ParamValue from_unit(const ParamSpec& p, double u) {
  switch (p.kind) {
    case ParamKind::continuous: {
      double x;
      if (p.scale == Scale::log)
        x = std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)));
      else
        x = p.lower + u * (p.upper - p.lower);
      return std::clamp(x, p.lower, p.upper);
    }
    case ParamKind::integer: {
      double raw;
      if (p.scale == Scale::log)
        raw = std::exp(std::log(p.lower) + u * (std::log(p.upper) - std::log(p.lower)));
      else
        raw = p.lower + u * (p.upper - p.lower);
      // Round half to even, then clamp into the bounds.
      const double rounded = std::nearbyint(raw);
      const auto x = static_cast<std::int64_t>(
          std::clamp(rounded, p.lower, p.upper));
      return x;
    }
    case ParamKind::categorical: {
      const auto k = static_cast<double>(p.choices.size());
      auto idx = static_cast<std::size_t>(std::floor(u * k));
      if (idx >= p.choices.size()) idx = p.choices.size() - 1;
      return p.choices[idx];
    }
  }
  return 0.0;
}

}  // namespace

UnitPoint normalize(const SearchSpace& space, const Config& config) {
  validate_config(space, config);
  UnitPoint point;
  point.coords.resize(static_cast<Eigen::Index>(space.dim()));
  for (std::size_t d = 0; d < space.dim(); ++d) {
    const ParamSpec& p = space.params[d];
    point.coords[static_cast<Eigen::Index>(d)] = to_unit(p, config.values.at(p.name));
  }
  return point;
}

Config denormalize(const SearchSpace& space, const UnitPoint& point) {
  if (point.dim() != space.dim())
    throw ValidationError("unit point has dimension " + std::to_string(point.dim()) +
                          ", space has " + std::to_string(space.dim()));
  Config config;
  for (std::size_t d = 0; d < space.dim(); ++d) {
    const double u = point.coords[static_cast<Eigen::Index>(d)];
    if (!(u >= 0.0 && u <= 1.0))
      throw ValidationError("unit coordinate " + std::to_string(u) + " outside [0, 1]");
    config.values[space.params[d].name] = from_unit(space.params[d], u);
  }
  return config;
}

nlohmann::json config_to_json(const Config& config) {
  nlohmann::json obj = nlohmann::json::object();
  for (const auto& [name, value] : config.values) {
    if (std::holds_alternative<double>(value))
      obj[name] = std::get<double>(value);
    else if (std::holds_alternative<std::int64_t>(value))
      obj[name] = std::get<std::int64_t>(value);
    else
      obj[name] = std::get<std::string>(value);
  }
  return obj;
}

Config config_from_json(const SearchSpace& space, const nlohmann::json& doc) {
  if (!doc.is_object()) throw SchemaError("config must be a JSON object");
  Config config;
  for (const auto& p : space.params) {
    if (!doc.contains(p.name))
      throw SchemaError("config is missing parameter '" + p.name + "'");
    const auto& v = doc[p.name];
    switch (p.kind) {
      case ParamKind::continuous:
        if (!v.is_number()) throw SchemaError("parameter '" + p.name + "' must be numeric");
        config.values[p.name] = v.get<double>();
        break;
      case ParamKind::integer:
        if (!v.is_number_integer())
          throw SchemaError("parameter '" + p.name + "' must be an integer");
        config.values[p.name] = v.get<std::int64_t>();
        break;
      case ParamKind::categorical:
        if (!v.is_string()) throw SchemaError("parameter '" + p.name + "' must be a string");
        config.values[p.name] = v.get<std::string>();
        break;
    }
  }
  validate_config(space, config);
  return config;
}

std::vector<Config> sample_random(const SearchSpace& space, int n, std::uint64_t seed) {
  space.validate();
  if (n < 0) throw ValidationError("sample_random: n must be >= 0");
  Rng rng(seed);
  std::vector<Config> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    UnitPoint point;
    point.coords.resize(static_cast<Eigen::Index>(space.dim()));
    for (std::size_t d = 0; d < space.dim(); ++d)
      point.coords[static_cast<Eigen::Index>(d)] = rng.uniform01();
    out.push_back(denormalize(space, point));
  }
  return out;
}

std::vector<Config> sample_sobol(const SearchSpace& space, int n, std::uint64_t seed) {
  space.validate();
  if (n < 0) throw ValidationError("sample_sobol: n must be >= 0");
  if (space.dim() > static_cast<std::size_t>(kSobolMaxDim))
    throw ValidationError("sample_sobol supports at most " + std::to_string(kSobolMaxDim) +
                          " dimensions, got " + std::to_string(space.dim()));
  SobolSequence seq(static_cast<int>(space.dim()), seed);
  std::vector<Config> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::vector<double> u = seq.next();
    UnitPoint point;
    point.coords.resize(static_cast<Eigen::Index>(space.dim()));
    for (std::size_t d = 0; d < space.dim(); ++d)
      point.coords[static_cast<Eigen::Index>(d)] = u[d];
    out.push_back(denormalize(space, point));
  }
  return out;
}

std::vector<Config> sample_lhc(const SearchSpace& space, int n, std::uint64_t seed) {
  space.validate();
  if (n < 0) throw ValidationError("sample_lhc: n must be >= 0");
  if (n == 0) return {};
  Rng rng(seed);
  // One stratified permutation per dimension: point i gets stratum perm[i],
  // jittered uniformly inside the stratum.
  Eigen::MatrixXd grid(n, static_cast<Eigen::Index>(space.dim()));
  for (std::size_t d = 0; d < space.dim(); ++d) {
    const std::vector<int> perm = rng.permutation(n);
    for (int i = 0; i < n; ++i)
      grid(i, static_cast<Eigen::Index>(d)) =
          (static_cast<double>(perm[static_cast<std::size_t>(i)]) + rng.uniform01()) /
          static_cast<double>(n);
  }
  std::vector<Config> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    UnitPoint point;
    point.coords = grid.row(i).transpose();
    out.push_back(denormalize(space, point));
  }
  return out;
}

std::vector<UnitPoint> normalize_all(const SearchSpace& space, const std::vector<Config>& configs) {
  std::vector<UnitPoint> out;
  out.reserve(configs.size());
  for (const auto& c : configs) out.push_back(normalize(space, c));
  return out;
}

}  // namespace llambo
