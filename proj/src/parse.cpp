#include <cctype>
#include <charconv>
#include <cmath>

#include <json.hpp>

#include "llambo/llm.hpp"

namespace llambo {

namespace {

using nlohmann::json;

struct Region {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the closing bracket
  json value;
};

// Balanced {...} / [...] spans that parse as JSON, in order of appearance.
// String-aware so braces inside quoted values do not confuse the scan; code
// fences and prose around the JSON are ignored by construction.
std::vector<Region> json_regions(const std::string& text) {
  std::vector<Region> regions;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char open = text[i];
    if (open != '{' && open != '[') continue;
    const char close = open == '{' ? '}' : ']';
    int depth = 0;
    bool in_string = false, escaped = false;
    for (std::size_t j = i; j < text.size(); ++j) {
      const char c = text[j];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == open) {
        ++depth;
      } else if (c == close) {
        if (--depth == 0) {
          const json parsed = json::parse(text.substr(i, j - i + 1), nullptr, false);
          if (!parsed.is_discarded()) regions.push_back({i, j + 1, parsed});
          break;
        }
      }
    }
  }
  return regions;
}

bool full_string_number(const std::string& s, double& out) {
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end;
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string brief(const json& j) {
  const std::string dump = j.dump();
  return dump.size() <= 40 ? dump : dump.substr(0, 37) + "...";
}

// A JSON number, or a string that is entirely one ("0.5" coerces to 0.5).
double numeric_value(const ParamSpec& spec, const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    double v = 0.0;
    if (full_string_number(j.get<std::string>(), v)) return v;
  }
  throw ParseError(ParseErrorKind::format,
                   "parameter '" + spec.name + "': expected a number, got " + brief(j));
}

void check_bounds(const ParamSpec& spec, double v) {
  if (v < spec.lower || v > spec.upper)
    throw ParseError(ParseErrorKind::out_of_bounds,
                     "parameter '" + spec.name + "' = " + std::to_string(v) + " outside [" +
                         std::to_string(spec.lower) + ", " + std::to_string(spec.upper) + "]");
}

Config config_from_object(const SearchSpace& space, const json& obj) {
  if (!obj.is_object())
    throw ParseError(ParseErrorKind::format, "expected a JSON object, got " + brief(obj));
  Config config;
  for (const ParamSpec& spec : space.params) {
    const auto it = obj.find(spec.name);
    if (it == obj.end())
      throw ParseError(ParseErrorKind::missing_key, "missing key '" + spec.name + "'");
    const json& j = *it;
    switch (spec.kind) {
      case ParamKind::continuous: {
        const double v = numeric_value(spec, j);
        check_bounds(spec, v);
        config.values[spec.name] = v;
        break;
      }
      case ParamKind::integer: {
        const double v = numeric_value(spec, j);
        if (v != std::floor(v))
          throw ParseError(ParseErrorKind::out_of_bounds,
                           "parameter '" + spec.name + "' = " + std::to_string(v) +
                               " is not an integer");
        check_bounds(spec, v);
        config.values[spec.name] = static_cast<std::int64_t>(v);
        break;
      }
      case ParamKind::categorical: {
        if (!j.is_string())
          throw ParseError(ParseErrorKind::format,
                           "parameter '" + spec.name + "': expected a string, got " + brief(j));
        const std::string v = j.get<std::string>();
        if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
          std::string choices;
          for (std::size_t c = 0; c < spec.choices.size(); ++c)
            choices += (c ? ", " : "") + spec.choices[c];
          throw ParseError(ParseErrorKind::out_of_bounds,
                           "parameter '" + spec.name + "' = '" + v + "' is not one of {" +
                               choices + "}");
        }
        config.values[spec.name] = v;
        break;
      }
    }
  }
  return config;  // unknown keys in obj are ignored
}

}  // namespace

ParsedReply parse_response(const std::string& text, ReplySchema schema, const SearchSpace& space,
                           int expected_count) {
  ParsedReply reply;
  switch (schema) {
    case ReplySchema::score: {
      if (full_string_number(trim(text), reply.score)) return reply;
      for (const Region& region : json_regions(text)) {
        if (!region.value.is_object()) continue;
        const auto it = region.value.find("score");
        if (it == region.value.end()) continue;
        if (it->is_number()) {
          reply.score = it->get<double>();
          return reply;
        }
        if (it->is_string() && full_string_number(it->get<std::string>(), reply.score))
          return reply;
      }
      throw ParseError(ParseErrorKind::format, "no numeric score found in reply");
    }
    case ReplySchema::config: {
      for (const Region& region : json_regions(text)) {
        if (!region.value.is_object()) continue;
        reply.configs.push_back(config_from_object(space, region.value));
        return reply;
      }
      throw ParseError(ParseErrorKind::format, "no JSON object found in reply");
    }
    case ReplySchema::config_list: {
      for (const Region& region : json_regions(text)) {
        if (!region.value.is_array()) continue;
        const json& arr = region.value;
        if (expected_count >= 0 && static_cast<int>(arr.size()) != expected_count)
          throw ParseError(ParseErrorKind::arity,
                           "expected " + std::to_string(expected_count) +
                               " configurations, got " + std::to_string(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) {
          try {
            reply.configs.push_back(config_from_object(space, arr[i]));
          } catch (const ParseError& e) {
            throw ParseError(e.kind(), "entry " + std::to_string(i) + ": " + e.what());
          }
        }
        return reply;
      }
      throw ParseError(ParseErrorKind::format, "no JSON array found in reply");
    }
  }
  throw Error("unreachable reply schema");
}

LenientConfigList parse_config_list_lenient(const std::string& text, const SearchSpace& space,
                                            int max_keep) {
  LenientConfigList out;
  const std::vector<Region> regions = json_regions(text);

  for (const Region& region : regions) {
    if (!region.value.is_array()) continue;
    out.found_array = true;
    for (const json& element : region.value) {
      if (static_cast<int>(out.valid.size()) >= max_keep) break;
      try {
        out.valid.push_back(config_from_object(space, element));
      } catch (const ParseError& e) {
        ++out.invalid;
        if (out.first_error.empty()) out.first_error = e.what();
      }
    }
    return out;
  }

  // No array anywhere: salvage loose objects, skipping regions nested inside
  // an object that already yielded a valid config.
  std::size_t skip_until = 0;
  for (const Region& region : regions) {
    if (static_cast<int>(out.valid.size()) >= max_keep) break;
    if (region.begin < skip_until || !region.value.is_object()) continue;
    try {
      out.valid.push_back(config_from_object(space, region.value));
      skip_until = region.end;
    } catch (const ParseError& e) {
      ++out.invalid;
      if (out.first_error.empty()) out.first_error = e.what();
    }
  }
  return out;
}

}  // namespace llambo
