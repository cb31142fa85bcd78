#include "harness/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "heatest/error.hpp"

namespace heatest::harness {

namespace {

class Parser {
 public:
  Parser(std::string_view text, std::string origin) : s_(text), origin_(std::move(origin)) {}

  Json document() {
    Json root = Json::object();
    Json* table = &root;
    while (true) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_space();
        const std::vector<std::string> path = key_path();
        skip_inline_space();
        expect(']');
        end_of_line();
        table = &descend(root, path, true);
        continue;
      }
      const std::vector<std::string> path = key_path();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      Json v = value();
      assign(*table, path, std::move(v));
      end_of_line();
    }
    return root;
  }

  Json single_value() {
    skip_inline_space();
    Json v = value();
    skip_inline_space();
    if (!eof()) fail("trailing characters after value");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < s_.size(); ++i) line += s_[i] == '\n';
    throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + what);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_space() {
    while (!eof() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!eof() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!eof()) {
      skip_inline_space();
      skip_comment();
      if (peek() == '\n') {
        ++pos_;
        continue;
      }
      break;
    }
  }

  // whitespace, comments and newlines inside arrays
  void skip_any_space() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos_;
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (eof()) return;
    if (peek() != '\n') fail("unexpected characters after value");
    ++pos_;
  }

  std::string key_part() {
    if (peek() == '"' || peek() == '\'') return string_value();
    const std::size_t start = pos_;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' ||
                      peek() == '-')) {
      ++pos_;
    }
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::vector<std::string> key_path() {
    std::vector<std::string> parts{key_part()};
    while (true) {
      skip_inline_space();
      if (peek() != '.') break;
      ++pos_;
      skip_inline_space();
      parts.push_back(key_part());
    }
    return parts;
  }

  Json& descend(Json& root, const std::vector<std::string>& path, bool is_header) {
    Json* cur = &root;
    for (const std::string& p : path) {
      if (!cur->contains(p)) (*cur)[p] = Json::object();
      cur = &(*cur)[p];
      if (!cur->is_object()) fail("key '" + p + "' is not a table");
    }
    (void)is_header;
    return *cur;
  }

  void assign(Json& table, const std::vector<std::string>& path, Json v) {
    Json* cur = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      if (!cur->contains(path[i])) (*cur)[path[i]] = Json::object();
      cur = &(*cur)[path[i]];
      if (!cur->is_object()) fail("key '" + path[i] + "' is not a table");
    }
    if (cur->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*cur)[path.back()] = std::move(v);
  }

  std::string string_value() {
    const char q = peek();
    ++pos_;
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = s_[pos_++];
      if (c == q) break;
      if (c == '\\' && q == '"') {
        if (eof()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
        continue;
      }
      out += c;
    }
    return out;
  }

  Json number_or_word() {
    const std::size_t start = pos_;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
          c == '_') {
        ++pos_;
      } else {
        break;
      }
    }
    std::string tok(s_.substr(start, pos_ - start));
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    if (tok == "nan") return std::numeric_limits<double>::quiet_NaN();
    std::string clean;
    for (char c : tok) {
      if (c != '_') clean += c;
    }
    const bool is_float = clean.find_first_of(".eE") != std::string::npos;
    char* end = nullptr;
    if (!is_float) {
      const long long v = std::strtoll(clean.c_str(), &end, 10);
      if (end && *end == '\0' && !clean.empty()) return static_cast<std::int64_t>(v);
    }
    const double d = std::strtod(clean.c_str(), &end);
    if (!end || *end != '\0' || clean.empty()) fail("invalid value '" + tok + "'");
    return d;
  }

  Json value() {
    const char c = peek();
    if (c == '"' || c == '\'') return string_value();
    if (c == '[') {
      ++pos_;
      Json arr = Json::array();
      skip_any_space();
      while (peek() != ']') {
        arr.push_back(value());
        skip_any_space();
        if (peek() == ',') {
          ++pos_;
          skip_any_space();
        } else if (peek() != ']') {
          fail("expected ',' or ']' in array");
        }
      }
      ++pos_;
      return arr;
    }
    if (c == '{') {
      ++pos_;
      Json tbl = Json::object();
      skip_inline_space();
      while (peek() != '}') {
        const std::vector<std::string> path = key_path();
        skip_inline_space();
        expect('=');
        skip_inline_space();
        assign(tbl, path, value());
        skip_inline_space();
        if (peek() == ',') {
          ++pos_;
          skip_inline_space();
        } else if (peek() != '}') {
          fail("expected ',' or '}' in inline table");
        }
      }
      ++pos_;
      return tbl;
    }
    return number_or_word();
  }

  std::string_view s_;
  std::string origin_;
  std::size_t pos_ = 0;
};

std::string key_str(std::string_view k) { return std::string(k); }

[[noreturn]] void type_error(std::string_view key, const char* want) {
  throw ConfigError("config key '" + key_str(key) + "' must be " + want);
}

}  // namespace

Json parse_config_text(std::string_view text, const std::string& origin) {
  return Parser(text, origin).document();
}

Json load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (path.extension() == ".json") {
    // a run manifest: replay its config snapshot
    Json j;
    try {
      j = Json::parse(text);
    } catch (const std::exception& e) {
      throw ConfigError("invalid JSON in '" + path.string() + "': " + e.what());
    }
    if (j.contains("config")) return j["config"];
    return j;
  }
  return parse_config_text(text, path.string());
}

void apply_override(Json& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  Json v;
  try {
    v = Parser(raw, "--override " + key).single_value();
  } catch (const ConfigError&) {
    v = raw;
  }
  Json* cur = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
    if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
    if (dot == std::string::npos) {
      (*cur)[part] = std::move(v);
      return;
    }
    if (!cur->contains(part) || !(*cur)[part].is_object()) (*cur)[part] = Json::object();
    cur = &(*cur)[part];
    start = dot + 1;
  }
}

const Json* find(const Json& config, std::string_view dotted) {
  const Json* cur = &config;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const std::string part(dotted.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (!cur->is_object()) return nullptr;
    auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    cur = &*it;
    if (dot == std::string_view::npos) return cur;
    start = dot + 1;
  }
}

double get_number(const Json& config, std::string_view key) {
  const Json* v = find(config, key);
  if (!v) throw ConfigError("missing config key '" + key_str(key) + "'");
  if (!v->is_number()) type_error(key, "a number");
  return v->get<double>();
}

double get_number(const Json& config, std::string_view key, double fallback) {
  return find(config, key) ? get_number(config, key) : fallback;
}

std::int64_t get_integer(const Json& config, std::string_view key) {
  const Json* v = find(config, key);
  if (!v) throw ConfigError("missing config key '" + key_str(key) + "'");
  if (v->is_number_integer()) return v->get<std::int64_t>();
  if (v->is_number_float()) {
    const double d = v->get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  type_error(key, "an integer");
}

std::int64_t get_integer(const Json& config, std::string_view key, std::int64_t fallback) {
  return find(config, key) ? get_integer(config, key) : fallback;
}

std::string get_string(const Json& config, std::string_view key, const std::string& fallback) {
  const Json* v = find(config, key);
  if (!v) return fallback;
  if (!v->is_string()) type_error(key, "a string");
  return v->get<std::string>();
}

bool get_bool(const Json& config, std::string_view key, bool fallback) {
  const Json* v = find(config, key);
  if (!v) return fallback;
  if (!v->is_boolean()) type_error(key, "a boolean");
  return v->get<bool>();
}

std::vector<double> get_numbers(const Json& config, std::string_view key,
                                const std::vector<double>& fallback) {
  const Json* v = find(config, key);
  if (!v) return fallback;
  if (v->is_number()) return {v->get<double>()};
  if (!v->is_array()) type_error(key, "an array of numbers");
  std::vector<double> out;
  for (const auto& e : *v) {
    if (!e.is_number()) type_error(key, "an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

DiffusivityField theta_from_json(const Json& theta, const std::string& key) {
  if (theta.is_number()) return DiffusivityField::constant(theta.get<double>());
  if (!theta.is_object()) type_error(key, "a number or a table {kind = ...}");
  const std::string kind = get_string(theta, "kind", "");
  try {
    if (kind == "constant") return DiffusivityField::constant(get_number(theta, "value"));
    if (kind == "test_profile") {
      const DiffusivityField f = DiffusivityField::logistic_profile();
      const double s = get_number(theta, "scale", 1.0);
      return s == 1.0 ? f : f.scaled(s);
    }
    if (kind == "logistic") {
      return DiffusivityField::logistic_pair(get_number(theta, "a"), get_number(theta, "c1"),
                                             get_number(theta, "b"), get_number(theta, "c2"),
                                             get_number(theta, "steepness"));
    }
  } catch (const ConfigError& e) {
    throw ConfigError(key + ": " + e.what());
  }
  if (kind.empty()) throw ConfigError("missing config key '" + key + ".kind'");
  throw ConfigError("config key '" + key + ".kind': unknown diffusivity '" + kind + "'");
}

Kernel kernel_from_json(const Json* kernel) {
  if (!kernel) return bump_kernel();
  if (!kernel->is_object()) type_error("estimator.kernel", "a table {family, delta_order}");
  const std::string family = get_string(*kernel, "family", "bump");
  if (family != "bump") {
    throw ConfigError("config key 'estimator.kernel.family': unknown family '" + family + "'");
  }
  const auto k = get_integer(*kernel, "delta_order", 0);
  if (k < 0 || k > 4) throw ConfigError("config key 'estimator.kernel.delta_order' must be 0..4");
  return delta_order_kernel(bump_kernel(), static_cast<int>(k));
}

ModelConfig model_from_config(const Json& config) {
  const Json* theta = find(config, "theta");
  if (!theta) throw ConfigError("missing config key 'theta'");
  const double T = get_number(config, "T");
  const auto nt = get_integer(config, "nt");
  const auto nx = get_integer(config, "nx");
  if (nt <= 0 || nx <= 0) throw ConfigError("config keys 'nt' and 'nx' must be positive");
  ModelConfig m{SimulationSpec{SpaceTimeGrid(T, static_cast<std::size_t>(nt),
                                             static_cast<std::size_t>(nx)),
                               theta_from_json(*theta), get_number(config, "sigma"), 1.0},
                0.0, 0, false};
  m.spec.noise_scale_hook = get_number(config, "noise_scale_hook", 1.0);
  m.epsilon = get_number(config, "epsilon", 0.0);
  const auto seed = get_integer(config, "seed", 0);
  if (seed < 0) throw ConfigError("config key 'seed' must be non-negative");
  m.seed = static_cast<std::uint64_t>(seed);
  m.diagnostic = get_bool(config, "diagnostic", false);
  return m;
}

EstimatorConfig estimator_from_config(const Json& config, double eps, double sigma) {
  EstimatorConfig c;
  c.eps = eps;
  c.sigma = sigma;
  c.x0 = get_number(config, "estimator.x0", c.x0);
  c.gamma = get_number(config, "estimator.gamma", c.gamma);
  c.margin_factor = get_number(config, "estimator.margin_factor", c.margin_factor);
  c.info_floor = get_number(config, "estimator.info_floor", c.info_floor);
  try {
    c.weights = parse_weight_scheme(get_string(config, "estimator.weights", "uniform"));
    c.delta_variant = parse_delta_variant(get_string(config, "estimator.delta_variant", "sqrt_eps"));
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
  if (const Json* h = find(config, "estimator.h")) {
    if (h->is_string()) {
      const std::string rule = h->get<std::string>();
      if (rule == "cube_root") {
        c.h = std::cbrt(eps);
      } else if (rule == "sqrt_eps") {
        c.h = std::sqrt(eps);
      } else if (rule != "auto") {
        throw ConfigError("config key 'estimator.h' must be a number, \"auto\", \"sqrt_eps\" or "
                          "\"cube_root\"");
      }
    } else if (h->is_number()) {
      c.h = h->get<double>();
    } else {
      type_error("estimator.h", "a number or a rule name");
    }
  }
  c.kernel = kernel_from_json(find(config, "estimator.kernel"));
  return c;
}

std::size_t thread_count(std::optional<std::size_t> requested) {
  if (requested && *requested > 0) return *requested;
  if (const char* env = std::getenv("HEATEST_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace heatest::harness
