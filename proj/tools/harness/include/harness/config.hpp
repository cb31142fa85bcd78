#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "heatest/diffusivity.hpp"
#include "heatest/estimator.hpp"
#include "heatest/kernel.hpp"
#include "heatest/simulator.hpp"

namespace heatest::harness {

using Json = nlohmann::ordered_json;

/// Parses the TOML subset used by run configs: [tables], dotted keys,
/// strings, numbers, booleans, arrays and inline tables. Throws ConfigError
/// with the line number on malformed input.
Json parse_config_text(std::string_view text, const std::string& origin = "<config>");
Json load_config(const std::filesystem::path& path);

/// Applies "a.b.c=value"; the value uses config syntax, falling back to a
/// bare string.
void apply_override(Json& config, const std::string& assignment);

const Json* find(const Json& config, std::string_view dotted);
double get_number(const Json& config, std::string_view key);
double get_number(const Json& config, std::string_view key, double fallback);
std::int64_t get_integer(const Json& config, std::string_view key);
std::int64_t get_integer(const Json& config, std::string_view key, std::int64_t fallback);
std::string get_string(const Json& config, std::string_view key, const std::string& fallback);
bool get_bool(const Json& config, std::string_view key, bool fallback);
std::vector<double> get_numbers(const Json& config, std::string_view key,
                                const std::vector<double>& fallback);

/// Model block: theta, sigma, T, nt, nx, epsilon, seed.
struct ModelConfig {
  SimulationSpec spec;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  bool diagnostic = false;
};

DiffusivityField theta_from_json(const Json& theta, const std::string& key = "theta");
Kernel kernel_from_json(const Json* kernel);
ModelConfig model_from_config(const Json& config);
/// [estimator] block at a given eps; h = "auto" picks the default rule.
EstimatorConfig estimator_from_config(const Json& config, double eps, double sigma);

std::size_t thread_count(std::optional<std::size_t> requested);

}  // namespace heatest::harness
