#pragma once

#include <map>
#include <string>

#include "json.hpp"
#include "lstmkf/lstm.hpp"

namespace lstmkf {

/// Thrown for unreadable or inconsistent weight containers.
class WeightFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kWeightFormat = "lstmkf-weights";
inline constexpr int kWeightVersion = 1;

/**
 * Weight container layout (JSON, numbers printed with round-trip precision):
 *
 *   { "format": "lstmkf-weights", "version": 1,
 *     "modules": { "<name>": {
 *         "keep_prob": 1.0,
 *         "lstm":   [ {"input": d, "hidden": h}, ... ],
 *         "linear": [ {"input": h, "output": d, "rectify": false}, ... ],
 *         "arrays": { "lstm0.W_fh": {"shape": [h, h], "data": [...row-major...]}, ... } } } }
 */
nlohmann::json module_to_json(const NetModule& module);

/// Builds a module with the stored architecture and weights.
NetModule module_from_json(const nlohmann::json& j);

/// Copies stored arrays into an existing module. Every array must be present
/// with exactly the module's shape; otherwise WeightFormatError and `module`
/// is left unchanged.
void load_module_weights(const nlohmann::json& j, NetModule& module);

nlohmann::json modules_to_json(const std::map<std::string, const NetModule*>& modules);
std::map<std::string, NetModule> modules_from_json(const nlohmann::json& container);

void save_weights(const std::string& path, const std::map<std::string, const NetModule*>& modules);
std::map<std::string, NetModule> load_weights(const std::string& path);

}  // namespace lstmkf
