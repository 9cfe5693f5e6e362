#include "lstmkf/weights_io.hpp"

#include <fstream>

namespace lstmkf {

using nlohmann::json;

json module_to_json(const NetModule& module) {
  json j;
  j["keep_prob"] = module.keep_prob;
  j["lstm"] = json::array();
  for (const LstmLayer& l : module.lstm) j["lstm"].push_back({{"input", l.input_size}, {"hidden", l.hidden_size}});
  j["linear"] = json::array();
  for (const LinearLayer& l : module.linear) {
    j["linear"].push_back({{"input", l.input_size()}, {"output", l.output_size()}, {"rectify", l.rectify}});
  }
  json arrays = json::object();
  for (const Parameter* p : module.parameters()) {
    arrays[p->name] = {{"shape", {p->value.rows(), p->value.cols()}}, {"data", p->value.values()}};
  }
  j["arrays"] = std::move(arrays);
  return j;
}

void load_module_weights(const json& j, NetModule& module) {
  if (!j.contains("arrays") || !j["arrays"].is_object()) throw WeightFormatError("weights: missing arrays");
  const json& arrays = j["arrays"];
  std::vector<Matrix> staged;
  for (const Parameter* p : module.parameters()) {
    if (!arrays.contains(p->name)) throw WeightFormatError("weights: missing array " + p->name);
    const json& a = arrays[p->name];
    const auto rows = a.at("shape").at(0).get<std::size_t>();
    const auto cols = a.at("shape").at(1).get<std::size_t>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw WeightFormatError("weights: array " + p->name + " has shape " + std::to_string(rows) + "x" +
                              std::to_string(cols) + ", module expects " + p->value.shape_string());
    }
    auto data = a.at("data").get<std::vector<double>>();
    if (data.size() != rows * cols) {
      throw WeightFormatError("weights: array " + p->name + " holds " + std::to_string(data.size()) +
                              " values for shape " + p->value.shape_string());
    }
    staged.emplace_back(rows, cols, std::move(data));
  }
  if (arrays.size() != staged.size()) {
    throw WeightFormatError("weights: container holds " + std::to_string(arrays.size()) +
                            " arrays, module has " + std::to_string(staged.size()));
  }
  std::size_t k = 0;
  for (Parameter* p : module.parameters()) {
    p->value = std::move(staged[k++]);
    p->zero_grad();
  }
}

NetModule module_from_json(const json& j) {
  try {
    NetModule m;
    m.keep_prob = j.at("keep_prob").get<double>();
    std::size_t k = 0;
    for (const json& l : j.at("lstm")) {
      m.lstm.emplace_back(l.at("input").get<std::size_t>(), l.at("hidden").get<std::size_t>(),
                          "lstm" + std::to_string(k++));
    }
    k = 0;
    for (const json& l : j.at("linear")) {
      m.linear.emplace_back(l.at("input").get<std::size_t>(), l.at("output").get<std::size_t>(),
                            l.at("rectify").get<bool>(), "fc" + std::to_string(k++));
    }
    m.validate();
    load_module_weights(j, m);
    return m;
  } catch (const json::exception& e) {
    throw WeightFormatError(std::string("weights: ") + e.what());
  } catch (const DimensionError& e) {
    throw WeightFormatError(std::string("weights: ") + e.what());
  }
}

json modules_to_json(const std::map<std::string, const NetModule*>& modules) {
  json container;
  container["format"] = kWeightFormat;
  container["version"] = kWeightVersion;
  container["modules"] = json::object();
  for (const auto& [name, module] : modules) container["modules"][name] = module_to_json(*module);
  return container;
}

std::map<std::string, NetModule> modules_from_json(const json& container) {
  if (!container.is_object() || container.value("format", "") != kWeightFormat) {
    throw WeightFormatError("weights: not an lstmkf-weights container");
  }
  if (container.value("version", 0) != kWeightVersion) {
    throw WeightFormatError("weights: unsupported version");
  }
  std::map<std::string, NetModule> out;
  for (const auto& [name, j] : container.at("modules").items()) out.emplace(name, module_from_json(j));
  return out;
}

void save_weights(const std::string& path, const std::map<std::string, const NetModule*>& modules) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << modules_to_json(modules).dump() << '\n';
}

std::map<std::string, NetModule> load_weights(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw WeightFormatError(std::string("weights: ") + e.what());
  }
  return modules_from_json(j);
}

}  // namespace lstmkf
