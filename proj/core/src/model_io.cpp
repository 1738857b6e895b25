#include "fekl/model_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fekl {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd vector_from_json(const json& a, const char* what) {
  if (!a.is_array() || a.empty())
    throw FileFormatError(std::string("model file: ") + what + " must be a non-empty array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number())
      throw FileFormatError(std::string("model file: ") + what + " entries must be numbers");
    v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  }
  return v;
}

}  // namespace

std::string model_to_json(const FreeEnergyModel& model) {
  json j;
  j["beta"] = model.beta();
  j["anchor"] = vector_to_json(model.anchor());
  json kernels = json::array();
  for (int k = 0; k < model.n_kernels(); ++k) {
    json unit;
    unit["center"] = vector_to_json(model.kernel(k).center);
    unit["bandwidth"] = vector_to_json(model.kernel(k).tau);
    unit["theta"] = model.theta()[k];
    kernels.push_back(std::move(unit));
  }
  j["kernels"] = std::move(kernels);
  return j.dump(2) + "\n";
}

FreeEnergyModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FileFormatError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("beta") || !j.contains("anchor") || !j.contains("kernels"))
    throw FileFormatError("model file must contain beta, anchor and kernels");
  if (!j["beta"].is_number() || !(j["beta"].get<double>() > 0.0))
    throw FileFormatError("model file: beta must be a positive number");

  FreeEnergyModel model(j["beta"].get<double>(), vector_from_json(j["anchor"], "anchor"));
  if (!j["kernels"].is_array()) throw FileFormatError("model file: kernels must be an array");
  for (const auto& unit : j["kernels"]) {
    if (!unit.is_object() || !unit.contains("center") || !unit.contains("bandwidth") ||
        !unit.contains("theta"))
      throw FileFormatError("model file: each kernel needs center, bandwidth and theta");
    const Eigen::VectorXd center = vector_from_json(unit["center"], "kernel center");
    const Eigen::VectorXd tau = vector_from_json(unit["bandwidth"], "kernel bandwidth");
    if (center.size() != model.anchor().size())
      throw FileFormatError("model file: kernel dimension does not match anchor");
    for (Eigen::Index l = 0; l < tau.size(); ++l)
      if (!(tau[l] > 0.0)) throw FileFormatError("model file: kernel bandwidths must be positive");
    if (!unit["theta"].is_number())
      throw FileFormatError("model file: kernel theta must be a number");
    const double theta = unit["theta"].get<double>();
    if (!std::isfinite(theta)) throw FileFormatError("model file: kernel theta must be finite");
    try {
      model.append_kernel(KernelUnit(center, tau), theta);
    } catch (const ContractViolation& e) {
      throw FileFormatError(std::string("model file: ") + e.what());
    }
  }
  return model;
}

void save_model(const FreeEnergyModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FileFormatError("cannot open model file for writing: " + path);
  out << model_to_json(model);
  if (!out) throw FileFormatError("failed writing model file: " + path);
}

FreeEnergyModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileFormatError("cannot open model file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace fekl
