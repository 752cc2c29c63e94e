#include "nmutant/calibration_file.hpp"

#include <json.hpp>

#include "nmutant/error.hpp"

namespace nmutant {

namespace {

constexpr int kVersion = 1;

nlohmann::ordered_json op_json(const MutationOp& op) {
  nlohmann::ordered_json j;
  if (const auto* p = std::get_if<PixelMutation>(&op)) {
    j["kind"] = "pixel";
    j["step_size"] = p->step_size;
  } else if (const auto* o = std::get_if<OcclusionMutation>(&op)) {
    j["kind"] = "occlusion";
    j["height"] = o->height;
    j["width"] = o->width;
  } else {
    j["kind"] = "lighting";
    j["delta_max"] = std::get<LightingMutation>(op).delta_max;
  }
  return j;
}

MutationOp op_from(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "pixel") return PixelMutation{j.at("step_size").get<std::size_t>()};
  if (kind == "occlusion") return OcclusionMutation{j.at("height").get<std::size_t>(), j.at("width").get<std::size_t>()};
  if (kind == "lighting") return LightingMutation{j.at("delta_max").get<double>()};
  throw FormatError("unknown mutation kind '" + kind + "'");
}

}  // namespace

CalibrationFile make_calibration_file(const Calibration& calibration, const MutationOp& op, std::size_t n,
                                      std::uint64_t seed) {
  CalibrationFile file;
  file.kappa1 = calibration.kappa1;
  file.mutation = op;
  file.level = calibration.normal.confidence_level;
  file.mutations_per_sample = n;
  file.samples = calibration.normal.per_sample.size();
  file.kappa_nor_mean = calibration.normal.mean;
  file.half_width = calibration.normal.half_width;
  file.floored = calibration.floored;
  file.seed = seed;
  return file;
}

std::string calibration_to_json(const CalibrationFile& file) {
  nlohmann::ordered_json doc;
  doc["version"] = kVersion;
  doc["kappa1"] = file.kappa1;
  doc["mutation"] = op_json(file.mutation);
  doc["level"] = file.level;
  doc["mutations_per_sample"] = file.mutations_per_sample;
  doc["samples"] = file.samples;
  doc["kappa_nor_mean"] = file.kappa_nor_mean;
  doc["half_width"] = file.half_width;
  doc["floored"] = file.floored;
  doc["seed"] = file.seed;
  return doc.dump(1) + "\n";
}

CalibrationFile calibration_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("version").get<int>() != kVersion) throw FormatError("unsupported calibration version");
    CalibrationFile file;
    file.kappa1 = doc.at("kappa1").get<double>();
    file.mutation = op_from(doc.at("mutation"));
    file.level = doc.at("level").get<double>();
    file.mutations_per_sample = doc.at("mutations_per_sample").get<std::size_t>();
    file.samples = doc.at("samples").get<std::size_t>();
    file.kappa_nor_mean = doc.at("kappa_nor_mean").get<double>();
    file.half_width = doc.at("half_width").get<double>();
    file.floored = doc.at("floored").get<bool>();
    file.seed = doc.at("seed").get<std::uint64_t>();
    return file;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed calibration file: ") + e.what());
  }
}

std::string mutation_to_json(const MutationOp& op) { return op_json(op).dump(); }

MutationOp mutation_from_json(const std::string& text) {
  try {
    return op_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed mutation: ") + e.what());
  }
}

}  // namespace nmutant
