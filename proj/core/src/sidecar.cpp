#include "spinmesh/sidecar.hpp"

#include <fstream>
#include <json.hpp>

#include "spinmesh/errors.hpp"

namespace spinmesh {

void write_curvature_sidecar(const std::string& path, const CurvatureMap& map) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  doc["face_count"] = map.face_count;
  doc["total_area"] = map.total_area;
  doc["source_id"] = map.source_id;
  doc["h_star"] = std::vector<double>(map.h_star.data(), map.h_star.data() + map.h_star.size());
  doc["A_star"] = std::vector<double>(map.A_star.data(), map.A_star.data() + map.A_star.size());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(1) << "\n";
}

CurvatureMap read_curvature_sidecar(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": invalid JSON (" + e.what() + ")");
  }
  CurvatureMap map;
  try {
    if (doc.at("format_version").get<int>() != 1)
      throw IoError(path + ": unsupported sidecar format_version");
    map.face_count = doc.at("face_count").get<int>();
    map.total_area = doc.at("total_area").get<double>();
    map.source_id = doc.value("source_id", std::string());
    const auto h = doc.at("h_star").get<std::vector<double>>();
    const auto a = doc.at("A_star").get<std::vector<double>>();
    if (static_cast<int>(h.size()) != map.face_count ||
        static_cast<int>(a.size()) != map.face_count)
      throw IoError(path + ": sidecar array length does not match face_count");
    map.h_star = Eigen::Map<const Eigen::VectorXd>(h.data(), h.size());
    map.A_star = Eigen::Map<const Eigen::VectorXd>(a.data(), a.size());
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": malformed sidecar (" + e.what() + ")");
  }
  for (int i = 0; i < map.A_star.size(); ++i)
    if (!(map.A_star[i] > 0.0)) throw IoError(path + ": non-positive A_star entry");
  if (!(map.total_area > 0.0)) throw IoError(path + ": non-positive total_area");
  return map;
}

} // namespace spinmesh
