#pragma once

#include <string>

#include "spinmesh/flows.hpp"

namespace spinmesh {

// On-disk carrier of a CurvatureMap:
// {face_count, h_star, A_star, total_area, source_id, format_version: 1}.
// Round-trips lossslessly at float64 precision.
void write_curvature_sidecar(const std::string& path, const CurvatureMap& map);
CurvatureMap read_curvature_sidecar(const std::string& path);

} // namespace spinmesh
