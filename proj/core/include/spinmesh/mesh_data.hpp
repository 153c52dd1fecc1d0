#pragma once

#include <array>
#include <vector>

#include "spinmesh/quaternion.hpp"

namespace spinmesh {

// Raw indexed triangle soup, the exchange type between file I/O, the shape
// generators and net construction.
struct MeshData {
  std::vector<Vec3> positions;
  std::vector<std::array<int, 3>> faces;  // counter-clockwise, outward
};

} // namespace spinmesh
