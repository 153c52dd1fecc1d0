#pragma once

#include <map>
#include <string>
#include <vector>

#include "spinmesh/mesh_data.hpp"

namespace spinmesh {

enum class MeshFormat { Obj, Off, PlyAscii, PlyBinary };

// Mesh plus optional named per-face float properties (PLY only; the other
// formats drop them on write and never produce them on read).
struct MeshFile {
  MeshData mesh;
  std::map<std::string, std::vector<double>> face_properties;
};

// Format from the file extension: .obj, .off, .ply. Throws IoError otherwise.
MeshFormat format_from_path(const std::string& path);

MeshFile read_mesh(const std::string& path);
// `format` defaults to the extension; PLY defaults to binary little-endian.
void write_mesh(const std::string& path, const MeshFile& file);
void write_mesh(const std::string& path, const MeshFile& file, MeshFormat format);

} // namespace spinmesh
