#include "spinmesh/mesh_io.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spinmesh/errors.hpp"

namespace spinmesh {

namespace {

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(), ::tolower);
  return ext;
}

int parse_index(const std::string& token, int vertex_count, const std::string& path) {
  // OBJ faces may carry v/vt/vn; only the vertex index matters here.
  const std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    idx = std::stoi(head);
  } catch (...) {
    throw IoError(path + ": bad face index '" + token + "'");
  }
  if (idx < 0) idx = vertex_count + idx + 1;  // negative indices count from the end
  if (idx < 1 || idx > vertex_count) throw IoError(path + ": face index out of range");
  return idx - 1;
}

MeshFile read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  MeshFile out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z()))
        throw IoError(path + ":" + std::to_string(lineno) + ": bad vertex line");
      out.mesh.positions.push_back(p);
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok)
        idx.push_back(parse_index(tok, static_cast<int>(out.mesh.positions.size()), path));
      if (idx.size() != 3)
        throw IoError(path + ":" + std::to_string(lineno) + ": only triangle faces are supported");
      out.mesh.faces.push_back({idx[0], idx[1], idx[2]});
    }
    // Everything else (vn, vt, usemtl, ...) is ignored.
  }
  return out;
}

void write_obj(const std::string& path, const MeshFile& file) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path);
  for (const Vec3& p : file.mesh.positions)
    std::fprintf(f, "v %.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  for (const auto& tri : file.mesh.faces)
    std::fprintf(f, "f %d %d %d\n", tri[0] + 1, tri[1] + 1, tri[2] + 1);
  std::fclose(f);
}

MeshFile read_off(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "OFF") throw IoError(path + ": missing OFF header");
  int nv = 0, nf = 0, ne = 0;
  if (!(in >> nv >> nf >> ne)) throw IoError(path + ": bad OFF counts");
  MeshFile out;
  out.mesh.positions.resize(nv);
  for (int v = 0; v < nv; ++v)
    if (!(in >> out.mesh.positions[v].x() >> out.mesh.positions[v].y() >>
          out.mesh.positions[v].z()))
      throw IoError(path + ": truncated vertex list");
  out.mesh.faces.resize(nf);
  for (int f = 0; f < nf; ++f) {
    int count = 0;
    if (!(in >> count)) throw IoError(path + ": truncated face list");
    if (count != 3) throw IoError(path + ": only triangle faces are supported");
    for (int s = 0; s < 3; ++s) {
      int idx;
      if (!(in >> idx) || idx < 0 || idx >= nv) throw IoError(path + ": face index out of range");
      out.mesh.faces[f][s] = idx;
    }
  }
  return out;
}

void write_off(const std::string& path, const MeshFile& file) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "OFF\n%zu %zu 0\n", file.mesh.positions.size(), file.mesh.faces.size());
  for (const Vec3& p : file.mesh.positions)
    std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
  for (const auto& tri : file.mesh.faces)
    std::fprintf(f, "3 %d %d %d\n", tri[0], tri[1], tri[2]);
  std::fclose(f);
}

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
  std::string count_type;
};

std::size_t scalar_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
      type == "float32")
    return 4;
  if (type == "double" || type == "float64") return 8;
  throw IoError("unsupported PLY type " + type);
}

double read_binary_scalar(std::ifstream& in, const std::string& type) {
  unsigned char buf[8];
  const std::size_t n = scalar_size(type);
  in.read(reinterpret_cast<char*>(buf), n);
  if (!in) throw IoError("truncated PLY body");
  if (type == "char" || type == "int8") return static_cast<int8_t>(buf[0]);
  if (type == "uchar" || type == "uint8") return buf[0];
  auto as = [&](auto v) {
    std::memcpy(&v, buf, sizeof v);
    return static_cast<double>(v);
  };
  if (type == "short" || type == "int16") return as(int16_t{});
  if (type == "ushort" || type == "uint16") return as(uint16_t{});
  if (type == "int" || type == "int32") return as(int32_t{});
  if (type == "uint" || type == "uint32") return as(uint32_t{});
  if (type == "float" || type == "float32") return as(float{});
  return as(double{});
}

MeshFile read_ply(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw IoError(path + ": missing ply header");

  bool binary = false;
  struct Element {
    std::string name;
    int count = 0;
    std::vector<PlyProperty> props;
  };
  std::vector<Element> elements;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "comment" || tag == "obj_info" || tag.empty()) continue;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "ascii") binary = false;
      else if (fmt == "binary_little_endian") binary = true;
      else throw IoError(path + ": unsupported PLY format " + fmt);
    } else if (tag == "element") {
      Element e;
      ls >> e.name >> e.count;
      elements.push_back(e);
    } else if (tag == "property") {
      if (elements.empty()) throw IoError(path + ": property before element");
      PlyProperty p;
      std::string type;
      ls >> type;
      if (type == "list") {
        p.is_list = true;
        ls >> p.count_type >> p.type >> p.name;
      } else {
        p.type = type;
        ls >> p.name;
      }
      elements.back().props.push_back(p);
    } else if (tag == "end_header") {
      break;
    } else {
      throw IoError(path + ": unknown header line '" + tag + "'");
    }
  }

  MeshFile out;
  auto read_ascii_scalar = [&](std::istringstream& ls) {
    double v;
    if (!(ls >> v)) throw IoError(path + ": truncated PLY body");
    return v;
  };

  for (const auto& elem : elements) {
    const bool is_vertex = elem.name == "vertex";
    const bool is_face = elem.name == "face";
    if (is_vertex) out.mesh.positions.resize(elem.count);
    if (is_face) {
      out.mesh.faces.resize(elem.count);
      for (const auto& p : elem.props)
        if (!p.is_list) out.face_properties[p.name].resize(elem.count);
    }
    for (int i = 0; i < elem.count; ++i) {
      std::istringstream ls;
      if (!binary) {
        if (!std::getline(in, line)) throw IoError(path + ": truncated PLY body");
        ls.str(line);
      }
      auto next = [&](const std::string& type) {
        return binary ? read_binary_scalar(in, type) : read_ascii_scalar(ls);
      };
      for (const auto& p : elem.props) {
        if (p.is_list) {
          const int count = static_cast<int>(next(p.count_type));
          std::vector<double> items(count);
          for (int k = 0; k < count; ++k) items[k] = next(p.type);
          if (is_face && p.name == "vertex_indices") {
            if (count != 3) throw IoError(path + ": only triangle faces are supported");
            for (int s = 0; s < 3; ++s) {
              const int idx = static_cast<int>(items[s]);
              if (idx < 0 || idx >= static_cast<int>(out.mesh.positions.size()))
                throw IoError(path + ": face index out of range");
              out.mesh.faces[i][s] = idx;
            }
          }
        } else {
          const double v = next(p.type);
          if (is_vertex) {
            if (p.name == "x") out.mesh.positions[i].x() = v;
            else if (p.name == "y") out.mesh.positions[i].y() = v;
            else if (p.name == "z") out.mesh.positions[i].z() = v;
          } else if (is_face) {
            out.face_properties[p.name][i] = v;
          }
        }
      }
    }
  }
  if (out.mesh.positions.empty() || out.mesh.faces.empty())
    throw IoError(path + ": PLY without vertex or face element");
  return out;
}

void write_ply(const std::string& path, const MeshFile& file, bool binary) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot write " + path);
  std::fprintf(f, "ply\nformat %s 1.0\n", binary ? "binary_little_endian" : "ascii");
  std::fprintf(f, "element vertex %zu\n", file.mesh.positions.size());
  std::fprintf(f, "property double x\nproperty double y\nproperty double z\n");
  std::fprintf(f, "element face %zu\n", file.mesh.faces.size());
  std::fprintf(f, "property list uchar int vertex_indices\n");
  for (const auto& [name, values] : file.face_properties) {
    if (values.size() != file.mesh.faces.size())
      throw IoError("face property '" + name + "' has wrong length");
    std::fprintf(f, "property double %s\n", name.c_str());
  }
  std::fprintf(f, "end_header\n");

  if (binary) {
    for (const Vec3& p : file.mesh.positions) {
      const double xyz[3] = {p.x(), p.y(), p.z()};
      std::fwrite(xyz, sizeof(double), 3, f);
    }
    for (std::size_t i = 0; i < file.mesh.faces.size(); ++i) {
      const unsigned char count = 3;
      std::fwrite(&count, 1, 1, f);
      const int32_t idx[3] = {file.mesh.faces[i][0], file.mesh.faces[i][1], file.mesh.faces[i][2]};
      std::fwrite(idx, sizeof(int32_t), 3, f);
      for (const auto& [name, values] : file.face_properties)
        std::fwrite(&values[i], sizeof(double), 1, f);
    }
  } else {
    for (const Vec3& p : file.mesh.positions)
      std::fprintf(f, "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    for (std::size_t i = 0; i < file.mesh.faces.size(); ++i) {
      std::fprintf(f, "3 %d %d %d", file.mesh.faces[i][0], file.mesh.faces[i][1],
                   file.mesh.faces[i][2]);
      for (const auto& [name, values] : file.face_properties)
        std::fprintf(f, " %.17g", values[i]);
      std::fprintf(f, "\n");
    }
  }
  std::fclose(f);
}

} // namespace

MeshFormat format_from_path(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "obj") return MeshFormat::Obj;
  if (ext == "off") return MeshFormat::Off;
  if (ext == "ply") return MeshFormat::PlyBinary;
  throw IoError("unrecognized mesh extension: " + path);
}

MeshFile read_mesh(const std::string& path) {
  switch (format_from_path(path)) {
    case MeshFormat::Obj: return read_obj(path);
    case MeshFormat::Off: return read_off(path);
    default: return read_ply(path);
  }
}

void write_mesh(const std::string& path, const MeshFile& file) {
  write_mesh(path, file, format_from_path(path));
}

void write_mesh(const std::string& path, const MeshFile& file, MeshFormat format) {
  switch (format) {
    case MeshFormat::Obj: write_obj(path, file); break;
    case MeshFormat::Off: write_off(path, file); break;
    case MeshFormat::PlyAscii: write_ply(path, file, false); break;
    case MeshFormat::PlyBinary: write_ply(path, file, true); break;
  }
}

} // namespace spinmesh
