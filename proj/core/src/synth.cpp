#include "spinmesh/synth.hpp"

#include <cmath>
#include <map>
#include <random>
#include <utility>

#include "spinmesh/errors.hpp"

namespace spinmesh {
namespace synth {

namespace {

// Midpoint subdivision with a shared-edge vertex cache.
MeshData subdivide(const MeshData& in) {
  MeshData out;
  out.positions = in.positions;
  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto k = std::minmax(a, b);
    auto [it, inserted] = midpoint.try_emplace(k, static_cast<int>(out.positions.size()));
    if (inserted) out.positions.push_back(0.5 * (in.positions[a] + in.positions[b]));
    return it->second;
  };
  out.faces.reserve(4 * in.faces.size());
  for (const auto& f : in.faces) {
    const int m01 = mid(f[0], f[1]);
    const int m12 = mid(f[1], f[2]);
    const int m20 = mid(f[2], f[0]);
    out.faces.push_back({f[0], m01, m20});
    out.faces.push_back({f[1], m12, m01});
    out.faces.push_back({f[2], m20, m12});
    out.faces.push_back({m01, m12, m20});
  }
  return out;
}

void project_to_sphere(MeshData& mesh, double radius) {
  for (Vec3& p : mesh.positions) p = radius * p.normalized();
}

} // namespace

MeshData icosahedron(double radius) {
  const double p = (1.0 + std::sqrt(5.0)) / 2.0;
  MeshData m;
  m.positions = {{-1, p, 0}, {1, p, 0},   {-1, -p, 0}, {1, -p, 0},
                 {0, -1, p}, {0, 1, p},   {0, -1, -p}, {0, 1, -p},
                 {p, 0, -1}, {p, 0, 1},   {-p, 0, -1}, {-p, 0, 1}};
  m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
             {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
             {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
             {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  project_to_sphere(m, radius);
  return m;
}

MeshData icosphere(int subdiv, double radius) {
  if (subdiv < 0) throw Error("icosphere: negative subdivision level");
  MeshData m = icosahedron(1.0);
  for (int i = 0; i < subdiv; ++i) {
    m = subdivide(m);
    project_to_sphere(m, 1.0);
  }
  project_to_sphere(m, radius);
  return m;
}

MeshData bumpy_sphere(int subdiv, double amplitude, int frequency, std::uint64_t seed) {
  if (frequency < 1) throw Error("bumpy_sphere: frequency must be >= 1");
  MeshData m = icosphere(subdiv, 1.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

  // A few smooth cosine lobes along random directions.
  std::vector<Vec3> dirs(frequency);
  std::vector<double> phases(frequency);
  for (int i = 0; i < frequency; ++i) {
    Vec3 d;
    do {
      d = {uni(rng), uni(rng), uni(rng)};
    } while (d.norm() < 0.2);
    dirs[i] = d.normalized();
    phases[i] = phase(rng);
  }
  const double omega = 2.0 + frequency;
  for (Vec3& p : m.positions) {
    const Vec3 n = p.normalized();
    double bump = 0.0;
    for (int i = 0; i < frequency; ++i)
      bump += std::cos(omega * n.dot(dirs[i]) + phases[i]);
    p = (1.0 + amplitude * bump / frequency) * n;
  }
  return m;
}

MeshData ellipsoid(int subdiv, double a, double b, double c) {
  if (a <= 0 || b <= 0 || c <= 0) throw Error("ellipsoid: non-positive semi-axis");
  MeshData m = icosphere(subdiv, 1.0);
  for (Vec3& p : m.positions) p = {a * p.x(), b * p.y(), c * p.z()};
  return m;
}

MeshData capsule_bent(double radius, double length, double bend_deg, int segments, int rings) {
  if (radius <= 0 || length <= 0) throw Error("capsule_bent: non-positive size");
  if (segments < 3 || rings < 2) throw Error("capsule_bent: too few segments or rings");

  // Straight capsule along z in [0, length], poles at -radius and length+radius.
  MeshData m;
  const int cap_rings = std::max(2, rings / 2);
  struct Ring {
    double z;
    double r;
  };
  std::vector<Ring> profile;
  for (int i = cap_rings - 1; i >= 1; --i) {
    const double a = 0.5 * M_PI * i / cap_rings;  // bottom cap, from near pole up
    profile.push_back({-radius * std::sin(a), radius * std::cos(a)});
  }
  for (int i = 0; i <= rings; ++i)
    profile.push_back({length * i / rings, radius});
  for (int i = 1; i <= cap_rings - 1; ++i) {
    const double a = 0.5 * M_PI * i / cap_rings;
    profile.push_back({length + radius * std::sin(a), radius * std::cos(a)});
  }

  const int south = 0;
  m.positions.push_back({0, 0, -radius});
  std::vector<std::vector<int>> ring_idx(profile.size());
  for (size_t i = 0; i < profile.size(); ++i) {
    ring_idx[i].resize(segments);
    for (int s = 0; s < segments; ++s) {
      const double ang = 2.0 * M_PI * s / segments;
      ring_idx[i][s] = static_cast<int>(m.positions.size());
      m.positions.push_back({profile[i].r * std::cos(ang), profile[i].r * std::sin(ang), profile[i].z});
    }
  }
  const int north = static_cast<int>(m.positions.size());
  m.positions.push_back({0, 0, length + radius});

  for (int s = 0; s < segments; ++s) {
    const int sn = (s + 1) % segments;
    m.faces.push_back({south, ring_idx[0][sn], ring_idx[0][s]});
  }
  for (size_t i = 0; i + 1 < profile.size(); ++i) {
    for (int s = 0; s < segments; ++s) {
      const int sn = (s + 1) % segments;
      m.faces.push_back({ring_idx[i][s], ring_idx[i][sn], ring_idx[i + 1][s]});
      m.faces.push_back({ring_idx[i + 1][s], ring_idx[i][sn], ring_idx[i + 1][sn]});
    }
  }
  const size_t last = profile.size() - 1;
  for (int s = 0; s < segments; ++s) {
    const int sn = (s + 1) % segments;
    m.faces.push_back({north, ring_idx[last][s], ring_idx[last][sn]});
  }

  // Bend around a circular arc in the xz-plane; cross sections move rigidly.
  const double bend = bend_deg * M_PI / 180.0;
  if (std::abs(bend) > 1e-12) {
    const double arc_radius = length / bend;
    for (Vec3& p : m.positions) {
      const double t = bend * p.z() / length;
      const double rad = arc_radius - p.x();
      p = {arc_radius - rad * std::cos(t), p.y(), rad * std::sin(t)};
    }
  }
  return m;
}

MeshData torus(int major, int minor, double major_radius, double minor_radius) {
  if (major < 3 || minor < 3) throw Error("torus: major/minor counts must be >= 3");
  if (minor_radius <= 0 || major_radius <= minor_radius)
    throw Error("torus: need 0 < minor_radius < major_radius");
  MeshData m;
  m.positions.reserve(static_cast<size_t>(major) * minor);
  for (int i = 0; i < major; ++i) {
    const double u = 2.0 * M_PI * i / major;
    for (int j = 0; j < minor; ++j) {
      const double v = 2.0 * M_PI * j / minor;
      const double r = major_radius + minor_radius * std::cos(v);
      m.positions.push_back({r * std::cos(u), r * std::sin(u), minor_radius * std::sin(v)});
    }
  }
  auto idx = [&](int i, int j) { return (i % major) * minor + (j % minor); };
  for (int i = 0; i < major; ++i) {
    for (int j = 0; j < minor; ++j) {
      const int a = idx(i, j), b = idx(i + 1, j), c = idx(i + 1, j + 1), d = idx(i, j + 1);
      m.faces.push_back({a, b, c});
      m.faces.push_back({a, c, d});
    }
  }
  return m;
}

MeshData genus2(int resolution) {
  if (resolution < 2) throw Error("genus2: resolution must be >= 2");
  // Plate on an (nx x ny)-cell grid with two square holes, extruded in z.
  const int k = resolution;          // cells per hole side
  const int nx = 9 * k;
  const int ny = 5 * k;
  const double cell = 1.0 / (2.0 * k);
  const double thick = 0.5;
  // Hole cell ranges [x0, x1) x [y0, y1).
  const int hx0[2] = {2 * k, 6 * k};
  const int hy0 = 2 * k;
  auto in_hole = [&](int cx, int cy) {
    for (int h = 0; h < 2; ++h)
      if (cx >= hx0[h] && cx < hx0[h] + k && cy >= hy0 && cy < hy0 + k) return true;
    return false;
  };
  auto vertex_needed = [&](int vx, int vy) {
    for (int cx = vx - 1; cx <= vx; ++cx)
      for (int cy = vy - 1; cy <= vy; ++cy)
        if (cx >= 0 && cx < nx && cy >= 0 && cy < ny && !in_hole(cx, cy)) return true;
    return false;
  };
  MeshData m;
  std::vector<int> top((nx + 1) * (ny + 1), -1), bot((nx + 1) * (ny + 1), -1);
  auto gid = [&](int vx, int vy) { return vy * (nx + 1) + vx; };
  for (int vy = 0; vy <= ny; ++vy) {
    for (int vx = 0; vx <= nx; ++vx) {
      if (!vertex_needed(vx, vy)) continue;
      const int g = gid(vx, vy);
      top[g] = static_cast<int>(m.positions.size());
      m.positions.push_back({vx * cell, vy * cell, thick / 2});
      bot[g] = static_cast<int>(m.positions.size());
      m.positions.push_back({vx * cell, vy * cell, -thick / 2});
    }
  }

  // Top (+z, CCW seen from above) and bottom (reversed).
  for (int cy = 0; cy < ny; ++cy) {
    for (int cx = 0; cx < nx; ++cx) {
      if (in_hole(cx, cy)) continue;
      const int a = gid(cx, cy), b = gid(cx + 1, cy), c = gid(cx + 1, cy + 1), d = gid(cx, cy + 1);
      m.faces.push_back({top[a], top[b], top[c]});
      m.faces.push_back({top[a], top[c], top[d]});
      m.faces.push_back({bot[a], bot[c], bot[b]});
      m.faces.push_back({bot[a], bot[d], bot[c]});
    }
  }

  // Side walls along every boundary edge of the plate region. A grid edge is a
  // wall edge when exactly one of its two adjacent cells is solid; the wall
  // quad is wound so its normal points away from the solid cell.
  auto solid = [&](int cx, int cy) {
    return cx >= 0 && cx < nx && cy >= 0 && cy < ny && !in_hole(cx, cy);
  };
  // Wall normal of add_wall(va, vb) points along (pos_vb - pos_va) x z.
  auto add_wall = [&](int va, int vb) {
    m.faces.push_back({top[va], bot[vb], top[vb]});
    m.faces.push_back({top[va], bot[va], bot[vb]});
  };
  for (int vy = 0; vy <= ny; ++vy) {
    for (int vx = 0; vx < nx; ++vx) {
      // Horizontal edge (vx,vy) -> (vx+1,vy): cells below (vx,vy-1), above (vx,vy).
      const bool below = solid(vx, vy - 1), above = solid(vx, vy);
      if (below == above) continue;
      if (below) add_wall(gid(vx + 1, vy), gid(vx, vy));  // outward +y
      else       add_wall(gid(vx, vy), gid(vx + 1, vy));  // outward -y
    }
  }
  for (int vx = 0; vx <= nx; ++vx) {
    for (int vy = 0; vy < ny; ++vy) {
      // Vertical edge (vx,vy) -> (vx,vy+1): cells left (vx-1,vy), right (vx,vy).
      const bool left = solid(vx - 1, vy), right = solid(vx, vy);
      if (left == right) continue;
      if (left) add_wall(gid(vx, vy), gid(vx, vy + 1));   // outward +x
      else      add_wall(gid(vx, vy + 1), gid(vx, vy));   // outward -x
    }
  }
  return m;
}

} // namespace synth
} // namespace spinmesh
