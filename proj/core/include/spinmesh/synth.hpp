#pragma once

#include <cstdint>

#include "spinmesh/mesh_data.hpp"

namespace spinmesh {
namespace synth {

// All generators are deterministic for fixed parameters (and seed, where one
// applies) and produce closed, consistently wound triangle meshes.

MeshData icosahedron(double radius = 1.0);

// Loop-split icosahedron projected to the sphere; 20 * 4^subdiv faces.
MeshData icosphere(int subdiv, double radius = 1.0);

// Icosphere displaced radially by a smooth random lobe field.
MeshData bumpy_sphere(int subdiv, double amplitude, int frequency, std::uint64_t seed);

// Icosphere scaled anisotropically to semi-axes (a, b, c).
MeshData ellipsoid(int subdiv, double a, double b, double c);

// Capsule of given radius and centerline length, bent around a circular arc.
MeshData capsule_bent(double radius, double length, double bend_deg,
                      int segments = 24, int rings = 24);

// Structured torus, `major` x `minor` quads split into triangles.
MeshData torus(int major, int minor, double major_radius = 2.0, double minor_radius = 1.0);

// Genus-2 surface: an extruded rectangular plate with two square holes.
MeshData genus2(int resolution = 2);

} // namespace synth
} // namespace spinmesh
