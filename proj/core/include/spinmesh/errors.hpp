#pragma once

#include <stdexcept>
#include <string>

namespace spinmesh {

// Base class for all spinmesh exceptions.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid mesh topology or combinatorics (boundary edge, non-manifold edge,
// inconsistent winding, degenerate face). The message names the offending
// simplex.
class TopologyError : public Error {
public:
  explicit TopologyError(const std::string& what) : Error(what) {}
};

// Invalid geometric configuration (near-fold edge, zero quaternion, ...).
class GeometryError : public Error {
public:
  explicit GeometryError(const std::string& what) : Error(what) {}
};

// Linear or eigen solver failure; carries the best residual in the message.
class SolverError : public Error {
public:
  explicit SolverError(const std::string& what) : Error(what) {}
};

// File parsing / writing failure.
class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(what) {}
};

} // namespace spinmesh
