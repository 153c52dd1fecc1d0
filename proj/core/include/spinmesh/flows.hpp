#pragma once

#include <memory>
#include <string>
#include <vector>

#include "spinmesh/net.hpp"
#include "spinmesh/spin.hpp"

namespace spinmesh {

enum class MetricChoice { Source, Target };

struct FlowConfig {
  double tau = 0.5;               // curvature step, in (0, 1]
  int steps = 10;                 // step budget
  SolveConfig solve;
  double filter_strength = 0.0;   // low-pass on the curvature update
  MetricChoice metric_choice = MetricChoice::Source;
  bool record_history = true;
  double sphericity_tolerance = 1e-2;  // radius coefficient of variation
  double extrude_fraction = 0.3;       // fraction of (h* - h) prescribed per step
  int extrude_steps = 40;
  // Rescale every step's output to the input total area; the flow is shape
  // only, scale is carried separately by the curvature map.
  bool renormalize_area = true;
  // Multiplier growth between steps when the area penalty is active:
  // lambda_i <- lambda_i * max(1, (s_i/eps)^2).
  bool update_multipliers = true;
};

// Per-face mean curvature and area of a mesh, recorded against a carrier with
// identical combinatorics; enough to reconstruct the shape up to pose.
struct CurvatureMap {
  FaceScalarField h_star;
  FaceScalarField A_star;
  double total_area = 0.0;
  int face_count = 0;
  std::string source_id;
};

CurvatureMap make_curvature_map(const FaceEdgeNet& net, const std::string& source_id);

struct StepDiagnostics {
  int step = 0;
  double closedness_pre = 0.0;    // after the unconstrained solve
  double closedness_post = 0.0;   // after optional constraint projection
  double integrability = 0.0;
  double willmore_before = 0.0;
  double willmore_after = 0.0;
  double min_angle = 0.0;             // radians, over faces
  double min_area_ratio = 0.0;        // min face area / mean face area
  double radius_cv = 0.0;             // sphericity of the step output
  double normal_discrepancy = 0.0;    // transformed vs geometric normals
  double max_abs_log_distortion = 0.0;  // vs the penalty reference, when active
  std::vector<std::string> warnings;
};

double radius_coefficient_of_variation(const FaceEdgeNet& net);
double min_face_angle(const FaceEdgeNet& net);

struct FairingStepResult {
  std::shared_ptr<FaceEdgeNet> net;
  CurvatureMap input_curvature;  // h and A of the step input
  StepDiagnostics diagnostics;
};

// One curvature-space fairing step: delta_h = -tau h, optionally filtered,
// rho = h + delta_h, spin solve, transform, Poisson integration, rebuild.
FairingStepResult fairing_step(const FaceEdgeNet& net, const FlowConfig& config,
                               const ExactnessProjector* projector = nullptr,
                               const FaceScalarField* multipliers = nullptr);

struct FlowResult {
  std::shared_ptr<FaceEdgeNet> net;
  CurvatureMap map;  // original h, A indexed by the final net's faces
  std::vector<StepDiagnostics> history;
  bool converged = false;
  std::vector<std::string> warnings;
};

// Iterates fairing steps until the radius coefficient of variation drops
// below tolerance or the budget runs out (best iterate + warning).
FlowResult flow_to_sphere(const FaceEdgeNet& net, const FlowConfig& config);

struct ExtrudeResult {
  std::shared_ptr<FaceEdgeNet> net;
  std::vector<StepDiagnostics> history;
  std::vector<double> curvature_residuals;  // ||h - h*||_A per step
  std::vector<std::string> warnings;
};

// Rebuilds a shape from a sphere-like carrier and a curvature map by stepping
// delta_h = fraction (h* - h) with rho = h_bar sqrt(A*/A). Throws SolverError
// (with the history in the message) if the residual grows three steps in a row.
ExtrudeResult extrude(const FaceEdgeNet& sphere_net, const CurvatureMap& target,
                      const FlowConfig& config);

// Implicit low-pass of a curvature update; strength 0 is the identity and the
// area-weighted mean is preserved.
FaceScalarField filter_curvature(const FaceScalarField& delta_rho, const FaceEdgeNet& net,
                                 double strength);

struct McFlowResult {
  std::shared_ptr<FaceEdgeNet> net;
  std::vector<StepDiagnostics> history;
  int steps_taken = 0;
  std::vector<std::string> warnings;
};

// Explicit (incompressible) mean curvature flow baseline,
// f <- f - tau (h_v - <h>) n_v with cotangent vertex curvature. Mesh-quality
// collapse is recorded, not fatal; numeric overflow aborts with the step index.
McFlowResult mean_curvature_flow_baseline(const FaceEdgeNet& net, double tau, int steps,
                                          bool incompressible,
                                          double stop_at_willmore = -1.0);

// Nearest-face barycentric resampling of a curvature map carried by
// sphere_net onto a canonical sphere mesh with different combinatorics
// (face -> vertex averaging, vertex interpolation, vertex -> face averaging;
// A* is transported as an area density).
CurvatureMap resample_curvature_map(const CurvatureMap& map, const FaceEdgeNet& sphere_net,
                                    const FaceEdgeNet& canonical);

} // namespace spinmesh
