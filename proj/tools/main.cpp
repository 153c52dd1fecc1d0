#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <string>

#include "spinmesh/dirac.hpp"
#include "spinmesh/errors.hpp"
#include "spinmesh/flows.hpp"
#include "spinmesh/integrate.hpp"
#include "spinmesh/mesh_io.hpp"
#include "spinmesh/metrics.hpp"
#include "spinmesh/report.hpp"
#include "spinmesh/sidecar.hpp"
#include "spinmesh/synth.hpp"

namespace fs = std::filesystem;
using namespace spinmesh;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitWarning = 2;

struct GlobalOptions {
  std::uint64_t seed = 1;
  int threads = 1;
  std::string log_level = "info";
  std::string out_dir = ".";
};

struct Logger {
  const GlobalOptions* opts;
  void info(const std::string& msg) const {
    if (opts->log_level != "quiet") std::fprintf(stderr, "[spinmesh] %s\n", msg.c_str());
  }
  void debug(const std::string& msg) const {
    if (opts->log_level == "debug") std::fprintf(stderr, "[spinmesh] %s\n", msg.c_str());
  }
};

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

std::string out_path(const GlobalOptions& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return (fs::path(g.out_dir) / name).string();
}

FaceEdgeNet load_net(const std::string& path) {
  return FaceEdgeNet::build(read_mesh(path).mesh);
}

MeshFormat output_format(const std::string& input_path, const std::string& format_flag) {
  if (format_flag == "obj") return MeshFormat::Obj;
  if (format_flag == "off") return MeshFormat::Off;
  if (format_flag == "ply") return MeshFormat::PlyBinary;
  if (format_flag == "ply-ascii") return MeshFormat::PlyAscii;
  return format_from_path(input_path);
}

std::string format_ext(MeshFormat f) {
  switch (f) {
    case MeshFormat::Obj: return ".obj";
    case MeshFormat::Off: return ".off";
    default: return ".ply";
  }
}

// Flow options shared by fair / roundtrip / compare.
struct FlowFlags {
  double tau = 0.5;
  int steps = 30;
  double alpha = 1.0;
  double beta = -1.0;  // <0: module default (0.1 x mean face area)
  double area_weight = 0.0;
  double area_tol = 0.25;
  double filter = 0.0;
  bool exactness = false;
  bool closedness = false;
  double cv_tol = 1e-2;
  std::string metric = "source";

  void attach(CLI::App* cmd) {
    cmd->add_option("--tau", tau, "curvature step in (0,1]");
    cmd->add_option("--steps", steps, "fairing step budget");
    cmd->add_option("--alpha", alpha, "regularization weight");
    cmd->add_option("--beta", beta, "face-Laplacian weight (default 0.1 x mean face area)");
    cmd->add_option("--area-weight", area_weight, "area penalty multiplier (0 disables)");
    cmd->add_option("--area-tol", area_tol, "log-area-distortion tolerance for the penalty");
    cmd->add_option("--filter", filter, "low-pass strength on the curvature update");
    cmd->add_flag("--exactness", exactness, "project rho updates for non-spherical topology");
    cmd->add_flag("--closedness", closedness, "project onto the closedness constraints");
    cmd->add_option("--cv-tol", cv_tol, "sphericity tolerance (radius CV)");
    cmd->add_option("--metric", metric, "integration metric: source|target")
        ->check(CLI::IsMember({"source", "target"}));
  }

  FlowConfig to_config() const {
    FlowConfig cfg;
    cfg.tau = tau;
    cfg.steps = steps;
    cfg.solve.alpha = alpha;
    if (beta >= 0.0) cfg.solve.beta = beta;
    if (area_weight > 0.0) {
      cfg.solve.area_tolerance = area_tol;
      cfg.solve.area_multiplier = area_weight;
    }
    cfg.filter_strength = filter;
    cfg.solve.enforce_exactness = exactness;
    cfg.solve.enforce_closedness = closedness;
    cfg.sphericity_tolerance = cv_tol;
    cfg.metric_choice = metric == "target" ? MetricChoice::Target : MetricChoice::Source;
    return cfg;
  }

  Json to_json() const {
    Json j;
    j["tau"] = tau;
    j["steps"] = steps;
    j["alpha"] = alpha;
    j["beta"] = beta < 0.0 ? Json(nullptr) : Json(beta);
    j["area_weight"] = area_weight;
    j["area_tol"] = area_tol;
    j["filter"] = filter;
    j["exactness"] = exactness;
    j["closedness"] = closedness;
    j["cv_tol"] = cv_tol;
    j["metric"] = metric;
    return j;
  }
};

Json global_json(const GlobalOptions& g) {
  Json j;
  j["seed"] = g.seed;
  j["threads"] = g.threads;
  j["log_level"] = g.log_level;
  j["out_dir"] = g.out_dir;
  return j;
}

Json history_json(const std::vector<StepDiagnostics>& history) {
  Json out = Json::array();
  for (const auto& d : history) {
    Json j;
    j["step"] = d.step;
    j["closedness_pre"] = d.closedness_pre;
    j["closedness_post"] = d.closedness_post;
    j["integrability"] = d.integrability;
    j["willmore_before"] = d.willmore_before;
    j["willmore_after"] = d.willmore_after;
    j["min_angle_deg"] = d.min_angle * 180.0 / M_PI;
    j["min_area_ratio"] = d.min_area_ratio;
    j["radius_cv"] = d.radius_cv;
    j["normal_discrepancy"] = d.normal_discrepancy;
    j["max_abs_log_distortion"] = d.max_abs_log_distortion;
    out.push_back(j);
  }
  return out;
}

Json deformation_json(const DeformationReport& rep) {
  Json j;
  j["q_max"] = rep.q_max;
  j["q_max_robust"] = rep.q_max_robust;
  j["q_mean"] = rep.q_mean;
  j["eps_s_abs_max"] = rep.eps_abs_max;
  j["eps_s_abs_max_robust"] = rep.eps_abs_max_robust;
  j["eps_s_rms"] = rep.eps_rms;
  j["willmore_src"] = rep.willmore_src;
  j["willmore_dst"] = rep.willmore_dst;
  j["degenerate_faces"] = rep.degenerate_faces;
  return j;
}

int finish(const Logger& log, const std::string& report_path, Json report,
           const std::vector<std::string>& warnings, double wall_seconds) {
  report["warnings"] = warnings;
  write_report(report_path, std::move(report));
  log.info("report written to " + report_path);
  // Kept out of the report so reruns stay byte-identical.
  log.info("wall time " + std::to_string(wall_seconds) + " s");
  return warnings.empty() ? kExitOk : kExitWarning;
}

Json report_envelope(const char* command, const GlobalOptions& g) {
  Json report;
  report["command"] = command;
  report["format_version"] = 1;
  report["config"] = Json::object();
  report["config"]["global"] = global_json(g);
  return report;
}

// ---------------------------------------------------------------------------

int cmd_fair(const GlobalOptions& g, const Logger& log, const std::string& input,
             const FlowFlags& flags, const std::string& format_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const FaceEdgeNet net = load_net(input);
  log.info("loaded " + input + ": " + std::to_string(net.face_count()) + " faces, genus " +
           std::to_string(net.genus()));

  FlowResult flow = flow_to_sphere(net, flags.to_config());
  flow.map.source_id = stem_of(input);

  const MeshFormat fmt = output_format(input, format_flag);
  const std::string mesh_path = out_path(g, stem_of(input) + "_faired" + format_ext(fmt));
  MeshFile out_file{flow.net->mesh(), {}};
  if (fmt == MeshFormat::PlyAscii || fmt == MeshFormat::PlyBinary) {
    const FaceCurvature c = face_mean_curvature(*flow.net);
    out_file.face_properties["h"] =
        std::vector<double>(c.density.data(), c.density.data() + c.density.size());
  }
  write_mesh(mesh_path, out_file, fmt);
  const std::string sidecar_path = out_path(g, stem_of(input) + "_curvature.json");
  write_curvature_sidecar(sidecar_path, flow.map);

  Json report = report_envelope("fair", g);
  report["config"]["flow"] = flags.to_json();
  report["inputs"] = {{"mesh", input}, {"faces", net.face_count()}, {"genus", net.genus()}};
  Json results;
  results["converged"] = flow.converged;
  results["steps"] = flow.history.size();
  results["radius_cv"] = radius_coefficient_of_variation(*flow.net);
  results["deformation"] = deformation_json(deformation_report(net, *flow.net));
  results["outputs"] = {{"mesh", mesh_path}, {"curvature_sidecar", sidecar_path}};
  results["history"] = history_json(flow.history);
  report["results"] = std::move(results);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(log, out_path(g, stem_of(input) + "_report.json"), std::move(report),
                flow.warnings, wall);
}

int cmd_extrude(const GlobalOptions& g, const Logger& log, const std::string& input,
                const std::string& sidecar, const FlowFlags& flags, double fraction,
                int extrude_steps, const std::string& format_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const FaceEdgeNet net = load_net(input);
  const CurvatureMap map = read_curvature_sidecar(sidecar);
  if (map.face_count != net.face_count())
    throw Error("sidecar/mesh face count mismatch (" + std::to_string(map.face_count) + " vs " +
                std::to_string(net.face_count()) + ")");

  FlowConfig cfg = flags.to_config();
  cfg.extrude_fraction = fraction;
  cfg.extrude_steps = extrude_steps;
  ExtrudeResult res = extrude(net, map, cfg);

  const MeshFormat fmt = output_format(input, format_flag);
  const std::string mesh_path = out_path(g, stem_of(input) + "_extruded" + format_ext(fmt));
  write_mesh(mesh_path, MeshFile{res.net->mesh(), {}}, fmt);

  Json report = report_envelope("extrude", g);
  report["config"]["flow"] = flags.to_json();
  report["config"]["fraction"] = fraction;
  report["config"]["extrude_steps"] = extrude_steps;
  report["inputs"] = {{"mesh", input}, {"sidecar", sidecar}, {"faces", net.face_count()}};
  Json results;
  results["steps"] = res.curvature_residuals.size();
  results["curvature_residuals"] = res.curvature_residuals;
  results["outputs"] = {{"mesh", mesh_path}};
  results["history"] = history_json(res.history);
  report["results"] = std::move(results);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(log, out_path(g, stem_of(input) + "_extrude_report.json"), std::move(report),
                res.warnings, wall);
}

int cmd_roundtrip(const GlobalOptions& g, const Logger& log, const std::string& input,
                  const FlowFlags& flags, double fraction, int extrude_steps, bool resample,
                  bool keep_meshes, const std::string& format_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const FaceEdgeNet net = load_net(input);
  std::vector<std::string> warnings;

  FlowResult flow = flow_to_sphere(net, flags.to_config());
  flow.map.source_id = stem_of(input);
  warnings.insert(warnings.end(), flow.warnings.begin(), flow.warnings.end());

  FlowConfig cfg = flags.to_config();
  cfg.extrude_fraction = fraction;
  cfg.extrude_steps = extrude_steps;

  std::shared_ptr<FaceEdgeNet> carrier = flow.net;
  CurvatureMap map = flow.map;
  if (resample) {
    // Second-experiment variant: remap the curvature onto a uniform sphere.
    int subdiv = 0;
    while (20 * (1 << (2 * subdiv)) < net.face_count() && subdiv < 7) ++subdiv;
    const FaceEdgeNet canon = FaceEdgeNet::build(synth::icosphere(subdiv));
    map = resample_curvature_map(map, *carrier, canon);
    carrier = std::make_shared<FaceEdgeNet>(FaceEdgeNet::build(canon.mesh()));
  }
  ExtrudeResult ex = extrude(*carrier, map, cfg);
  warnings.insert(warnings.end(), ex.warnings.begin(), ex.warnings.end());

  Json report = report_envelope("roundtrip", g);
  report["config"]["flow"] = flags.to_json();
  report["config"]["fraction"] = fraction;
  report["config"]["extrude_steps"] = extrude_steps;
  report["config"]["resample"] = resample;
  report["inputs"] = {{"mesh", input}, {"faces", net.face_count()}, {"genus", net.genus()}};

  Json results;
  results["fair_steps"] = flow.history.size();
  results["extrude_steps"] = ex.curvature_residuals.size();
  results["steps"] = flow.history.size() + ex.curvature_residuals.size();
  if (!resample) {
    const AlignmentResult aligned = align_similarity(*ex.net, net);
    const PointSurfaceError err = point_to_surface_error(aligned.aligned, net);
    results["max_err"] = err.max;
    results["mean_err"] = err.mean;
    results["max_err_rel_diag"] = err.max / net.bbox_diagonal();
    results["mean_err_rel_diag"] = err.mean / net.bbox_diagonal();
    results["alignment_residual_rms"] = aligned.transform.residual_rms;
  } else {
    // Combinatorics differ; report the unaligned surface distance both ways.
    const PointSurfaceError err = point_to_surface_error(*ex.net, net);
    results["max_err"] = err.max;
    results["mean_err"] = err.mean;
    results["max_err_rel_diag"] = err.max / net.bbox_diagonal();
    results["mean_err_rel_diag"] = err.mean / net.bbox_diagonal();
  }
  if (!resample) {
    const DeformationReport trip_rep = deformation_report(net, *ex.net);
    results["q_stats"] = deformation_json(trip_rep);
    results["eps_s_stats"] = {{"abs_max", trip_rep.eps_abs_max},
                              {"abs_max_robust", trip_rep.eps_abs_max_robust},
                              {"rms", trip_rep.eps_rms}};
    results["sphere_q_stats"] = deformation_json(deformation_report(net, *flow.net));
  }
  if (keep_meshes) {
    const MeshFormat fmt = output_format(input, format_flag);
    const std::string sphere_path = out_path(g, stem_of(input) + "_sphere" + format_ext(fmt));
    const std::string back_path = out_path(g, stem_of(input) + "_roundtrip" + format_ext(fmt));
    write_mesh(sphere_path, MeshFile{flow.net->mesh(), {}}, fmt);
    write_mesh(back_path, MeshFile{ex.net->mesh(), {}}, fmt);
    results["outputs"] = {{"sphere", sphere_path}, {"extruded", back_path}};
  }
  report["results"] = std::move(results);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(log, out_path(g, stem_of(input) + "_roundtrip.json"), std::move(report),
                warnings, wall);
}

int cmd_compare(const GlobalOptions& g, const Logger& log, const std::string& input,
                const FlowFlags& flags, double mc_tau, int mc_steps,
                const std::string& format_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const FaceEdgeNet net = load_net(input);
  std::vector<std::string> warnings;

  FlowResult free_flow = flow_to_sphere(net, flags.to_config());
  const double w_target = willmore_energy(*free_flow.net);
  warnings.insert(warnings.end(), free_flow.warnings.begin(), free_flow.warnings.end());
  const DeformationReport free_rep = deformation_report(net, *free_flow.net);

  FlowFlags area_flags = flags;
  if (area_flags.area_weight <= 0.0) area_flags.area_weight = 5.0;
  FlowConfig area_cfg = area_flags.to_config();
  area_cfg.steps = 3 * flags.steps;
  FlowResult area_flow = flow_to_sphere(net, area_cfg);
  for (const auto& w : area_flow.warnings) warnings.push_back("area-constrained: " + w);
  const DeformationReport area_rep = deformation_report(net, *area_flow.net);

  McFlowResult mc = mean_curvature_flow_baseline(net, mc_tau, mc_steps, true, 1.02 * w_target);
  for (const auto& w : mc.warnings) warnings.push_back("mc baseline: " + w);
  const DeformationReport mc_rep = deformation_report(net, *mc.net);
  if (willmore_energy(*mc.net) > 1.05 * w_target)
    warnings.push_back("mc baseline did not reach the matched Willmore energy");

  const MeshFormat fmt = output_format(input, format_flag);
  const std::string spin_path = out_path(g, stem_of(input) + "_spin" + format_ext(fmt));
  const std::string mc_path = out_path(g, stem_of(input) + "_mc" + format_ext(fmt));
  write_mesh(spin_path, MeshFile{free_flow.net->mesh(), {}}, fmt);
  write_mesh(mc_path, MeshFile{mc.net->mesh(), {}}, fmt);

  Json report = report_envelope("compare", g);
  report["config"]["flow"] = flags.to_json();
  report["config"]["mc_tau"] = mc_tau;
  report["config"]["mc_steps"] = mc_steps;
  report["inputs"] = {{"mesh", input}, {"faces", net.face_count()}};
  Json results;
  results["willmore_target"] = w_target;
  Json table = Json::array();
  auto row = [&](const char* name, const DeformationReport& rep, const FaceEdgeNet& out_net,
                 Json extra) {
    Json j = deformation_json(rep);
    j["method"] = name;
    j["willmore"] = willmore_energy(out_net);
    j.update(extra);
    table.push_back(j);
  };
  row("spin_unconstrained", free_rep, *free_flow.net, {{"steps", free_flow.history.size()}});
  row("spin_area_constrained", area_rep, *area_flow.net, {{"steps", area_flow.history.size()}});
  row("mc_incompressible", mc_rep, *mc.net, {{"steps", mc.steps_taken}});
  results["table"] = std::move(table);
  results["outputs"] = {{"spin_mesh", spin_path}, {"mc_mesh", mc_path}};
  report["results"] = std::move(results);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(log, out_path(g, stem_of(input) + "_compare.json"), std::move(report), warnings,
                wall);
}

int cmd_spectrum(const GlobalOptions& g, const Logger& log, const std::string& input, int k,
                 const std::string& format_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const FaceEdgeNet net = load_net(input);
  if (k < 1 || k > 4 * net.face_count())
    throw Error("spectrum: k must be in [1, 4|F|] (got " + std::to_string(k) + ")");

  const HyperedgeField E = hyperedges(net);
  const QuaternionSparseMatrix dx = assemble_intrinsic(net, E);
  DiracEigsOptions opts;
  opts.seed = g.seed;
  const std::vector<EigenPair> pairs = smallest_eigenpairs(dx, net.face_areas(), k, opts);

  (void)format_flag;
  Json report = report_envelope("spectrum", g);
  report["config"]["k"] = k;
  report["inputs"] = {{"mesh", input}, {"faces", net.face_count()}};
  Json results;
  Json values = Json::array();
  Json meshes = Json::array();
  for (int i = 0; i < k; ++i) {
    const TransformedNet transformed = transform_hyperedges(E, pairs[i].vector);
    const VertexField pos =
        integrate_edges(net, EdgeOneForm::from_hyperedges(transformed.hyperedges));
    MeshFile out_file{MeshData{pos, {}}, {}};
    out_file.mesh.faces.reserve(net.face_count());
    for (int f = 0; f < net.face_count(); ++f) out_file.mesh.faces.push_back(net.face_vertices(f));
    std::vector<double> mag(net.face_count());
    for (int f = 0; f < net.face_count(); ++f) mag[f] = pairs[i].vector[f].norm();
    out_file.face_properties["phi_mag"] = std::move(mag);
    const std::string mesh_path =
        out_path(g, stem_of(input) + "_eig" + std::to_string(i) + ".ply");
    write_mesh(mesh_path, out_file, MeshFormat::PlyBinary);
    meshes.push_back(mesh_path);
    Json v;
    v["gamma"] = pairs[i].value;
    v["residual"] = pairs[i].residual;
    values.push_back(v);
  }
  results["eigenpairs"] = std::move(values);
  results["outputs"] = {{"meshes", meshes}};
  report["results"] = std::move(results);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(log, out_path(g, stem_of(input) + "_spectrum.json"), std::move(report), {},
                wall);
}

int cmd_synth(const GlobalOptions& g, const Logger& log, const std::string& shape, int subdiv,
              double ax, double ay, double az, double amplitude, int frequency, double radius,
              double length, double bend, int major, int minor, double major_radius,
              double minor_radius, int resolution, const std::string& out_name) {
  MeshData mesh;
  if (shape == "icosphere") mesh = synth::icosphere(subdiv);
  else if (shape == "icosahedron") mesh = synth::icosahedron();
  else if (shape == "bumpy_sphere") mesh = synth::bumpy_sphere(subdiv, amplitude, frequency, g.seed);
  else if (shape == "ellipsoid") mesh = synth::ellipsoid(subdiv, ax, ay, az);
  else if (shape == "capsule_bent") mesh = synth::capsule_bent(radius, length, bend);
  else if (shape == "torus") mesh = synth::torus(major, minor, major_radius, minor_radius);
  else if (shape == "genus2") mesh = synth::genus2(resolution);
  else throw Error("synth: unknown shape '" + shape + "'");

  FaceEdgeNet::build(mesh);  // construction invariants must hold for every generator

  const std::string name = out_name.empty() ? shape + ".obj" : out_name;
  const std::string path = out_path(g, name);
  write_mesh(path, MeshFile{std::move(mesh), {}});
  log.info("wrote " + path);
  return kExitOk;
}

int cmd_metrics(const GlobalOptions& g, const Logger& log, const std::string& src_path,
                const std::string& dst_path, bool align) {
  const auto t0 = std::chrono::steady_clock::now();
  const FaceEdgeNet src = load_net(src_path);
  FaceEdgeNet dst = load_net(dst_path);

  Json report = report_envelope("metrics", g);
  report["config"]["align"] = align;
  report["inputs"] = {{"src", src_path}, {"dst", dst_path}};
  Json results;
  if (align) {
    const AlignmentResult aligned = align_similarity(dst, src);
    results["alignment"] = {{"scale", aligned.transform.scale},
                            {"residual_rms", aligned.transform.residual_rms}};
    const PointSurfaceError err = point_to_surface_error(aligned.aligned, src);
    results["max_err_rel_diag"] = err.max / src.bbox_diagonal();
    results["mean_err_rel_diag"] = err.mean / src.bbox_diagonal();
    dst = aligned.aligned;
  }
  results["deformation"] = deformation_json(deformation_report(src, dst));
  report["results"] = std::move(results);

  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return finish(log, out_path(g, stem_of(src_path) + "_metrics.json"), std::move(report), {},
                wall);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"spinmesh: curvature-space mesh flows via discrete spin transformations"};
  app.require_subcommand(1);
  app.fallthrough(true);  // global flags may follow the subcommand

  GlobalOptions g;
  app.add_option("--seed", g.seed, "random seed for synthetic shapes and solvers");
  app.add_option("--threads", g.threads, "worker threads (SPINMESH_THREADS overrides)");
  app.add_option("--log-level", g.log_level, "quiet|info|debug")
      ->check(CLI::IsMember({"quiet", "info", "debug"}));
  app.add_option("--out-dir", g.out_dir, "output directory");

  FlowFlags fair_flags, rt_flags, cmp_flags, ex_flags;
  std::string fair_input, rt_input, cmp_input, ex_input, ex_sidecar, spec_input;
  std::string m_src, m_dst;
  std::string format_flag = "auto";
  double fraction = 0.3;
  int extrude_steps = 40;
  bool resample = false, keep_meshes = false, do_align = false;
  double mc_tau = -1.0;
  int mc_steps = 4000;
  int spectrum_k = 4;

  auto* fair = app.add_subcommand("fair", "flow a mesh toward the reference sphere");
  fair->add_option("mesh", fair_input, "input mesh (obj/off/ply)")->required();
  fair_flags.attach(fair);
  fair->add_option("--format", format_flag, "output format: auto|obj|off|ply|ply-ascii");

  auto* extr = app.add_subcommand("extrude", "rebuild a shape from a sphere and a curvature map");
  extr->add_option("mesh", ex_input, "sphere-like carrier mesh")->required();
  extr->add_option("sidecar", ex_sidecar, "curvature sidecar JSON")->required();
  ex_flags.attach(extr);
  extr->add_option("--fraction", fraction, "fraction of (h*-h) prescribed per step");
  extr->add_option("--extrude-steps", extrude_steps, "extrusion step budget");
  extr->add_option("--format", format_flag, "output format");

  auto* rt = app.add_subcommand("roundtrip", "fair, extrude back and measure the error");
  rt->add_option("mesh", rt_input, "input mesh")->required();
  rt_flags.attach(rt);
  rt->add_option("--fraction", fraction, "fraction of (h*-h) prescribed per step");
  rt->add_option("--extrude-steps", extrude_steps, "extrusion step budget");
  rt->add_flag("--resample", resample, "resample the map onto a canonical icosphere");
  rt->add_flag("--keep-meshes", keep_meshes, "write intermediate meshes");
  rt->add_option("--format", format_flag, "output format");

  auto* cmp = app.add_subcommand("compare", "spin flows vs the mean-curvature baseline");
  cmp->add_option("mesh", cmp_input, "input mesh")->required();
  cmp_flags.attach(cmp);
  cmp->add_option("--mc-tau", mc_tau, "MC step (<0: stability-bounded automatic step)");
  cmp->add_option("--mc-steps", mc_steps, "MC step cap");
  cmp->add_option("--format", format_flag, "output format");

  auto* spec = app.add_subcommand("spectrum", "leading Dirac eigenvector immersions");
  spec->add_option("mesh", spec_input, "input mesh")->required();
  spec->add_option("-k,--count", spectrum_k, "number of eigenpairs");
  spec->add_option("--format", format_flag, "output format");

  std::string synth_shape, synth_out;
  int subdiv = 3, frequency = 6, major = 32, minor = 16, resolution = 2;
  double ax = 2, ay = 1, az = 1, amplitude = 0.35, radius = 0.5, length = 3.0, bend = 90.0;
  double major_radius = 2.0, minor_radius = 1.0;
  auto* syn = app.add_subcommand("synth", "generate a synthetic test shape");
  syn->add_option("shape", synth_shape,
                  "icosphere|icosahedron|bumpy_sphere|ellipsoid|capsule_bent|torus|genus2")
      ->required();
  syn->add_option("--subdiv", subdiv, "icosphere subdivision level");
  syn->add_option("--ax", ax, "ellipsoid semi-axis x");
  syn->add_option("--ay", ay, "ellipsoid semi-axis y");
  syn->add_option("--az", az, "ellipsoid semi-axis z");
  syn->add_option("--amplitude", amplitude, "bump amplitude");
  syn->add_option("--frequency", frequency, "bump lobe count");
  syn->add_option("--radius", radius, "capsule radius");
  syn->add_option("--length", length, "capsule centerline length");
  syn->add_option("--bend", bend, "capsule bend angle (degrees)");
  syn->add_option("--major", major, "torus major segment count");
  syn->add_option("--minor", minor, "torus minor segment count");
  syn->add_option("--major-radius", major_radius, "torus major radius");
  syn->add_option("--minor-radius", minor_radius, "torus minor radius");
  syn->add_option("--resolution", resolution, "genus2 cells per hole side");
  syn->add_option("-o,--out", synth_out, "output file name (default <shape>.obj)");

  auto* met = app.add_subcommand("metrics", "deformation metrics between two meshes");
  met->add_option("src", m_src, "source mesh")->required();
  met->add_option("dst", m_dst, "deformed mesh (same combinatorics)")->required();
  met->add_flag("--align", do_align, "similarity-align dst to src first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  if (const char* env = std::getenv("SPINMESH_THREADS")) g.threads = std::atoi(env);
  g.threads = std::max(1, g.threads);
  Eigen::setNbThreads(g.threads);
  Logger log{&g};

  try {
    if (fair->parsed()) return cmd_fair(g, log, fair_input, fair_flags, format_flag);
    if (extr->parsed())
      return cmd_extrude(g, log, ex_input, ex_sidecar, ex_flags, fraction, extrude_steps,
                         format_flag);
    if (rt->parsed())
      return cmd_roundtrip(g, log, rt_input, rt_flags, fraction, extrude_steps, resample,
                           keep_meshes, format_flag);
    if (cmp->parsed()) return cmd_compare(g, log, cmp_input, cmp_flags, mc_tau, mc_steps, format_flag);
    if (spec->parsed()) return cmd_spectrum(g, log, spec_input, spectrum_k, format_flag);
    if (syn->parsed())
      return cmd_synth(g, log, synth_shape, subdiv, ax, ay, az, amplitude, frequency, radius,
                       length, bend, major, minor, major_radius, minor_radius, resolution,
                       synth_out);
    if (met->parsed()) return cmd_metrics(g, log, m_src, m_dst, do_align);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
