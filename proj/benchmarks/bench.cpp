#include <benchmark/benchmark.h>

#include "spinmesh/dirac.hpp"
#include "spinmesh/flows.hpp"
#include "spinmesh/integrate.hpp"
#include "spinmesh/metrics.hpp"
#include "spinmesh/spin.hpp"
#include "spinmesh/synth.hpp"

using namespace spinmesh;

namespace {

const FaceEdgeNet& sphere_net(int subdiv) {
  static std::map<int, FaceEdgeNet> cache;
  auto it = cache.find(subdiv);
  if (it == cache.end())
    it = cache.emplace(subdiv, FaceEdgeNet::build(synth::icosphere(subdiv))).first;
  return it->second;
}

void bm_build_net(benchmark::State& state) {
  const MeshData mesh = synth::icosphere(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(FaceEdgeNet::build(mesh));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(mesh.faces.size()));
}
BENCHMARK(bm_build_net)->Arg(3)->Arg(4);

void bm_assemble_intrinsic(benchmark::State& state) {
  const FaceEdgeNet& net = sphere_net(static_cast<int>(state.range(0)));
  const HyperedgeField E = hyperedges(net);
  for (auto _ : state) benchmark::DoNotOptimize(assemble_intrinsic(net, E).to_real());
  state.SetItemsProcessed(state.iterations() * net.face_count());
}
BENCHMARK(bm_assemble_intrinsic)->Arg(3)->Arg(4);

void bm_solve_spin(benchmark::State& state) {
  const FaceEdgeNet& net = sphere_net(static_cast<int>(state.range(0)));
  const HyperedgeField E = hyperedges(net);
  const FaceScalarField rho = 0.5 * face_mean_curvature(net).density;
  SolveConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(solve_spin(net, E, rho, cfg));
  state.SetItemsProcessed(state.iterations() * net.face_count());
}
BENCHMARK(bm_solve_spin)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void bm_integrate_edges(benchmark::State& state) {
  const FaceEdgeNet& net = sphere_net(static_cast<int>(state.range(0)));
  const HyperedgeField E = hyperedges(net);
  const EdgeOneForm form = EdgeOneForm::from_hyperedges(E);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_edges(net, form));
  state.SetItemsProcessed(state.iterations() * net.vertex_count());
}
BENCHMARK(bm_integrate_edges)->Arg(3)->Arg(4)->Unit(benchmark::kMillisecond);

void bm_fairing_step(benchmark::State& state) {
  const FaceEdgeNet& net = sphere_net(static_cast<int>(state.range(0)));
  FlowConfig cfg;
  cfg.tau = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(fairing_step(net, cfg));
  state.SetItemsProcessed(state.iterations() * net.face_count());
}
BENCHMARK(bm_fairing_step)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);

void bm_point_to_surface(benchmark::State& state) {
  const FaceEdgeNet& query = sphere_net(3);
  const FaceEdgeNet& reference = sphere_net(4);
  for (auto _ : state) benchmark::DoNotOptimize(point_to_surface_error(query, reference));
  state.SetItemsProcessed(state.iterations() * query.vertex_count());
}
BENCHMARK(bm_point_to_surface)->Unit(benchmark::kMillisecond);

void bm_dirac_eigenpair(benchmark::State& state) {
  const FaceEdgeNet& net = sphere_net(2);
  const HyperedgeField E = hyperedges(net);
  const QuaternionSparseMatrix dx = assemble_intrinsic(net, E);
  for (auto _ : state) benchmark::DoNotOptimize(smallest_eigenpairs(dx, net.face_areas(), 1));
}
BENCHMARK(bm_dirac_eigenpair)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
