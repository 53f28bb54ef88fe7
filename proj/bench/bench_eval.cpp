// Times population fitness evaluation: serial reference vs OpenMP workers.
// The two paths must agree bit-for-bit; the speedup column is informational.

#include <chrono>
#include <cstdio>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "racerl/evolution.hpp"

using namespace racerl;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  int population = 128;
  if (argc > 1) population = std::atoi(argv[1]);

  TrackConfig tc;
  tc.seed = 11;
  const Track track = generate_track(tc);

  EvalContext ctx;
  ctx.max_frames = 600;

  Rng rng(42);
  const NetworkShape shape = policy_shape(6 + ctx.features.curvature_samples);
  std::vector<Individual> serial_pop(population);
  for (Individual& ind : serial_pop) ind.genome = random_genome(shape, rng, 1.0);
  std::vector<Individual> parallel_pop = serial_pop;

#if defined(_OPENMP)
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (OpenMP disabled)\n");
#endif
  std::printf("population: %d, max_frames: %d\n", population, ctx.max_frames);

  auto t0 = std::chrono::steady_clock::now();
  evaluate_population_serial(serial_pop, track, ctx);
  const double serial_s = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  evaluate_population(parallel_pop, track, ctx);
  const double parallel_s = seconds_since(t0);

  for (int i = 0; i < population; ++i) {
    if (serial_pop[i].fitness != parallel_pop[i].fitness) {
      std::printf("MISMATCH at individual %d: %.17g vs %.17g\n", i, serial_pop[i].fitness,
                  parallel_pop[i].fitness);
      return 1;
    }
  }

  std::printf("serial:   %8.3f s\n", serial_s);
  std::printf("parallel: %8.3f s\n", parallel_s);
  std::printf("speedup:  %8.2fx\n", parallel_s > 0.0 ? serial_s / parallel_s : 0.0);
  std::printf("results identical across both paths\n");
  return 0;
}
