// Wall-clock comparison of the OpenMP kernels against their serial references:
// the trajectory ensemble and the parameter sweep.

#include <chrono>
#include <cstdio>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"
#include "tunnel/scenario.hpp"
#include "tunnel/trajectories.hpp"

namespace {

template <typename F>
double seconds(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP timings for the trajectory ensemble and the sweep"};
  std::size_t n_traj = 20000;
  app.add_option("--trajectories", n_traj, "Ensemble size")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  int max_threads = 1;
#ifdef _OPENMP
  max_threads = omp_get_max_threads();
#endif

  const tunnel::PureStateAngles left{0.5 * std::numbers::pi, 0.0};
  const tunnel::ModelSpec model{10.0, {tunnel::ChannelSpec::spinflip(1.0)}};
  const auto grid = tunnel::uniform_grid(2.0, 201);
  const tunnel::JumpConfig config{n_traj, 1e-3, 7};

  std::printf("trajectory ensemble: %zu trajectories, %zu steps each\n", n_traj, std::size_t{2000});
  const double serial = seconds([&] { tunnel::run_trajectories_serial(left, model, grid, config); });
  std::printf("  serial reference     %8.3f s\n", serial);
  for (int threads = 1; threads <= max_threads; threads *= 2) {
    const double t = seconds([&] { tunnel::run_trajectories(left, model, grid, config, threads); });
    std::printf("  openmp %2d threads    %8.3f s  (x%.2f)\n", threads, t, serial / t);
  }

  tunnel::ScenarioConfig base;
  base.omega = 10.0;
  base.channels = {tunnel::ChannelSpec::dephasing(1.0)};
  base.initial = left;
  base.t_end = 3.0;
  base.n_samples = 3001;
  tunnel::SweepAxis axis{"k1", {}};
  for (int i = 1; i <= 64; ++i) axis.values.push_back(0.05 * i);

  std::printf("k1 sweep: %zu points x %zu samples\n", axis.values.size(), base.n_samples);
  const double one = seconds([&] { tunnel::sweep(base, axis, 1); });
  std::printf("  1 thread             %8.3f s\n", one);
  if (max_threads > 1) {
    const double many = seconds([&] { tunnel::sweep(base, axis, max_threads); });
    std::printf("  %2d threads           %8.3f s  (x%.2f)\n", max_threads, many, one / many);
  }
  return 0;
}
