#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "tunnel/dynamics.hpp"
#include "tunnel/qstate.hpp"

namespace tunnel {

struct JumpConfig {
  std::size_t n_trajectories = 1000;
  double dt = 1e-3;
  std::uint64_t seed = 0;

  /// Per-step total jump probability bound, dt * sum_k ||G_k^dag G_k||.
  double max_jump_probability(const ModelSpec& model) const;
  /// Throws ConfigError for n = 0, dt <= 0, or a jump probability bound >= 0.05.
  void validate(const ModelSpec& model) const;
};

struct EnsembleSeries {
  std::vector<double> times;
  std::vector<BlochVector> mean;
  std::vector<BlochVector> std_error;
  std::size_t n_trajectories = 0;

  TimeSeries as_time_series() const;
};

/// Independent random stream for one trajectory. The engine seed depends only
/// on (seed, trajectory_index), so results do not depend on which thread runs
/// the trajectory.
class TrajectoryRng {
 public:
  TrajectoryRng(std::uint64_t seed, std::uint64_t trajectory_index);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

TrajectoryRng trajectory_rng(std::uint64_t seed, std::uint64_t trajectory_index);

/// One quantum-jump trajectory sampled on t_grid (grid times must be whole
/// multiples of config.dt). Throws NumericalFailure if normalization drifts.
std::vector<BlochVector> simulate_trajectory(const PureStateAngles& angles, const ModelSpec& model,
                                             const std::vector<double>& t_grid,
                                             const JumpConfig& config, std::uint64_t index);

/// OpenMP ensemble. Trajectories are grouped into fixed blocks by index and
/// blocks are merged in index order, so the output is bitwise independent of
/// the thread count. threads = 0 keeps the OpenMP default.
EnsembleSeries run_trajectories(const PureStateAngles& angles, const ModelSpec& model,
                                const std::vector<double>& t_grid, const JumpConfig& config,
                                int threads = 0);

/// Single-threaded reference: one Welford pass over trajectories in index order.
EnsembleSeries run_trajectories_serial(const PureStateAngles& angles, const ModelSpec& model,
                                       const std::vector<double>& t_grid,
                                       const JumpConfig& config);

}  // namespace tunnel
