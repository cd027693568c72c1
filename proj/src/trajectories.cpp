#include "tunnel/trajectories.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tunnel/errors.hpp"
#include "tunnel/expm.hpp"

namespace tunnel {

namespace {

constexpr double kMaxJumpProbability = 0.05;
constexpr double kNormTolerance = 1e-10;
constexpr std::size_t kBlockSize = 64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Everything a trajectory needs that does not depend on the random stream.
struct JumpKernel {
  Matrix2c no_jump;    // exp(-i H_eff dt)
  Matrix2c unitary;    // exp(-i H dt)
  std::vector<Matrix2c> jumps;
  std::vector<Matrix2c> jump_weights;  // G^dag G
  std::vector<std::size_t> record_steps;
  double dt = 0.0;

  JumpKernel(const ModelSpec& model, const std::vector<double>& t_grid, double step) : dt(step) {
    const Complex minus_i{0.0, -1.0};
    Matrix2c h_eff = model.hamiltonian();
    for (const auto& channel : model.channels) {
      const Matrix2c g = channel.jump_operator();
      jumps.push_back(g);
      jump_weights.push_back(g.adjoint() * g);
      h_eff += Complex(0.0, -0.5) * jump_weights.back();
    }
    no_jump = expm((minus_i * dt * h_eff).eval());
    unitary = expm((minus_i * dt * model.hamiltonian()).eval());

    record_steps.reserve(t_grid.size());
    for (const double t : t_grid) {
      const double ratio = t / dt;
      const double n = std::round(ratio);
      if (std::abs(ratio - n) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream out;
        out << "trajectory grid time " << t << " is not a multiple of dt=" << dt;
        throw ConfigError(out.str());
      }
      record_steps.push_back(static_cast<std::size_t>(n));
    }
  }

  template <typename Sink>
  void run(Vector2c psi, TrajectoryRng& rng, Sink&& sink) const {
    std::size_t step = 0;
    for (std::size_t k = 0; k < record_steps.size(); ++k) {
      for (; step < record_steps[k]; ++step) {
        const double r = rng.uniform();
        double cumulative = 0.0;
        bool jumped = false;
        for (std::size_t j = 0; j < jumps.size(); ++j) {
          cumulative += dt * (psi.adjoint() * jump_weights[j] * psi)(0).real();
          if (r < cumulative) {
            psi = unitary * (jumps[j] * psi);
            jumped = true;
            break;
          }
        }
        if (!jumped) psi = no_jump * psi;
        const double norm = psi.norm();
        psi /= norm;
        if (std::abs(psi.squaredNorm() - 1.0) > kNormTolerance || !std::isfinite(norm)) {
          throw NumericalFailure("trajectory lost normalization", static_cast<double>(step + 1) * dt);
        }
      }
      sink(k, ket_to_bloch(psi));
    }
  }
};

// Welford accumulator for the three Bloch components at every grid time.
struct Moments {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Moments(std::size_t n_times) : mean(3 * n_times, 0.0), m2(3 * n_times, 0.0) {}

  void begin_sample() { ++count; }
  void add(std::size_t k, const BlochVector& s) {
    const double values[3] = {s.sx, s.sy, s.sz};
    const double n = static_cast<double>(count);
    for (int c = 0; c < 3; ++c) {
      const std::size_t idx = 3 * k + c;
      const double delta = values[c] - mean[idx];
      mean[idx] += delta / n;
      m2[idx] += delta * (values[c] - mean[idx]);
    }
  }

  // Chan et al. pairwise combination.
  void merge(const Moments& other) {
    if (other.count == 0) return;
    const double na = static_cast<double>(count);
    const double nb = static_cast<double>(other.count);
    const double n = na + nb;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = other.mean[i] - mean[i];
      mean[i] += delta * (nb / n);
      m2[i] += other.m2[i] + delta * delta * (na * nb / n);
    }
    count += other.count;
  }
};

EnsembleSeries finish(const std::vector<double>& t_grid, const Moments& moments) {
  EnsembleSeries out;
  out.times = t_grid;
  out.n_trajectories = moments.count;
  const double n = static_cast<double>(moments.count);
  const auto stderr_of = [&](std::size_t idx) {
    if (moments.count < 2) return 0.0;
    return std::sqrt(std::max(0.0, moments.m2[idx]) / (n - 1.0) / n);
  };
  for (std::size_t k = 0; k < t_grid.size(); ++k) {
    out.mean.push_back({moments.mean[3 * k], moments.mean[3 * k + 1], moments.mean[3 * k + 2]});
    out.std_error.push_back({stderr_of(3 * k), stderr_of(3 * k + 1), stderr_of(3 * k + 2)});
  }
  return out;
}

void prepare(const ModelSpec& model, const std::vector<double>& t_grid, const JumpConfig& config) {
  model.validate();
  check_time_grid(t_grid);
  config.validate(model);
}

}  // namespace

double JumpConfig::max_jump_probability(const ModelSpec& model) const {
  double total = 0.0;
  for (const auto& channel : model.channels) {
    const Matrix2c g = channel.jump_operator();
    const Matrix2c weight = g.adjoint() * g;
    Eigen::SelfAdjointEigenSolver<Matrix2c> solver(weight, Eigen::EigenvaluesOnly);
    total += solver.eigenvalues().maxCoeff();
  }
  return dt * total;
}

void JumpConfig::validate(const ModelSpec& model) const {
  if (n_trajectories == 0) throw ConfigError("n_trajectories must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("trajectory dt must be > 0");
  const double p = max_jump_probability(model);
  if (!(p < kMaxJumpProbability)) {
    std::ostringstream out;
    out << "per-step jump probability " << p << " is not below " << kMaxJumpProbability
        << "; reduce dt";
    throw ConfigError(out.str());
  }
}

TimeSeries EnsembleSeries::as_time_series() const {
  return {times, mean, Backend::trajectories};
}

TrajectoryRng::TrajectoryRng(std::uint64_t seed, std::uint64_t trajectory_index)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(trajectory_index + 0x632be59bd9b4e019ULL))) {}

double TrajectoryRng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

TrajectoryRng trajectory_rng(std::uint64_t seed, std::uint64_t trajectory_index) {
  return TrajectoryRng(seed, trajectory_index);
}

std::vector<BlochVector> simulate_trajectory(const PureStateAngles& angles, const ModelSpec& model,
                                             const std::vector<double>& t_grid,
                                             const JumpConfig& config, std::uint64_t index) {
  prepare(model, t_grid, config);
  const JumpKernel kernel(model, t_grid, config.dt);
  TrajectoryRng rng(config.seed, index);
  std::vector<BlochVector> states(t_grid.size());
  kernel.run(make_initial_ket(angles), rng,
             [&](std::size_t k, const BlochVector& s) { states[k] = s; });
  return states;
}

EnsembleSeries run_trajectories(const PureStateAngles& angles, const ModelSpec& model,
                                const std::vector<double>& t_grid, const JumpConfig& config,
                                int threads) {
  prepare(model, t_grid, config);
  const JumpKernel kernel(model, t_grid, config.dt);
  const Vector2c psi0 = make_initial_ket(angles);
  const std::size_t n_blocks = (config.n_trajectories + kBlockSize - 1) / kBlockSize;
  std::vector<Moments> blocks(n_blocks, Moments(t_grid.size()));

#ifdef _OPENMP
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
#endif
  // Exceptions must not escape the parallel region; keep the first one.
  std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(n_blocks); ++b) {
    try {
      const std::size_t first = static_cast<std::size_t>(b) * kBlockSize;
      const std::size_t last = std::min(first + kBlockSize, config.n_trajectories);
      Moments& acc = blocks[static_cast<std::size_t>(b)];
      for (std::size_t i = first; i < last; ++i) {
        TrajectoryRng rng(config.seed, i);
        acc.begin_sample();
        kernel.run(psi0, rng, [&](std::size_t k, const BlochVector& s) { acc.add(k, s); });
      }
    } catch (...) {
#pragma omp critical(tunnel_trajectory_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  Moments total(t_grid.size());
  for (const auto& block : blocks) total.merge(block);
  return finish(t_grid, total);
}

EnsembleSeries run_trajectories_serial(const PureStateAngles& angles, const ModelSpec& model,
                                       const std::vector<double>& t_grid,
                                       const JumpConfig& config) {
  prepare(model, t_grid, config);
  const JumpKernel kernel(model, t_grid, config.dt);
  const Vector2c psi0 = make_initial_ket(angles);
  Moments total(t_grid.size());
  for (std::size_t i = 0; i < config.n_trajectories; ++i) {
    TrajectoryRng rng(config.seed, i);
    total.begin_sample();
    kernel.run(psi0, rng, [&](std::size_t k, const BlochVector& s) { total.add(k, s); });
  }
  return finish(t_grid, total);
}

}  // namespace tunnel
