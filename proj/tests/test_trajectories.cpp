#include <cmath>
#include <cstring>
#include <numbers>

#include "doctest.h"
#include "tunnel/errors.hpp"
#include "tunnel/trajectories.hpp"

using namespace tunnel;
using std::numbers::pi;

namespace {

const PureStateAngles kLeft{pi / 2, 0.0};

bool bitwise_equal(const std::vector<BlochVector>& a, const std::vector<BlochVector>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(BlochVector)) == 0;
}

}  // namespace

TEST_CASE("zero rates reproduce the unitary solution") {
  const ModelSpec model{10.0, {ChannelSpec::dephasing(0.0)}};
  const auto grid = uniform_grid(1.0, 11);
  const JumpConfig config{200, 1e-3, 7};
  const auto ensemble = run_trajectories(kLeft, model, grid, config);
  const auto exact = evolve_exact(make_initial_state(kLeft), model, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(ensemble.std_error[i].sx == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ensemble.std_error[i].sy == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(ensemble.std_error[i].sz == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(std::abs(ensemble.mean[i].sx - exact.states[i].sx) < 1e-10);
    CHECK(std::abs(ensemble.mean[i].sy - exact.states[i].sy) < 1e-10);
  }
}

TEST_CASE("dephasing ensemble mean") {
  const ModelSpec model{10.0, {ChannelSpec::dephasing(1.0)}};
  const JumpConfig config{20000, 1e-3, 12345};
  const auto ensemble = run_trajectories(kLeft, model, {0.0, 0.25, 0.5}, config);
  const double target = std::exp(-1.0) * std::cos(5.0);
  CHECK(ensemble.n_trajectories == 20000);
  CHECK(std::abs(ensemble.mean[2].sx - target) <= 3 * ensemble.std_error[2].sx);
  CHECK(ensemble.std_error[2].sx > 0.0);
}

TEST_CASE("spin-flip ensemble keeps Sz near zero") {
  const ModelSpec model{10.0, {ChannelSpec::spinflip(1.0)}};
  const JumpConfig config{20000, 1e-3, 99};
  const auto grid = uniform_grid(1.0, 5);
  const auto ensemble = run_trajectories(kLeft, model, grid, config);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    CHECK(std::abs(ensemble.mean[i].sz) <= std::max(3 * ensemble.std_error[i].sz, 1e-12));
  }
}

TEST_CASE("rng streams") {
  auto a = trajectory_rng(42, 3);
  auto b = trajectory_rng(42, 3);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  CHECK(trajectory_rng(1, 0).next_u64() != trajectory_rng(2, 0).next_u64());

  auto s0 = trajectory_rng(42, 0);
  auto s1 = trajectory_rng(42, 1);
  const int n = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = s0.uniform();
    const double y = s1.uniform();
    REQUIRE(x >= 0.0);
    REQUIRE(x < 1.0);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
  CHECK(std::abs(corr) < 0.05);
  CHECK(sx / n == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("ensembles are bitwise independent of the thread count") {
  const ModelSpec model{10.0, {ChannelSpec::dephasing(0.5), ChannelSpec::spinflip(0.5)}};
  const JumpConfig config{1000, 1e-3, 5};
  const auto grid = uniform_grid(0.5, 6);
  const auto one = run_trajectories(kLeft, model, grid, config, 1);
  const auto two = run_trajectories(kLeft, model, grid, config, 2);
  const auto four = run_trajectories(kLeft, model, grid, config, 4);
  CHECK(bitwise_equal(one.mean, two.mean));
  CHECK(bitwise_equal(one.mean, four.mean));
  CHECK(bitwise_equal(one.std_error, four.std_error));

  const auto again = run_trajectories(kLeft, model, grid, config, 3);
  CHECK(bitwise_equal(one.mean, again.mean));

  // The serial reference merges in a different order, so agreement is to rounding.
  const auto serial = run_trajectories_serial(kLeft, model, grid, config);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(serial.mean[i].sx - one.mean[i].sx) < 1e-12);
    CHECK(std::abs(serial.mean[i].sz - one.mean[i].sz) < 1e-12);
    CHECK(std::abs(serial.std_error[i].sx - one.std_error[i].sx) < 1e-12);
  }
}

TEST_CASE("single trajectories stay normalized") {
  const ModelSpec model{10.0, {ChannelSpec::dephasing(2.0), ChannelSpec::spinflip(1.0),
                               ChannelSpec::custom(0.5, pauli_y())}};
  const JumpConfig config{1, 1e-3, 77};
  const auto grid = uniform_grid(3.0, 301);
  for (std::uint64_t index = 0; index < 20; ++index) {
    for (const auto& s : simulate_trajectory({1.0, 2.0}, model, grid, config, index))
      REQUIRE(std::abs(s.norm_squared() - 1.0) < 1e-10);
  }
}

TEST_CASE("pointer states are invariant under dephasing jumps") {
  const ModelSpec model{10.0, {ChannelSpec::dephasing(3.0)}};
  const auto ensemble = run_trajectories({0.0, 0.0}, model, uniform_grid(2.0, 5), JumpConfig{100, 1e-3, 1});
  for (const auto& s : ensemble.mean) CHECK(s.sz == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("precondition errors") {
  const ModelSpec fast{10.0, {ChannelSpec::dephasing(30.0)}};
  CHECK_THROWS_AS(run_trajectories(kLeft, fast, {0.0, 1.0}, JumpConfig{10, 1e-2, 0}), ConfigError);
  CHECK_THROWS_AS(run_trajectories(kLeft, fast, {0.0, 1.0}, JumpConfig{0, 1e-4, 0}), ConfigError);
  CHECK_THROWS_AS(run_trajectories(kLeft, fast, {0.0, 1.0}, JumpConfig{10, 0.0, 0}), ConfigError);
  CHECK_THROWS_AS(run_trajectories(kLeft, ModelSpec{10.0, {ChannelSpec::dephasing(1.0)}}, {0.0, 0.00125},
                                   JumpConfig{10, 1e-3, 0}),
                  ConfigError);
  CHECK(JumpConfig{10, 1e-3, 0}.max_jump_probability(ModelSpec{10.0, {ChannelSpec::dephasing(1.0)}}) ==
        doctest::Approx(1e-3));
}

TEST_CASE("halving dt stays within Monte Carlo error") {
  const ModelSpec model{10.0, {ChannelSpec::dephasing(1.0)}};
  const auto grid = uniform_grid(0.5, 6);
  const auto coarse = run_trajectories(kLeft, model, grid, JumpConfig{20000, 1e-3, 2024});
  const auto fine = run_trajectories(kLeft, model, grid, JumpConfig{20000, 5e-4, 2024});
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double mc = std::hypot(coarse.std_error[i].sx, fine.std_error[i].sx);
    CHECK(std::abs(coarse.mean[i].sx - fine.mean[i].sx) < 3 * mc);
  }
}
