#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "doctest.h"
#include "tunnel/errors.hpp"
#include "tunnel/output.hpp"
#include "tunnel/scenario.hpp"

using namespace tunnel;
using nlohmann::json;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

const fs::path kScratchRoot = fs::temp_directory_path() / ("tunnel_test_" + std::to_string(::getpid()));

struct ScratchCleanup {
  ~ScratchCleanup() {
    std::error_code ec;
    fs::remove_all(kScratchRoot, ec);
  }
} scratch_cleanup;

fs::path scratch(const std::string& name) {
  const fs::path dir = kScratchRoot / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ScenarioConfig config_file(const std::string& name) {
  return load_config(fs::path(TUNNEL_CONFIG_DIR) / name);
}

json base_document() {
  return json::parse(R"({
    "model": {"omega": 10.0},
    "channels": [{"kind": "dephasing", "rate": 1.0}],
    "initial": {"theta": 1.5707963267948966},
    "time": {"t_end": 1.0, "n_samples": 11}
  })");
}

std::string config_error(const json& doc) {
  try {
    parse_config(doc);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

int cli(const std::string& args) {
  const std::string cmd = std::string(TUNNEL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config parsing") {
  const ScenarioConfig cfg = parse_config(base_document());
  CHECK(cfg.omega == 10.0);
  CHECK(cfg.channels.size() == 1);
  CHECK(cfg.initial.phi == 0.0);
  CHECK(cfg.backends == std::vector<Backend>{Backend::exact});
  CHECK(cfg.time_grid().size() == 11);

  // Round trip through the JSON echo.
  const ScenarioConfig again = parse_config(to_json(config_file("custom_channel.json")));
  CHECK(again.channels.size() == 3);
  CHECK(again.channels[2].custom_operator.has_value());
  const ScenarioConfig dw = parse_config(to_json(config_file("doublewell.json")));
  REQUIRE(dw.doublewell.has_value());
  CHECK(dw.doublewell->potential.v0 == 200.0);

  for (const char* name : {"dephasing.json", "spinflip.json", "unitary.json", "dephasing_trajectories.json",
                           "spinflip_trajectories.json", "doublewell.json", "sweep_base.json", "custom_channel.json"}) {
    CHECK_NOTHROW(config_file(name));
  }
}

TEST_CASE("config errors name the offending field") {
  json doc = base_document();
  doc["channels"][0]["rate"] = -1.0;
  CHECK(config_error(doc).find("/channels/0") != std::string::npos);

  doc = base_document();
  doc["time"]["n_samples"] = 1;
  CHECK(config_error(doc).find("/time/n_samples") != std::string::npos);

  doc = base_document();
  doc["time"]["t_end"] = 0.0;
  CHECK(config_error(doc).find("/time/t_end") != std::string::npos);

  doc = base_document();
  doc["initial"]["theta"] = 4.0;
  CHECK(config_error(doc).find("/initial") != std::string::npos);

  doc = base_document();
  doc["colour"] = "red";
  CHECK(config_error(doc).find("colour") != std::string::npos);

  doc = base_document();
  doc["channels"][0]["kind"] = "amplitude";
  CHECK(config_error(doc).find("/channels/0") != std::string::npos);

  doc = base_document();
  doc["backends"] = {"analytic"};
  doc["channels"].push_back({{"kind", "spinflip"}, {"rate", 1.0}});
  CHECK(config_error(doc).find("/backends") != std::string::npos);

  doc = base_document();
  doc["backends"] = {"trajectories"};
  CHECK(config_error(doc).find("/trajectories") != std::string::npos);

  doc = base_document();
  doc["model"]["potential"] = {{"x_max", 1.0}, {"v0", 10.0}, {"barrier_half_width", 0.1}};
  CHECK(config_error(doc).find("/model") != std::string::npos);

  doc = base_document();
  doc.erase("initial");
  CHECK(config_error(doc).find("/initial") != std::string::npos);

  try {
    parse_config_text("{\n  \"model\": {\"omega\": 10.0},\n  \"time\": {\"t_end\": 1.0,, }\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    CHECK(std::string(e.what()).find("column") != std::string::npos);
  }
}

TEST_CASE("double-well sourced models") {
  json doc = base_document();
  doc["model"] = {{"potential", {{"x_max", 1.0}, {"v0", 200.0}, {"barrier_half_width", 0.1}}}};
  const auto resolved = resolve_model(parse_config(doc));
  REQUIRE(resolved.doublet.has_value());
  CHECK(resolved.model.omega == resolved.doublet->omega);
  CHECK(resolved.model.omega == doctest::Approx(0.044).epsilon(0.05));

  doc["model"]["potential"]["v0"] = 5.0;
  CHECK_THROWS_AS(resolve_model(parse_config(doc)), ConfigError);
  doc["model"]["allow_invalid_two_level"] = true;
  CHECK(resolve_model(parse_config(doc)).doublet->two_level_suspect);
}

TEST_CASE("run writes CSVs and a complete manifest") {
  ScenarioConfig cfg = config_file("dephasing.json");
  cfg.output_dir = scratch("dephasing");
  const RunOutputs out = run(cfg);

  const std::string csv = read_file(cfg.output_dir / "exact.csv");
  CHECK(csv.rfind("t,sx,sy,sz,p_left,purity\n", 0) == 0);
  CHECK(csv.back() == '\n');
  const TimeSeries exact = parse_series_csv(csv, Backend::exact);
  REQUIRE(exact.size() == 601);
  for (std::size_t i = 0; i < exact.size(); ++i) {
    REQUIRE(std::abs(purity(exact.states[i]) - std::exp(-4 * exact.times[i])) < 1e-6);
  }

  const json manifest = json::parse(read_file(out.manifest));
  CHECK(manifest.at("tool") == "tunnel");
  CHECK(manifest.contains("version"));
  CHECK(manifest.at("config").at("name") == "dephasing");
  CHECK(manifest.at("files").size() == out.files.size());
  for (const auto& entry : manifest.at("files")) {
    const std::string content = read_file(cfg.output_dir / entry.at("path").get<std::string>());
    CHECK(entry.at("sha256") == sha256_hex(content));
    CHECK(entry.at("bytes") == content.size());
  }
  CHECK(fs::exists(cfg.output_dir / "plot.svg"));
}

TEST_CASE("spin-flip and unitary runs") {
  ScenarioConfig spinflip = config_file("spinflip.json");
  spinflip.output_dir = scratch("spinflip");
  spinflip.formats = {OutputFormat::csv};
  run(spinflip);
  const TimeSeries s = parse_series_csv(read_file(spinflip.output_dir / "exact.csv"), Backend::exact);
  CHECK(left_probability(s.states.front()) == doctest::Approx(1.0));
  CHECK(s.times.back() == 10.0);
  CHECK(std::abs(left_probability(s.states.back()) - 0.5) < 1e-3);

  ScenarioConfig unitary = config_file("unitary.json");
  unitary.output_dir = scratch("unitary");
  run(unitary);
  for (const char* name : {"exact.csv", "rk4.csv"}) {
    const TimeSeries u = parse_series_csv(read_file(unitary.output_dir / name), Backend::exact);
    CHECK(std::abs(u.states.back().sx - u.states.front().sx) < 1e-8);
    CHECK(std::abs(u.states.back().sy - u.states.front().sy) < 1e-8);
    CHECK(std::abs(u.states.back().sz - u.states.front().sz) < 1e-8);
  }
}

TEST_CASE("csv round trip is exact") {
  const auto series = evolve_exact(make_initial_state({1.0, 2.0}), ModelSpec{3.0, {ChannelSpec::spinflip(0.4)}},
                                   uniform_grid(2.0, 21));
  const TimeSeries back = parse_series_csv(series_csv(series), Backend::exact);
  CHECK(back.times == series.times);
  for (std::size_t i = 0; i < series.size(); ++i) CHECK(back.states[i] == series.states[i]);
  CHECK(format_number(0.1) == "0.10000000000000001");
}

TEST_CASE("compare tolerances and notes") {
  ScenarioConfig cfg = config_file("dephasing.json");
  const ScenarioResult r = simulate(cfg);
  const ComparisonReport report = compare(r.results, &cfg);
  CHECK(report.pass());
  for (const auto& p : report.pairs) {
    if ((p.first == Backend::analytic && p.second == Backend::exact) ||
        (p.first == Backend::exact && p.second == Backend::analytic))
      CHECK(p.tolerance == kAnalyticExactTolerance);
    else
      CHECK(p.tolerance == kIntegratorTolerance);
    CHECK(p.max_abs >= p.mean_abs);
    CHECK(p.max_abs < p.tolerance);
  }
  bool dephasing_note = false;
  for (const auto& n : report.typo_notes) {
    if (n.emitted && n.quantity.find("dephasing") != std::string::npos) {
      dephasing_note = true;
      CHECK(n.literal_deviation > 0.5);
      CHECK(n.corrected_deviation < 1e-9);
    }
  }
  CHECK(dephasing_note);
  CHECK(report.typo_notes_markdown().find("TYPO_NOTES") != std::string::npos);
  CHECK(report.to_json().at("pairs").size() == report.pairs.size());

  ScenarioConfig spinflip = config_file("spinflip.json");
  const ComparisonReport r4 = compare(simulate(spinflip).results, &spinflip);
  CHECK(r4.pass());
  bool pl_note = false;
  for (const auto& n : r4.typo_notes) pl_note |= n.emitted && n.literal_deviation > 0.1;
  CHECK(pl_note);

  // A perturbed series fails; mismatched grids are rejected.
  auto tampered = r.results;
  tampered[0].series.states[5].sx += 1e-6;
  CHECK_FALSE(compare(tampered).pass());
  tampered[0].series.times.pop_back();
  tampered[0].series.states.pop_back();
  CHECK_THROWS_AS(compare(tampered), ConfigError);
}

TEST_CASE("compare from written runs") {
  ScenarioConfig cfg = config_file("spinflip.json");
  cfg.output_dir = scratch("spinflip_reload");
  cfg.formats = {OutputFormat::csv};
  run(cfg);
  std::optional<ScenarioConfig> loaded;
  const auto results = load_run(cfg.output_dir, &loaded);
  CHECK(results.size() == 3);
  REQUIRE(loaded.has_value());
  CHECK(loaded->name == cfg.name);
  CHECK(compare(results, &*loaded).pass());
}

TEST_CASE("sweeps") {
  ScenarioConfig base = config_file("sweep_base.json");

  const auto k1_rows = sweep(base, parse_axis("k1=2,0.5,1"));
  REQUIRE(k1_rows.size() == 3);
  CHECK(k1_rows[0].value == 0.5);
  CHECK(k1_rows[2].value == 2.0);
  CHECK(k1_rows[0].time_to_mixing > k1_rows[1].time_to_mixing);
  CHECK(k1_rows[1].time_to_mixing > k1_rows[2].time_to_mixing);

  const auto theta_rows = sweep(base, parse_axis(std::vector<std::string>{"theta=0,0.7853981633974483,1.5707963267948966"}));
  for (const auto& row : theta_rows) CHECK(std::abs(row.final_purity - std::pow(std::cos(row.value), 2)) < 1e-6);

  ScenarioConfig well = config_file("doublewell.json");
  well.t_end = 50.0;
  well.n_samples = 101;
  const auto v0_rows = sweep(well, parse_axis("v0=20,50,100,200"));
  for (std::size_t i = 1; i < v0_rows.size(); ++i) CHECK(v0_rows[i].omega < v0_rows[i - 1].omega);
  for (const auto& row : v0_rows) CHECK(row.validity_ratio.has_value());

  CHECK_THROWS_AS(parse_axis(std::vector<std::string>{"k1=1", "k2=1"}), ConfigError);
  CHECK_THROWS_AS(parse_axis("mass=1,2"), ConfigError);
  CHECK_THROWS_AS(parse_axis("k1=1,x"), ConfigError);
  CHECK_THROWS_AS(sweep(base, parse_axis("k2=1,2")), ConfigError);

  const std::string table = sweep_csv(parse_axis("k1=2,0.5,1"), k1_rows);
  CHECK(table.rfind("k1,omega,final_purity,time_to_mixing,validity_ratio\n", 0) == 0);
}

TEST_CASE("outputs do not depend on the thread count") {
  ScenarioConfig base = config_file("sweep_base.json");
  const SweepAxis axis = parse_axis("k1=0.25,0.5,1,2,4");
  CHECK(sweep_csv(axis, sweep(base, axis, 1)) == sweep_csv(axis, sweep(base, axis, 3)));

  ScenarioConfig traj = config_file("dephasing_trajectories.json");
  traj.jumps->n_trajectories = 500;
  traj.formats = {OutputFormat::csv};
  traj.threads = 1;
  traj.output_dir = scratch("traj1");
  run(traj);
  const std::string one_thread = read_file(traj.output_dir / "trajectories.csv");
  traj.threads = 4;
  traj.output_dir = scratch("traj4");
  run(traj);
  CHECK(one_thread == read_file(traj.output_dir / "trajectories.csv"));
}

TEST_CASE("command line exit codes") {
  const std::string configs = TUNNEL_CONFIG_DIR;
  const fs::path dir = scratch("cli");
  CHECK(cli("run --config " + configs + "/dephasing.json --out " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "manifest.json"));
  CHECK(cli("compare --run " + (dir / "run").string()) == 0);
  CHECK(fs::exists(dir / "run" / "typo_notes.md"));
  CHECK(cli("compare --config " + configs + "/unitary.json --out " + (dir / "cmp").string()) == 0);
  CHECK(cli("doublewell --config " + configs + "/doublewell.json --out " + (dir / "dw").string()) == 0);
  CHECK(fs::exists(dir / "dw" / "spectrum.csv"));
  CHECK(fs::exists(dir / "dw" / "doublet.json"));
  CHECK(cli("sweep --config " + configs + "/sweep_base.json --axis k1=0.5,1 --out " + (dir / "sw").string()) == 0);
  CHECK(fs::exists(dir / "sw" / "sweep_k1.csv"));
  CHECK(cli("trajectories --config " + configs + "/dephasing_trajectories.json --seed 7 --out " + (dir / "tr").string() +
            " --threads 1") == 0);

  // Usage and configuration errors.
  CHECK(cli("") == 1);
  CHECK(cli("run") == 1);
  CHECK(cli("sweep --config " + configs + "/sweep_base.json --axis k1=1 --axis k2=1") == 1);
  CHECK(cli("run --config " + configs + "/dephasing.json --format pdf --out " + (dir / "bad").string()) == 1);
  CHECK(cli("run --config " + configs + "/unitary.json --seed 3 --out " + (dir / "bad").string()) == 1);
  CHECK(cli("compare --config " + configs + "/dephasing.json --run " + (dir / "run").string()) == 1);

  const fs::path broken = dir / "broken.json";
  atomic_write(broken, "{\"model\": {\"omega\": 10}, \"time\": }");
  CHECK(cli("run --config " + broken.string()) == 1);
  const fs::path invalid = dir / "invalid.json";
  json doc = base_document();
  doc["time"]["n_samples"] = 1;
  atomic_write(invalid, doc.dump());
  CHECK(cli("run --config " + invalid.string()) == 1);

  // Propagation failure: an RK4 step far outside the stability region.
  const fs::path stiff = dir / "stiff.json";
  doc = base_document();
  doc["channels"][0]["rate"] = 100.0;
  doc["backends"] = {"rk4"};
  doc["step"] = 0.1;
  doc["output"] = {{"dir", (dir / "stiff").string()}};
  atomic_write(stiff, doc.dump());
  CHECK(cli("run --config " + stiff.string()) == 2);
}
