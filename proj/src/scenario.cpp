#include "tunnel/scenario.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <exception>
#include <initializer_list>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "tunnel/analytic.hpp"
#include "tunnel/errors.hpp"
#include "tunnel/output.hpp"

namespace tunnel {

using nlohmann::json;

namespace {

constexpr double kMixingBand = 0.005;

// ---------------------------------------------------------------------------
// Config field access with JSON-pointer diagnostics.

[[noreturn]] void field_error(const std::string& path, const std::string& message) {
  throw ConfigError("config field " + (path.empty() ? std::string("/") : path) + ": " + message);
}

const json& require_object(const json& j, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  return j;
}

void reject_unknown_keys(const json& j, const std::string& path,
                         std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      field_error(path + "/" + key, "unknown field");
    }
  }
}

double number_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) field_error(path + "/" + key, "required field missing");
  const json& v = j.at(key);
  if (!v.is_number()) field_error(path + "/" + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) field_error(path + "/" + key, "must be finite");
  return x;
}

double number_or(const json& j, const std::string& key, const std::string& path, double fallback) {
  return j.contains(key) ? number_at(j, key, path) : fallback;
}

std::uint64_t unsigned_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) field_error(path + "/" + key, "required field missing");
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
    field_error(path + "/" + key, "expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::string string_at(const json& j, const std::string& key, const std::string& path) {
  if (!j.contains(key)) field_error(path + "/" + key, "required field missing");
  if (!j.at(key).is_string()) field_error(path + "/" + key, "expected a string");
  return j.at(key).get<std::string>();
}

template <typename F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    if (std::string_view(e.what()).rfind("config field", 0) == 0) throw;
    field_error(path, e.what());
  }
}

Complex complex_entry(const json& v, const std::string& path) {
  if (v.is_number()) return {v.get<double>(), 0.0};
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    return {v[0].get<double>(), v[1].get<double>()};
  }
  field_error(path, "expected a number or a [re, im] pair");
}

Matrix2c operator_at(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2) field_error(path, "expected a 2x2 array");
  Matrix2c m;
  for (int i = 0; i < 2; ++i) {
    const std::string row_path = path + "/" + std::to_string(i);
    if (!v[i].is_array() || v[i].size() != 2) field_error(row_path, "expected a row of 2 entries");
    for (int j = 0; j < 2; ++j) m(i, j) = complex_entry(v[i][j], row_path + "/" + std::to_string(j));
  }
  return m;
}

json operator_to_json(const Matrix2c& m) {
  json rows = json::array();
  for (int i = 0; i < 2; ++i) {
    json row = json::array();
    for (int j = 0; j < 2; ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

PotentialSpec potential_at(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown_keys(j, path, {"x_max", "v0", "barrier_half_width", "barrier_shape", "mass", "hbar"});
  PotentialSpec p;
  p.x_max = number_at(j, "x_max", path);
  p.v0 = number_at(j, "v0", path);
  p.barrier_half_width = number_at(j, "barrier_half_width", path);
  if (j.contains("barrier_shape")) {
    const std::string shape = string_at(j, "barrier_shape", path);
    p.barrier_shape = with_path(path + "/barrier_shape", [&] { return barrier_shape_from_string(shape); });
  }
  p.mass = number_or(j, "mass", path, 1.0);
  p.hbar = number_or(j, "hbar", path, 1.0);
  with_path(path, [&] { p.validate(); });
  return p;
}

// ---------------------------------------------------------------------------
// Comparison helpers.

double component(const BlochVector& s, int c) { return c == 0 ? s.sx : (c == 1 ? s.sy : s.sz); }

double fixed_tolerance(Backend a, Backend b) {
  const auto involves = [&](Backend x) { return a == x || b == x; };
  if (involves(Backend::analytic) && involves(Backend::exact)) return kAnalyticExactTolerance;
  return kIntegratorTolerance;
}

void check_same_grid(const TimeSeries& a, const TimeSeries& b) {
  if (a.times.size() != b.times.size()) {
    throw ConfigError("time grids differ in length (" + std::to_string(a.times.size()) + " vs " +
                      std::to_string(b.times.size()) + ")");
  }
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    if (std::abs(a.times[i] - b.times[i]) > 1e-12 * std::max(1.0, std::abs(a.times[i]))) {
      throw ConfigError("time grids differ at sample " + std::to_string(i));
    }
  }
}

bool is_left_localized(const PureStateAngles& a) {
  return std::abs(a.theta - 0.5 * std::numbers::pi) < 1e-12 && a.phi == 0.0;
}

std::vector<TypoNote> typo_notes_for(const ScenarioConfig& config, const ModelSpec& model,
                                     const std::vector<double>& grid) {
  std::vector<TypoNote> notes;
  if (model.channels.size() != 1 || model.channels.front().kind == ChannelKind::custom) return notes;
  const ChannelSpec& channel = model.channels.front();
  const TimeSeries ode = evolve_exact(make_initial_state(config.initial), model, grid);
  const double k = channel.rate;
  const double w = model.omega;

  const auto finish = [&](TypoNote note) {
    note.tolerance = kAnalyticExactTolerance;
    note.emitted = note.literal_deviation > note.tolerance && note.corrected_deviation <= note.tolerance;
    notes.push_back(std::move(note));
  };

  if (channel.kind == ChannelKind::dephasing) {
    TypoNote note;
    note.quantity = "dephasing coherence rho01(t)";
    note.literal_form = "1/2 e^{-i phi} sin(theta) e^{-2(k1 + i omega) t}";
    note.corrected_form = "1/2 e^{-i phi} sin(theta) e^{(-2 k1 + i omega) t}";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const BlochVector& s = ode.states[i];
      const Complex rho01(0.5 * s.sx, -0.5 * s.sy);
      const Complex lit = literal::dephasing_coherence(config.initial, k, w, grid[i]);
      const Complex cor = dephasing_solution(config.initial, k, w, grid[i])(0, 1);
      note.literal_deviation = std::max(note.literal_deviation, std::abs(lit - rho01));
      note.corrected_deviation = std::max(note.corrected_deviation, std::abs(cor - rho01));
    }
    finish(note);
    return notes;
  }

  TypoNote coherence;
  coherence.quantity = "spin-flip coherence c(t) = 2 rho10(t)";
  coherence.literal_form =
      "e^{-k2 t} sin(theta) {e^{-i phi} cos(eps t) + sin(eps t)/eps [k2 e^{i phi} - i omega e^{-i phi}]}";
  coherence.corrected_form =
      "e^{-k2 t} sin(theta) {e^{i phi} cos(eps t) + sin(eps t)/eps [k2 e^{-i phi} - i omega e^{i phi}]}";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Complex c(ode.states[i].sx, ode.states[i].sy);
    coherence.literal_deviation = std::max(
        coherence.literal_deviation, std::abs(literal::spinflip_coherence(config.initial, k, w, grid[i]) - c));
    coherence.corrected_deviation = std::max(
        coherence.corrected_deviation, std::abs(spinflip_coherence(config.initial, k, w, grid[i]) - c));
  }
  finish(coherence);

  if (is_left_localized(config.initial)) {
    TypoNote prob;
    prob.quantity = "spin-flip left-well probability P_l(t)";
    prob.literal_form = "1/2 (1 + e^{-k2 t}) (cos(eps t) + (k2/eps) sin(eps t))";
    prob.corrected_form = "1/2 [1 + e^{-k2 t} (cos(eps t) + (k2/eps) sin(eps t))]";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double p = left_probability(ode.states[i]);
      prob.literal_deviation =
          std::max(prob.literal_deviation, std::abs(literal::spinflip_left_prob(k, w, grid[i]) - p));
      prob.corrected_deviation =
          std::max(prob.corrected_deviation, std::abs(spinflip_left_prob(k, w, grid[i]) - p));
    }
    finish(prob);
  }
  return notes;
}

std::vector<std::vector<double>> parse_numeric_csv(const std::string& text, std::vector<std::string>& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("empty CSV");
  header.clear();
  {
    std::istringstream h(line);
    std::string name;
    while (std::getline(h, name, ',')) header.push_back(name);
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string field;
    while (std::getline(fields, field, ',')) row.push_back(std::stod(field));
    if (row.size() != header.size()) throw ConfigError("CSV row has wrong column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string series_json(const TimeSeries& series) {
  json j;
  j["backend"] = std::string(to_string(series.provenance));
  j["t"] = series.times;
  std::vector<std::array<double, 3>> states;
  for (const auto& s : series.states) states.push_back({s.sx, s.sy, s.sz});
  j["bloch"] = states;
  return j.dump(1) + "\n";
}

}  // namespace

// ---------------------------------------------------------------------------

std::string_view to_string(OutputFormat format) {
  switch (format) {
    case OutputFormat::csv:
      return "csv";
    case OutputFormat::json:
      return "json";
    case OutputFormat::svg:
      return "svg";
  }
  return "unknown";
}

OutputFormat output_format_from_string(std::string_view name) {
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  if (name == "svg") return OutputFormat::svg;
  throw ConfigError("unknown output format '" + std::string(name) + "'");
}

bool ScenarioConfig::has_backend(Backend b) const {
  return std::find(backends.begin(), backends.end(), b) != backends.end();
}

void ScenarioConfig::validate() const {
  if (omega.has_value() == doublewell.has_value()) {
    field_error("/model", "give exactly one of omega or potential");
  }
  if (omega && (!(*omega >= 0.0) || !std::isfinite(*omega))) field_error("/model/omega", "must be >= 0");
  for (std::size_t i = 0; i < channels.size(); ++i) {
    with_path("/channels/" + std::to_string(i), [&] { channels[i].validate(); });
  }
  with_path("/initial", [&] { make_initial_state(initial); });
  if (!(t_end > 0.0)) field_error("/time/t_end", "must be > 0");
  if (n_samples < 2) field_error("/time/n_samples", "must be >= 2");
  if (backends.empty()) field_error("/backends", "at least one backend is required");
  if (has_backend(Backend::analytic) &&
      (channels.size() != 1 || channels.front().kind == ChannelKind::custom)) {
    field_error("/backends", "analytic backend needs exactly one dephasing or spinflip channel");
  }
  if (has_backend(Backend::trajectories) && !jumps) {
    field_error("/trajectories", "required when the trajectories backend is selected");
  }
  if (step && !(*step > 0.0)) field_error("/step", "must be > 0");
  if (doublewell) {
    with_path("/model/potential", [&] { doublewell->potential.validate(); });
    if (doublewell->n_grid < 64) field_error("/model/n_grid", "must be >= 64");
    if (doublewell->n_levels < 3 || doublewell->n_levels > 12) field_error("/model/n_levels", "must be in [3, 12]");
  }
  if (threads < 0) field_error("/threads", "must be >= 0");
}

ScenarioConfig parse_config(const json& doc) {
  require_object(doc, "");
  reject_unknown_keys(doc, "", {"name", "model", "channels", "initial", "time", "backends", "step",
                                "trajectories", "output", "threads"});
  ScenarioConfig cfg;
  if (doc.contains("name")) cfg.name = string_at(doc, "name", "");

  if (!doc.contains("model")) field_error("/model", "required field missing");
  const json& model = require_object(doc.at("model"), "/model");
  reject_unknown_keys(model, "/model", {"omega", "potential", "n_grid", "n_levels", "allow_invalid_two_level"});
  if (model.contains("omega")) cfg.omega = number_at(model, "omega", "/model");
  if (model.contains("potential")) {
    DoubleWellSource source;
    source.potential = potential_at(model.at("potential"), "/model/potential");
    if (model.contains("n_grid")) source.n_grid = unsigned_at(model, "n_grid", "/model");
    if (model.contains("n_levels")) source.n_levels = unsigned_at(model, "n_levels", "/model");
    if (model.contains("allow_invalid_two_level")) {
      if (!model.at("allow_invalid_two_level").is_boolean()) {
        field_error("/model/allow_invalid_two_level", "expected a boolean");
      }
      source.allow_invalid_two_level = model.at("allow_invalid_two_level").get<bool>();
    }
    cfg.doublewell = source;
  }

  if (doc.contains("channels")) {
    const json& list = doc.at("channels");
    if (!list.is_array()) field_error("/channels", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/channels/" + std::to_string(i);
      const json& c = require_object(list[i], path);
      reject_unknown_keys(c, path, {"kind", "rate", "operator"});
      const std::string kind_name = string_at(c, "kind", path);
      ChannelSpec spec;
      spec.kind = with_path(path + "/kind", [&] { return channel_kind_from_string(kind_name); });
      spec.rate = number_at(c, "rate", path);
      if (c.contains("operator")) spec.custom_operator = operator_at(c.at("operator"), path + "/operator");
      cfg.channels.push_back(spec);
    }
  }

  if (!doc.contains("initial")) field_error("/initial", "required field missing");
  const json& initial = require_object(doc.at("initial"), "/initial");
  reject_unknown_keys(initial, "/initial", {"theta", "phi"});
  cfg.initial.theta = number_at(initial, "theta", "/initial");
  cfg.initial.phi = number_or(initial, "phi", "/initial", 0.0);

  if (!doc.contains("time")) field_error("/time", "required field missing");
  const json& time = require_object(doc.at("time"), "/time");
  reject_unknown_keys(time, "/time", {"t_end", "n_samples"});
  cfg.t_end = number_at(time, "t_end", "/time");
  cfg.n_samples = unsigned_at(time, "n_samples", "/time");

  if (doc.contains("backends")) {
    const json& list = doc.at("backends");
    if (!list.is_array()) field_error("/backends", "expected an array");
    cfg.backends.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "/backends/" + std::to_string(i);
      if (!list[i].is_string()) field_error(path, "expected a string");
      const Backend b = with_path(path, [&] { return backend_from_string(list[i].get<std::string>()); });
      if (cfg.has_backend(b)) field_error(path, "duplicate backend");
      cfg.backends.push_back(b);
    }
  }

  if (doc.contains("step")) cfg.step = number_at(doc, "step", "");

  if (doc.contains("trajectories")) {
    const json& t = require_object(doc.at("trajectories"), "/trajectories");
    reject_unknown_keys(t, "/trajectories", {"n_trajectories", "dt", "seed"});
    JumpConfig jc;
    jc.n_trajectories = unsigned_at(t, "n_trajectories", "/trajectories");
    jc.dt = number_at(t, "dt", "/trajectories");
    jc.seed = unsigned_at(t, "seed", "/trajectories");
    cfg.jumps = jc;
  }

  if (doc.contains("output")) {
    const json& o = require_object(doc.at("output"), "/output");
    reject_unknown_keys(o, "/output", {"dir", "formats"});
    if (o.contains("dir")) cfg.output_dir = string_at(o, "dir", "/output");
    if (o.contains("formats")) {
      const json& list = o.at("formats");
      if (!list.is_array()) field_error("/output/formats", "expected an array");
      cfg.formats.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "/output/formats/" + std::to_string(i);
        if (!list[i].is_string()) field_error(path, "expected a string");
        cfg.formats.push_back(with_path(path, [&] { return output_format_from_string(list[i].get<std::string>()); }));
      }
    }
  }

  if (doc.contains("threads")) cfg.threads = static_cast<int>(unsigned_at(doc, "threads", ""));

  cfg.validate();
  return cfg;
}

ScenarioConfig parse_config_text(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t limit = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("config syntax error at line " + std::to_string(line) + ", column " +
                      std::to_string(column) + ": " + e.what());
  }
  return parse_config(doc);
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config_text(read_file(path));
}

json to_json(const ScenarioConfig& cfg) {
  json j;
  j["name"] = cfg.name;
  json model = json::object();
  if (cfg.omega) model["omega"] = *cfg.omega;
  if (cfg.doublewell) {
    const PotentialSpec& p = cfg.doublewell->potential;
    model["potential"] = {{"x_max", p.x_max},
                          {"v0", p.v0},
                          {"barrier_half_width", p.barrier_half_width},
                          {"barrier_shape", std::string(to_string(p.barrier_shape))},
                          {"mass", p.mass},
                          {"hbar", p.hbar}};
    model["n_grid"] = cfg.doublewell->n_grid;
    model["n_levels"] = cfg.doublewell->n_levels;
    model["allow_invalid_two_level"] = cfg.doublewell->allow_invalid_two_level;
  }
  j["model"] = model;
  j["channels"] = json::array();
  for (const auto& c : cfg.channels) {
    json cj = {{"kind", std::string(to_string(c.kind))}, {"rate", c.rate}};
    if (c.custom_operator) cj["operator"] = operator_to_json(*c.custom_operator);
    j["channels"].push_back(cj);
  }
  j["initial"] = {{"theta", cfg.initial.theta}, {"phi", cfg.initial.phi}};
  j["time"] = {{"t_end", cfg.t_end}, {"n_samples", cfg.n_samples}};
  j["backends"] = json::array();
  for (Backend b : cfg.backends) j["backends"].push_back(std::string(to_string(b)));
  if (cfg.step) j["step"] = *cfg.step;
  if (cfg.jumps) {
    j["trajectories"] = {{"n_trajectories", cfg.jumps->n_trajectories},
                         {"dt", cfg.jumps->dt},
                         {"seed", cfg.jumps->seed}};
  }
  json formats = json::array();
  for (OutputFormat f : cfg.formats) formats.push_back(std::string(to_string(f)));
  j["output"] = {{"dir", cfg.output_dir.string()}, {"formats", formats}};
  j["threads"] = cfg.threads;
  return j;
}

ResolvedModel resolve_model(const ScenarioConfig& config) {
  config.validate();
  ResolvedModel resolved;
  resolved.model.channels = config.channels;
  if (config.omega) {
    resolved.model.omega = *config.omega;
    return resolved;
  }
  const DoubleWellSource& source = *config.doublewell;
  const SpectrumResult spectrum = solve_spectrum(source.potential, source.n_grid, source.n_levels);
  const DoubletMap doublet = extract_doublet(spectrum, source.potential.hbar);
  if (doublet.two_level_suspect && !source.allow_invalid_two_level) {
    std::ostringstream out;
    out << "double well doublet is not isolated (validity ratio " << doublet.validity_ratio
        << " > " << kValidityThreshold << "); set allow_invalid_two_level to override";
    field_error("/model/potential", out.str());
  }
  resolved.model.omega = doublet.omega;
  resolved.doublet = doublet;
  return resolved;
}

const BackendResult* ScenarioResult::find(Backend b) const {
  for (const auto& r : results) {
    if (r.backend == b) return &r;
  }
  return nullptr;
}

ScenarioResult simulate(const ScenarioConfig& config) {
  ScenarioResult out;
  out.resolved = resolve_model(config);
  const ModelSpec& model = out.resolved.model;
  const std::vector<double> grid = config.time_grid();
  const DensityMatrix rho0 = make_initial_state(config.initial);
  for (Backend b : config.backends) {
    BackendResult r;
    r.backend = b;
    switch (b) {
      case Backend::analytic:
        r.series = analytic_series(config.initial, model, grid);
        break;
      case Backend::rk4:
        r.series = evolve_rk4(rho0, model, grid, config.step);
        break;
      case Backend::exact:
        r.series = evolve_exact(rho0, model, grid);
        break;
      case Backend::trajectories:
        r.ensemble = run_trajectories(config.initial, model, grid, *config.jumps, config.threads);
        r.series = r.ensemble->as_time_series();
        break;
    }
    out.results.push_back(std::move(r));
  }
  return out;
}

RunOutputs run(const ScenarioConfig& config) {
  RunOutputs outputs;
  outputs.result = simulate(config);
  const auto& dir = config.output_dir;
  const auto wants = [&](OutputFormat f) {
    return std::find(config.formats.begin(), config.formats.end(), f) != config.formats.end();
  };

  json files = json::array();
  const auto emit = [&](const std::string& name, const std::string& content) {
    const std::filesystem::path path = dir / name;
    atomic_write(path, content);
    outputs.files.push_back(path);
    files.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  };

  std::vector<PlotLine> lines;
  for (const auto& r : outputs.result.results) {
    const std::string stem(to_string(r.backend));
    if (wants(OutputFormat::csv)) {
      emit(stem + ".csv", series_csv(r.series, r.ensemble ? &*r.ensemble : nullptr));
    }
    if (wants(OutputFormat::json)) emit(stem + ".json", series_json(r.series));
    if (wants(OutputFormat::svg)) {
      PlotLine p_left{stem + " P_l", r.series.times, {}};
      PlotLine zeta{stem + " purity", r.series.times, {}};
      for (const auto& s : r.series.states) {
        p_left.y.push_back(left_probability(s));
        zeta.y.push_back(purity(s));
      }
      lines.push_back(std::move(p_left));
      lines.push_back(std::move(zeta));
    }
  }
  if (wants(OutputFormat::svg)) emit("plot.svg", svg_line_plot(config.name, lines));

  json manifest;
  manifest["tool"] = "tunnel";
  manifest["version"] = TUNNEL_VERSION;
  manifest["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." +
                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION);
  manifest["compiler"] = __VERSION__;
  manifest["config"] = to_json(config);
  if (config.jumps) manifest["seed"] = config.jumps->seed;
  manifest["omega"] = outputs.result.resolved.model.omega;
  if (const auto& d = outputs.result.resolved.doublet) {
    manifest["doublet"] = {{"omega", d->omega},
                           {"splitting", d->splitting},
                           {"gap", d->gap},
                           {"validity_ratio", d->validity_ratio},
                           {"two_level_suspect", d->two_level_suspect}};
  }
  manifest["files"] = files;
  outputs.manifest = dir / "manifest.json";
  atomic_write(outputs.manifest, manifest.dump(2) + "\n");
  return outputs;
}

// ---------------------------------------------------------------------------

bool ComparisonReport::pass() const {
  return std::all_of(pairs.begin(), pairs.end(), [](const PairDeviation& p) { return p.pass; });
}

json ComparisonReport::to_json() const {
  json j;
  j["pairs"] = json::array();
  for (const auto& p : pairs) {
    j["pairs"].push_back({{"first", std::string(to_string(p.first))},
                          {"second", std::string(to_string(p.second))},
                          {"max_abs_deviation", p.max_abs},
                          {"mean_abs_deviation", p.mean_abs},
                          {"tolerance", p.tolerance},
                          {"worst_ratio", p.worst_ratio},
                          {"pass", p.pass}});
  }
  j["typo_notes"] = json::array();
  for (const auto& n : typo_notes) {
    j["typo_notes"].push_back({{"quantity", n.quantity},
                               {"literal_form", n.literal_form},
                               {"corrected_form", n.corrected_form},
                               {"literal_max_deviation", n.literal_deviation},
                               {"corrected_max_deviation", n.corrected_deviation},
                               {"tolerance", n.tolerance},
                               {"emitted", n.emitted}});
  }
  j["pass"] = pass();
  return j;
}

std::string ComparisonReport::typo_notes_markdown() const {
  std::ostringstream out;
  out.precision(6);
  out << "# TYPO_NOTES\n\n"
      << "Closed forms checked against the exact propagator of the master equation.\n"
      << "A note is recorded when the literal form misses the tolerance while the\n"
      << "corrected form meets it.\n";
  for (const auto& n : typo_notes) {
    out << "\n## " << n.quantity << (n.emitted ? "" : " (no discrepancy on this grid)") << "\n\n"
        << "- literal:   `" << n.literal_form << "`, max deviation " << n.literal_deviation << "\n"
        << "- corrected: `" << n.corrected_form << "`, max deviation " << n.corrected_deviation << "\n"
        << "- tolerance: " << n.tolerance << "\n";
  }
  return out.str();
}

ComparisonReport compare(const std::vector<BackendResult>& results, const ScenarioConfig* config) {
  ComparisonReport report;
  for (std::size_t a = 0; a < results.size(); ++a) {
    for (std::size_t b = a + 1; b < results.size(); ++b) {
      const BackendResult& ra = results[a];
      const BackendResult& rb = results[b];
      check_same_grid(ra.series, rb.series);
      const EnsembleSeries* ensemble =
          ra.ensemble ? &*ra.ensemble : (rb.ensemble ? &*rb.ensemble : nullptr);
      PairDeviation p;
      p.first = ra.backend;
      p.second = rb.backend;
      p.tolerance = ensemble ? kMonteCarloFloor : fixed_tolerance(ra.backend, rb.backend);
      double sum = 0.0;
      std::size_t count = 0;
      for (std::size_t i = 0; i < ra.series.size(); ++i) {
        for (int c = 0; c < 3; ++c) {
          const double d = std::abs(component(ra.series.states[i], c) - component(rb.series.states[i], c));
          double allowed = p.tolerance;
          if (ensemble) allowed = std::max(allowed, 3.0 * component(ensemble->std_error[i], c));
          p.max_abs = std::max(p.max_abs, d);
          p.worst_ratio = std::max(p.worst_ratio, d / allowed);
          sum += d;
          ++count;
        }
      }
      p.mean_abs = count > 0 ? sum / static_cast<double>(count) : 0.0;
      p.pass = p.worst_ratio <= 1.0;
      report.pairs.push_back(p);
    }
  }
  const bool analytic_present = std::any_of(results.begin(), results.end(), [](const BackendResult& r) {
    return r.backend == Backend::analytic;
  });
  if (config && analytic_present && !results.empty()) {
    ModelSpec model = resolve_model(*config).model;
    report.typo_notes = typo_notes_for(*config, model, results.front().series.times);
  }
  return report;
}

std::vector<BackendResult> load_run(const std::filesystem::path& dir, std::optional<ScenarioConfig>* config) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + manifest_path.string() + ": " + e.what());
  }
  if (config) *config = parse_config(manifest.at("config"));

  std::vector<BackendResult> results;
  for (const Backend b : {Backend::analytic, Backend::rk4, Backend::exact, Backend::trajectories}) {
    const std::filesystem::path csv = dir / (std::string(to_string(b)) + ".csv");
    if (!std::filesystem::exists(csv)) continue;
    std::vector<std::string> header;
    const auto rows = parse_numeric_csv(read_file(csv), header);
    BackendResult r;
    r.backend = b;
    r.series.provenance = b;
    const bool has_errors = header.size() >= 9 && header[6] == "sx_stderr";
    EnsembleSeries ensemble;
    for (const auto& row : rows) {
      r.series.times.push_back(row[0]);
      r.series.states.push_back({row[1], row[2], row[3]});
      if (has_errors) ensemble.std_error.push_back({row[6], row[7], row[8]});
    }
    if (has_errors) {
      ensemble.times = r.series.times;
      ensemble.mean = r.series.states;
      r.ensemble = std::move(ensemble);
    }
    results.push_back(std::move(r));
  }
  if (results.empty()) throw ConfigError("no backend CSV files found in " + dir.string());
  return results;
}

// ---------------------------------------------------------------------------

SweepAxis parse_axis(std::string_view spec) {
  const std::size_t eq = spec.find('=');
  if (eq == std::string_view::npos) throw ConfigError("axis must look like name=v1,v2,...");
  SweepAxis axis;
  axis.parameter = std::string(spec.substr(0, eq));
  static const std::set<std::string> known = {"omega", "k1", "k2", "theta", "v0"};
  if (!known.contains(axis.parameter)) {
    throw ConfigError("unknown sweep parameter '" + axis.parameter + "' (omega, k1, k2, theta, v0)");
  }
  std::string values(spec.substr(eq + 1));
  if (values.find('=') != std::string::npos) {
    throw ConfigError("sweeps run over a single parameter");
  }
  std::istringstream in(values);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
      axis.values.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad sweep value '" + item + "'");
    }
  }
  if (axis.values.empty()) throw ConfigError("sweep axis has no values");
  return axis;
}

SweepAxis parse_axis(const std::vector<std::string>& specs) {
  if (specs.size() != 1) throw ConfigError("sweeps run over exactly one parameter axis");
  return parse_axis(specs.front());
}

std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepAxis& axis, int threads) {
  base.validate();
  const auto channel_index = [&](ChannelKind kind) -> std::size_t {
    for (std::size_t i = 0; i < base.channels.size(); ++i) {
      if (base.channels[i].kind == kind) return i;
    }
    throw ConfigError("sweep over " + axis.parameter + " needs a " + std::string(to_string(kind)) +
                      " channel in the base config");
  };
  std::optional<std::size_t> rate_slot;
  if (axis.parameter == "k1") rate_slot = channel_index(ChannelKind::dephasing);
  if (axis.parameter == "k2") rate_slot = channel_index(ChannelKind::spinflip);
  if (axis.parameter == "omega" && !base.omega) throw ConfigError("omega sweep needs model.omega");
  if (axis.parameter == "v0" && !base.doublewell) throw ConfigError("v0 sweep needs model.potential");

  std::vector<ScenarioConfig> points(axis.values.size(), base);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ScenarioConfig& p = points[i];
    const double v = axis.values[i];
    if (axis.parameter == "omega") p.omega = v;
    if (rate_slot) p.channels[*rate_slot].rate = v;
    if (axis.parameter == "theta") p.initial.theta = v;
    if (axis.parameter == "v0") {
      p.doublewell->potential.v0 = v;
      p.doublewell->allow_invalid_two_level = true;
    }
    p.validate();
  }

  std::vector<SweepRow> rows(points.size());
  std::exception_ptr failure;
#ifdef _OPENMP
  const int n_threads = threads > 0 ? threads : omp_get_max_threads();
#else
  (void)threads;
#endif
#pragma omp parallel for schedule(dynamic) num_threads(n_threads)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(points.size()); ++i) {
    try {
      const ScenarioConfig& p = points[static_cast<std::size_t>(i)];
      const ResolvedModel resolved = resolve_model(p);
      const std::vector<double> grid = p.time_grid();
      const TimeSeries series = evolve_exact(make_initial_state(p.initial), resolved.model, grid);
      SweepRow row;
      row.value = axis.values[static_cast<std::size_t>(i)];
      row.omega = resolved.model.omega;
      row.final_purity = purity(series.states.back());
      row.time_to_mixing = std::numeric_limits<double>::quiet_NaN();
      for (std::size_t k = series.size(); k-- > 0;) {
        if (std::abs(left_probability(series.states[k]) - 0.5) > kMixingBand) break;
        row.time_to_mixing = series.times[k];
      }
      if (resolved.doublet) row.validity_ratio = resolved.doublet->validity_ratio;
      rows[static_cast<std::size_t>(i)] = row;
    } catch (...) {
#pragma omp critical(tunnel_sweep_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);

  std::stable_sort(rows.begin(), rows.end(),
                   [](const SweepRow& a, const SweepRow& b) { return a.value < b.value; });
  return rows;
}

std::string sweep_csv(const SweepAxis& axis, const std::vector<SweepRow>& rows) {
  std::string out = axis.parameter + ",omega,final_purity,time_to_mixing,validity_ratio\n";
  for (const auto& r : rows) {
    out += format_number(r.value) + ',' + format_number(r.omega) + ',' + format_number(r.final_purity) +
           ',' + format_number(r.time_to_mixing) + ',' +
           (r.validity_ratio ? format_number(*r.validity_ratio) : std::string()) + '\n';
  }
  return out;
}

std::vector<std::filesystem::path> export_doublewell(const ScenarioConfig& config) {
  if (!config.doublewell) throw ConfigError("config field /model/potential: required for doublewell export");
  const DoubleWellSource& source = *config.doublewell;
  const SpectrumResult spectrum = solve_spectrum(source.potential, source.n_grid, source.n_levels);
  const DoubletMap doublet = extract_doublet(spectrum, source.potential.hbar);
  const auto [left, right] = localized_states(spectrum);

  std::string levels = "level,energy,parity\n";
  for (std::size_t i = 0; i < spectrum.energies.size(); ++i) {
    levels += std::to_string(i) + ',' + format_number(spectrum.energies[i]) + ',' +
              std::string(to_string(spectrum.parities[i])) + '\n';
  }
  std::string waves = "x,potential";
  for (std::size_t i = 0; i < spectrum.wavefunctions.size(); ++i) waves += ",psi_" + std::to_string(i);
  waves += ",left_density,right_density\n";
  for (std::size_t k = 0; k < spectrum.grid.size(); ++k) {
    waves += format_number(spectrum.grid[k]) + ',' + format_number(source.potential.value(spectrum.grid[k]));
    for (const auto& psi : spectrum.wavefunctions) waves += ',' + format_number(psi[k]);
    waves += ',' + format_number(left[k]) + ',' + format_number(right[k]) + '\n';
  }
  json d = {{"omega", doublet.omega},
            {"splitting", doublet.splitting},
            {"gap", doublet.gap},
            {"validity_ratio", doublet.validity_ratio},
            {"two_level_suspect", doublet.two_level_suspect},
            {"left_weight_plus", left_weight(left, spectrum.grid, spectrum.spacing)},
            {"left_weight_minus", left_weight(right, spectrum.grid, spectrum.spacing)},
            {"config", to_json(config)}};

  std::vector<std::filesystem::path> files = {config.output_dir / "spectrum.csv",
                                              config.output_dir / "wavefunctions.csv",
                                              config.output_dir / "doublet.json"};
  atomic_write(files[0], levels);
  atomic_write(files[1], waves);
  atomic_write(files[2], d.dump(2) + "\n");
  return files;
}

}  // namespace tunnel
