#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tunnel/doublewell.hpp"
#include "tunnel/dynamics.hpp"
#include "tunnel/qstate.hpp"
#include "tunnel/trajectories.hpp"

namespace tunnel {

enum class OutputFormat { csv, json, svg };

std::string_view to_string(OutputFormat format);
OutputFormat output_format_from_string(std::string_view name);

/// Tunnelling frequency taken from a computed double-well spectrum.
struct DoubleWellSource {
  PotentialSpec potential;
  std::size_t n_grid = 2000;
  std::size_t n_levels = 4;
  /// Proceed even when the doublet is not well separated from the next level.
  bool allow_invalid_two_level = false;
};

struct ScenarioConfig {
  std::string name = "scenario";
  std::optional<double> omega;
  std::optional<DoubleWellSource> doublewell;
  std::vector<ChannelSpec> channels;
  PureStateAngles initial;
  double t_end = 1.0;
  std::size_t n_samples = 101;
  std::vector<Backend> backends{Backend::exact};
  std::optional<double> step;
  std::optional<JumpConfig> jumps;
  std::filesystem::path output_dir = "out";
  std::vector<OutputFormat> formats{OutputFormat::csv, OutputFormat::json};
  int threads = 0;

  std::vector<double> time_grid() const { return uniform_grid(t_end, n_samples); }
  bool has_backend(Backend b) const;
  /// Cross-field checks; throws ConfigError naming the offending field.
  void validate() const;
};

/// Parses the JSON config document. Errors name the JSON pointer of the field.
ScenarioConfig parse_config(const nlohmann::json& document);
/// Parses config text; syntax errors report line and column.
ScenarioConfig parse_config_text(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ScenarioConfig& config);

struct ResolvedModel {
  ModelSpec model;
  std::optional<DoubletMap> doublet;
};

/// Builds the ModelSpec, solving the double well when omega comes from a potential.
ResolvedModel resolve_model(const ScenarioConfig& config);

struct BackendResult {
  Backend backend = Backend::exact;
  TimeSeries series;
  std::optional<EnsembleSeries> ensemble;
};

struct ScenarioResult {
  ResolvedModel resolved;
  std::vector<BackendResult> results;

  const BackendResult* find(Backend b) const;
};

/// Runs every configured backend in memory.
ScenarioResult simulate(const ScenarioConfig& config);

struct RunOutputs {
  std::vector<std::filesystem::path> files;
  std::filesystem::path manifest;
  ScenarioResult result;
};

/// simulate() plus one CSV per backend, manifest.json, and optionally plot.svg.
RunOutputs run(const ScenarioConfig& config);

struct PairDeviation {
  Backend first = Backend::exact;
  Backend second = Backend::exact;
  double max_abs = 0.0;
  double mean_abs = 0.0;
  /// Fixed tolerance, or the Monte Carlo floor when a trajectory ensemble participates.
  double tolerance = 0.0;
  /// Worst ratio deviation / allowed, <= 1 means pass.
  double worst_ratio = 0.0;
  bool pass = false;
};

struct TypoNote {
  std::string quantity;
  std::string literal_form;
  std::string corrected_form;
  double literal_deviation = 0.0;
  double corrected_deviation = 0.0;
  double tolerance = 0.0;
  /// Set when the literal form misses the tolerance while the corrected one meets it.
  bool emitted = false;
};

struct ComparisonReport {
  std::vector<PairDeviation> pairs;
  std::vector<TypoNote> typo_notes;

  bool pass() const;
  nlohmann::json to_json() const;
  std::string typo_notes_markdown() const;
};

inline constexpr double kAnalyticExactTolerance = 1e-9;
inline constexpr double kIntegratorTolerance = 1e-8;
inline constexpr double kMonteCarloFloor = 5e-3;

/// Pairwise Bloch deviations between backends; throws ConfigError on mismatched grids.
/// With a config, literal closed forms are also evaluated for the record.
ComparisonReport compare(const std::vector<BackendResult>& results,
                         const ScenarioConfig* config = nullptr);

/// Loads the CSVs and manifest written by run() from a directory.
std::vector<BackendResult> load_run(const std::filesystem::path& dir,
                                    std::optional<ScenarioConfig>* config = nullptr);

struct SweepAxis {
  std::string parameter;  // omega, k1, k2, theta or v0
  std::vector<double> values;
};

/// "k1=0.5,1,2". More than one parameter is a ConfigError.
SweepAxis parse_axis(std::string_view spec);
SweepAxis parse_axis(const std::vector<std::string>& specs);

struct SweepRow {
  double value = 0.0;
  double omega = 0.0;
  double final_purity = 0.0;
  /// First time after which |P_l - 1/2| <= 0.005 for every later sample; NaN if never.
  double time_to_mixing = 0.0;
  std::optional<double> validity_ratio;
};

/// Exact-backend summary per axis point, rows sorted by axis value. Points run
/// concurrently; output does not depend on the thread count.
std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepAxis& axis, int threads = 0);
std::string sweep_csv(const SweepAxis& axis, const std::vector<SweepRow>& rows);

/// Writes spectrum.csv, wavefunctions.csv and doublet.json for the configured potential.
std::vector<std::filesystem::path> export_doublewell(const ScenarioConfig& config);

}  // namespace tunnel
