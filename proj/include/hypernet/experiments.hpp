#pragma once

// Experiment harness: sweeps that train hypernetworks against embedding methods (and the
// two assumption checks), reports with per-repetition rows and summaries, CSV and SVG output.

#include "hypernet/composition.hpp"
#include "hypernet/data.hpp"
#include "hypernet/targets.hpp"
#include "hypernet/train.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hypernet {

enum class ExperimentKind {
  kDepthSweep,
  kEmbedDimSweep,
  kRotation,
  kColorization,
  kAssumption1,
  kAssumption2,
  kSensitivity,
};

/// CLI names: synth-depth, synth-embed, rotation, colorization, assumption1, assumption2, sensitivity.
std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);

/// Plain key=value settings. Numeric fields left at 0 (and empty lists) take the
/// experiment's default at the configured scale; see README for the table.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kDepthSweep;
  std::string target = "type1";   // synthetic target kind
  std::string dataset = "mnist";  // image dataset, or input space for assumption1
  std::string variant = "depth";  // rotation: depth | embed-dim
  double scale = 10.0;            // divisor of full-size dims and data; 1 is full size

  Index repetitions = 0;
  std::vector<Index> depths;
  std::vector<Index> multipliers;  // embedding-dim sweep points i
  std::vector<Index> widths;       // assumption2 hidden widths
  std::vector<std::string> activations;
  std::vector<double> learning_rates;

  Index hidden = 0;  // width of f and e hidden layers
  Index epochs = 0;
  Index batch_size = 0;
  double lr = 0.0;
  double momentum = -1.0;
  Index train_samples = 0;
  Index test_samples = 0;
  bool g_biases = true;
  std::string init = "he-uniform";  // he-uniform | fan-in-uniform | uniform:a:b
  bool hyperfan = true;             // rescale f's output layer after init (HyperModel::hyperfan_in_rescale)
  double output_init_scale = 0.3;   // multiplies the initial output-layer weights of f, e and q
  Interpolation interpolation = Interpolation::kBilinear;
  CoordMode coord_mode = CoordMode::kNormalized;

  std::uint64_t seed = 1;
  Index threads = 0;  // 0 = hardware concurrency
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "results";

  static ExperimentConfig defaults(ExperimentKind kind);

  /// Sets one field from its text form; throws std::invalid_argument on unknown keys or bad values.
  void set(std::string_view key, std::string_view value);
  /// Applies every key=value line; '#' starts a comment.
  void parse(std::istream& in);
  static ExperimentConfig load(const std::filesystem::path& path);
  /// Every key, one per line, such that parse() reproduces the config.
  std::string to_text() const;

  /// Throws std::invalid_argument on scale <= 0, negative counts, etc.
  void validate() const;
};

/// SplitMix64 step; used to derive independent per-repetition streams from the master seed.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index = 0);

struct ReportRow {
  std::string point;  // e.g. "k=3"
  std::string model;  // e.g. "hypernetwork"
  Index repetition = 0;
  std::string metric;
  double value = 0.0;
  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ParamRow {
  std::string point;
  std::string model;
  std::string component;  // f, g, e, q, net
  Index weights_only = 0;
  Index trainable = 0;  // 0 for g, whose parameters are generated
  friend bool operator==(const ParamRow&, const ParamRow&) = default;
};

struct SummaryRow {
  std::string point;
  std::string model;
  std::string metric;
  Index count = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation, 0 for a single repetition
  double median = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::vector<ReportRow> rows;
  std::vector<ParamRow> params;

  bool empty() const { return rows.empty(); }
  /// Distinct values in order of first appearance.
  std::vector<std::string> points() const;
  std::vector<std::string> models() const;
  std::vector<std::string> metrics() const;
  std::vector<double> values(std::string_view point, std::string_view model, std::string_view metric = {}) const;
  std::vector<SummaryRow> summaries() const;
  /// Median over repetitions; throws std::out_of_range when no rows match.
  double median(std::string_view point, std::string_view model, std::string_view metric = {}) const;

  friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

double mean_of(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);
double median_of(std::vector<double> v);

/// experiment,point,model,repetition,metric,value,sd. Repetition rows leave sd empty;
/// one summary row per (point, model, metric) follows with repetition "summary".
void write_csv(const ExperimentReport& report, std::ostream& out);
/// Repetition rows are read back; summary rows are checked for count only.
ExperimentReport read_csv(std::istream& in);
void write_params_csv(const ExperimentReport& report, std::ostream& out);
std::vector<ParamRow> read_params_csv(std::istream& in);

/// Writes `path` and, when the report has parameter rows, `<stem>_params.csv` next to it.
/// Throws std::invalid_argument for an empty report and std::runtime_error for unwritable paths.
void emit_csv(const ExperimentReport& report, const std::filesystem::path& path);
ExperimentReport load_csv(const std::filesystem::path& path);
std::string render_svg(const ExperimentReport& report);
void emit_svg(const ExperimentReport& report, const std::filesystem::path& path);

using LogFn = std::function<void(const std::string&)>;

/// Parameter counts for every sweep point without training anything.
std::vector<ParamRow> parameter_table(const ExperimentConfig& config);

ExperimentReport run_depth_sweep(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_embed_dim_sweep(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_rotation(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_colorization(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_assumption1(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_assumption2(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_sensitivity(const ExperimentConfig& config, const LogFn& log = {});
ExperimentReport run_experiment(const ExperimentConfig& config, const LogFn& log = {});

/// Model names used in reports.
inline constexpr std::string_view kHyperName = "hypernetwork";
inline constexpr std::string_view kEmbedName = "embedding";

}  // namespace hypernet
