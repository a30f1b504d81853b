#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "streamlearn/algorithms.hpp"
#include "streamlearn/error.hpp"
#include "streamlearn/evaluation.hpp"
#include "streamlearn/network.hpp"
#include "streamlearn/rates.hpp"
#include "streamlearn/streams.hpp"

namespace YAML {
class Node;
}

namespace streamlearn {

/// Where a count in an algorithm entry comes from.
struct CountField {
  enum class Mode { unset, automatic, fixed };
  Mode mode = Mode::unset;  // unset: the algorithm kind's default
  std::int64_t value = 0;

  bool fixed() const { return mode == Mode::fixed; }
};

/// How a schedule's constants are filled in per trial.
struct ScheduleConfig {
  StepSchedule base;
  std::optional<double> c0;  // krasulina: c = c0 / (2 gap)
};

/// One curve of an experiment: an algorithm with fully specified knobs.
struct CurveConfig {
  std::string id;     // key in the config
  std::string label;  // id, plus the values that distinguish list expansions
  AlgorithmKind kind = AlgorithmKind::dmb;
  CountField minibatch;
  CountField nodes;
  CountField rounds;
  CountField discarded;
  ScheduleConfig schedule;
  Normalization normalization = Normalization::mean;
  ReportKind report = ReportKind::last;
};

struct LossConfig {
  LossKind kind = LossKind::logistic;
  bool expanse_default = true;   // 10 sqrt(d) for supervised kinds
  bool smoothness_auto = true;   // estimated for logistic when a schedule needs it
  bool noise_auto = true;        // estimated at w = 0 when a schedule needs it
  LossModel model;
};

struct OutputConfig {
  std::string csv;
  std::string svg;
  std::string raw;
  std::string title;
  std::string x_axis = "t_prime";  // t_prime | t | sim_seconds
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::uint64_t seed = 1;
  std::int64_t trials = 1;
  int workers = 1;
  std::string horizon_expr;          // as written
  std::int64_t horizon = 0;          // t', samples per trial
  std::size_t holdout = 0;
  std::vector<Metric> metrics;
  bool worst_node = false;
  StreamSpec stream;
  LossConfig loss;
  SystemRates rates;                  // B, N, R filled per curve
  std::optional<double> rho;          // overrides the rate-derived mismatch ratio
  double local_batch_scale = 0.1;
  std::optional<TopologySpec> topology;
  std::vector<CurveConfig> curves;
  OutputConfig output;
};

/// Parses a configuration document. `overrides` are "a.b.c=value" strings
/// applied before interpretation; `scale` selects an entry of the optional
/// `scales` map ("desk" is the implicit default).
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::span<const std::string> overrides = {},
                             const std::string& scale = "desk");
ExperimentConfig parse_config(const std::string& text, std::span<const std::string> overrides = {},
                              const std::string& scale = "desk");
ExperimentConfig interpret_config(const YAML::Node& root);

enum class SweepAxis { minibatch, discarded, nodes, rounds, step_scale };

/// Accepts "B", "mu", "N", "R" and "c".
bool parse_sweep_axis(const std::string& name, SweepAxis& out);

/// One configuration per value, each a copy of the document with the axis
/// field set in every algorithm (or only in `algorithm` when non-empty) and
/// the experiment renamed "name[axis=value]". Sweeping N also resizes the
/// topology.
std::vector<ExperimentConfig> sweep_configs(const std::string& text, std::span<const std::string> overrides,
                                            const std::string& scale, SweepAxis axis,
                                            std::span<const std::string> values, const std::string& algorithm = {});

/// Applies one "a.b.c=value" override to a document.
void apply_override(YAML::Node& root, const std::string& assignment);

/// Evaluates a horizon expression: an integer, or "N^2", "N^1.5", "N^3"
/// style powers of the node count.
std::int64_t evaluate_horizon(const std::string& expr, std::int64_t nodes);

/// Iterations at which metrics are recorded: every t <= 1000, then
/// round(1.2^k), deduplicated, plus the final iteration.
std::vector<std::int64_t> checkpoint_grid(std::int64_t iterations);

/// Seed of trial i: derive_seed(master, i). Stable across versions.
std::uint64_t trial_seed(std::uint64_t master, std::int64_t trial);

struct Summary {
  double mean = 0;
  double median = 0;
  double q10 = 0;
  double q90 = 0;
};

/// Nearest-rank quantile: the ceil(q n)-th smallest value.
double nearest_rank(std::span<const double> sorted, double q);
Summary summarize(std::vector<double> values);

/// One recorded measurement. node is -1 for the mean over nodes and -2 for
/// the worst node.
struct RunRecord {
  static constexpr int kNodeMean = -1;
  static constexpr int kNodeWorst = -2;

  std::int64_t trial = 0;
  std::string algorithm;
  int node = kNodeMean;
  std::int64_t t = 0;
  std::int64_t t_prime = 0;
  double sim_seconds = 0;
  double excess_risk = std::numeric_limits<double>::quiet_NaN();
  double param_error = std::numeric_limits<double>::quiet_NaN();
  double risk = std::numeric_limits<double>::quiet_NaN();
  std::int64_t discarded = 0;
};

/// A curve after resolution of automatic fields.
struct ResolvedCurve {
  std::string label;
  AlgorithmKind kind = AlgorithmKind::dmb;
  std::int64_t minibatch = 0;
  std::int64_t nodes = 0;
  std::int64_t rounds = 0;
  std::int64_t discarded = 0;
  std::int64_t iterations = 0;
  std::int64_t failed_trials = 0;  // pca only: final excess risk above gap/2
};

struct AggregateRow {
  std::size_t curve = 0;
  std::int64_t t = 0;
  std::int64_t t_prime = 0;
  double sim_seconds = 0;
  std::string metric;
  Summary stats;
};

struct ExperimentResult {
  std::string experiment;
  std::int64_t trial_count = 0;
  std::vector<ResolvedCurve> curves;
  std::vector<AggregateRow> rows;
  std::vector<RunRecord> raw;  // filled when keep_raw
};

struct RunOptions {
  std::optional<int> workers;  // overrides the config
  bool keep_raw = false;
};

/// Resolves automatic batch sizes, rounds and discards for every curve.
std::vector<ResolvedCurve> resolve_curves(const ExperimentConfig& cfg, const NetworkModel* network);

/// Builds the topology and resolves every curve without running anything;
/// throws ConfigError/InfeasibleError on the first problem.
void validate_experiment(const ExperimentConfig& cfg);

/// Runs every trial of every curve and aggregates across trials. A failing
/// trial aborts the experiment with a TrialError naming the trial.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});

class TrialError : public Error {
 public:
  TrialError(std::int64_t trial, const std::string& cause)
      : Error("trial " + std::to_string(trial) + ": " + cause), trial_(trial) {}
  std::int64_t trial() const { return trial_; }

 private:
  std::int64_t trial_;
};

/// Aggregated CSV, header
/// experiment,algorithm,B,N,R,mu,trial_count,t,t_prime,sim_seconds,metric,mean,median,q10,q90.
void emit_csv(std::span<const ExperimentResult> results, const std::filesystem::path& path);
std::string format_csv(std::span<const ExperimentResult> results);

/// Per-trial values: experiment,algorithm,B,N,R,mu,trial,node,t,t_prime,sim_seconds,discarded,metric,value.
void emit_raw_csv(std::span<const ExperimentResult> results, const std::filesystem::path& path);

/// Reads an aggregated CSV back (for plotting).
std::vector<ExperimentResult> read_results_csv(const std::filesystem::path& path);

struct PlotSpec {
  std::string title;
  std::string metric;              // empty: first metric found
  std::string x_axis = "t_prime";  // t_prime | t | sim_seconds
  std::string x_label;
  std::string y_label;
  int width = 720;
  int height = 480;
};

/// Log-log SVG of the mean of one metric, one polyline per curve, legend in
/// curve order. Non-positive values cannot sit on a log axis and are left out.
void emit_plot(std::span<const ExperimentResult> results, const std::filesystem::path& path,
               const PlotSpec& spec);
std::string render_svg(std::span<const ExperimentResult> results, const PlotSpec& spec);

}  // namespace streamlearn
