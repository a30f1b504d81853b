#include "streamlearn/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <ostream>

#include "streamlearn/harness.hpp"
#include "streamlearn/io.hpp"

namespace streamlearn {

namespace {

namespace fs = std::filesystem;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

fs::path default_out_dir(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return ".";
}

// Relative output paths from a config land under the output directory.
fs::path under(const fs::path& dir, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : dir / path;
}

struct NoInput : Error {
  using Error::Error;
};

std::string read_config_text(const std::string& path) {
  try {
    return read_text_file(path);
  } catch (const IoError& e) {
    throw NoInput(e.what());
  }
}

struct PlanArgs {
  std::optional<double> streaming, processing, messaging;
  std::optional<std::int64_t> nodes, rounds;
  std::vector<std::int64_t> minibatches;
  std::string config;
  std::string scale = "desk";
  std::string csv;
  int max_exponent = 16;
};

struct RunArgs {
  std::string config;
  std::vector<std::string> sets;
  std::string scale = "desk";
  std::optional<int> workers;
  std::string out_dir;
  std::string csv, svg, raw;
  bool quiet = false;
  // sweep only
  std::string axis;
  std::vector<std::string> values;
  std::string algorithm;
};

struct PlotArgs {
  std::string csv;
  std::string svg;
  std::string metric;
  std::string x_axis = "t_prime";
  std::string title;
};

struct TopoArgs {
  std::string kind;
  int nodes = 0;
  int degree = 0;
  std::uint64_t seed = 0;
  std::string weights = "metropolis";
  std::string csv;
};

int cmd_plan(const PlanArgs& a, std::ostream& out, std::ostream& err) {
  SystemRates rates;
  bool have_rates = false;
  if (!a.config.empty()) {
    const ExperimentConfig cfg = parse_config(read_config_text(a.config), {}, a.scale);
    rates = cfg.rates;
    rates.nodes = cfg.topology ? cfg.topology->nodes : 1;
    have_rates = true;
  }
  if (a.streaming) rates.streaming_rate = *a.streaming;
  if (a.processing) rates.processing_rate = *a.processing;
  if (a.messaging) rates.messaging_rate = *a.messaging;
  if (a.nodes) rates.nodes = *a.nodes;
  if (!have_rates && !(a.streaming && a.processing && a.messaging && a.nodes)) {
    err << "plan: --streaming, --processing, --messaging and --nodes are required without --config\n";
    return kExitUsage;
  }
  rates.minibatch = rates.nodes;
  rates.rounds = a.rounds.value_or(1);
  try {
    rates.validate();
  } catch (const InvalidArgument& e) {
    err << "plan: " << e.what() << "\n";
    return kExitUsage;
  }

  std::vector<std::int64_t> bs = a.minibatches;
  if (bs.empty())
    for (int k = 0; k <= a.max_exponent; ++k) bs.push_back(rates.nodes << k);
  for (std::int64_t b : bs)
    if (b < 1 || b % rates.nodes != 0) {
      err << "plan: B=" << b << " is not a positive multiple of N=" << rates.nodes << "\n";
      return kExitUsage;
    }
  const auto rows =
      rate_ratio_sweep(rates, bs, a.rounds ? RoundsPolicy::fixed : RoundsPolicy::max_rounds);

  std::string csv = "B,R,R_e,Rs_over_Re,mu,rho,feasible\n";
  for (const PlannerReport& r : rows)
    csv += std::to_string(r.minibatch) + "," + std::to_string(r.rounds) + "," + format_double(r.effective_rate) + "," +
           format_double(r.stream_to_effective) + "," + std::to_string(r.discarded) + "," + format_double(r.rho) + "," +
           (r.feasible ? "1" : "0") + "\n";
  if (!a.csv.empty()) write_file_atomic(a.csv, csv);

  char line[160];
  std::snprintf(line, sizeof line, "%10s %8s %14s %12s %10s %9s\n", "B", "R_max", "R_e", "R_s/R_e", "mu", "feasible");
  out << "N=" << rates.nodes << " R_s=" << format_double(rates.streaming_rate)
      << " R_p=" << format_double(rates.processing_rate) << " R_c=" << format_double(rates.messaging_rate)
      << " rho=" << format_double(mismatch_ratio(rates)) << "\n"
      << line;
  bool any = false;
  for (const PlannerReport& r : rows) {
    any |= r.feasible;
    std::snprintf(line, sizeof line, "%10lld %8lld %14.6g %12.6g %10lld %9s\n", static_cast<long long>(r.minibatch),
                  static_cast<long long>(r.rounds), r.effective_rate, r.stream_to_effective,
                  static_cast<long long>(r.discarded), r.feasible ? "yes" : "no");
    out << line;
  }
  if (!any) {
    err << "plan: no feasible mini-batch size in the sweep\n";
    return kExitNoFeasible;
  }
  return kExitOk;
}

void print_summary(const ExperimentResult& r, std::ostream& out) {
  out << r.experiment << " (" << r.trial_count << " trials)\n";
  for (std::size_t ci = 0; ci < r.curves.size(); ++ci) {
    const ResolvedCurve& c = r.curves[ci];
    out << "  " << c.label << "  B=" << c.minibatch << " N=" << c.nodes << " R=" << c.rounds << " mu=" << c.discarded
        << " t=" << c.iterations;
    std::int64_t last_t = 0;
    for (const AggregateRow& row : r.rows)
      if (row.curve == ci) last_t = std::max(last_t, row.t);
    for (const AggregateRow& row : r.rows)
      if (row.curve == ci && row.t == last_t) out << "  " << row.metric << "=" << fmt("%.4g", row.stats.mean);
    if (c.failed_trials > 0) out << "  failed=" << c.failed_trials;
    out << "\n";
  }
}

int write_outputs(const std::vector<ExperimentResult>& results, const ExperimentConfig& cfg, const RunArgs& a,
                  const std::string& default_csv, std::ostream& out) {
  const fs::path dir = default_out_dir(a.out_dir);
  const fs::path csv = !a.csv.empty() ? fs::path(a.csv) : under(dir, cfg.output.csv.empty() ? default_csv : cfg.output.csv);
  emit_csv(results, csv);
  out << "wrote " << csv.string() << "\n";
  const std::string svg_name = !a.svg.empty() ? a.svg : cfg.output.svg;
  if (!svg_name.empty()) {
    const fs::path svg = !a.svg.empty() ? fs::path(a.svg) : under(dir, cfg.output.svg);
    PlotSpec spec;
    spec.title = cfg.output.title.empty() ? cfg.name : cfg.output.title;
    spec.x_axis = cfg.output.x_axis;
    emit_plot(results, svg, spec);
    out << "wrote " << svg.string() << "\n";
  }
  const std::string raw_name = !a.raw.empty() ? a.raw : cfg.output.raw;
  if (!raw_name.empty()) {
    const fs::path raw = !a.raw.empty() ? fs::path(a.raw) : under(dir, cfg.output.raw);
    emit_raw_csv(results, raw);
    out << "wrote " << raw.string() << "\n";
  }
  return kExitOk;
}

bool wants_raw(const RunArgs& a, const ExperimentConfig& cfg) { return !a.raw.empty() || !cfg.output.raw.empty(); }

int cmd_run(const RunArgs& a, std::ostream& out) {
  const std::string text = read_config_text(a.config);
  const ExperimentConfig cfg = parse_config(text, a.sets, a.scale);
  validate_experiment(cfg);
  RunOptions opts;
  opts.workers = a.workers;
  opts.keep_raw = wants_raw(a, cfg);
  std::vector<ExperimentResult> results{run_experiment(cfg, opts)};
  if (!a.quiet) print_summary(results.front(), out);
  return write_outputs(results, cfg, a, cfg.name + ".csv", out);
}

int cmd_sweep(const RunArgs& a, std::ostream& out, std::ostream& err) {
  SweepAxis axis;
  if (!parse_sweep_axis(a.axis, axis)) {
    err << "sweep: unknown axis '" << a.axis << "' (expected B, mu, N, R or c)\n";
    return kExitUsage;
  }
  if (a.values.empty()) {
    err << "sweep: --values is empty\n";
    return kExitUsage;
  }
  const std::string text = read_config_text(a.config);
  const std::vector<ExperimentConfig> cfgs = sweep_configs(text, a.sets, a.scale, axis, a.values, a.algorithm);
  // Everything is validated before the first run so a bad value never leaves partial output.
  for (const ExperimentConfig& cfg : cfgs) {
    try {
      validate_experiment(cfg);
    } catch (const ConfigError& e) {
      throw ConfigError(cfg.name + ": " + e.what());
    } catch (const InfeasibleError& e) {
      throw InfeasibleError(cfg.name + ": " + e.what());
    }
  }
  RunOptions opts;
  opts.workers = a.workers;
  opts.keep_raw = wants_raw(a, cfgs.front());
  std::vector<ExperimentResult> results;
  for (const ExperimentConfig& cfg : cfgs) {
    results.push_back(run_experiment(cfg, opts));
    if (!a.quiet) print_summary(results.back(), out);
  }
  const ExperimentConfig& first = cfgs.front();
  const std::string base = first.name.substr(0, first.name.find('['));
  ExperimentConfig shared = first;
  if (shared.output.title.empty() || shared.output.title == first.name) shared.output.title = base + " " + a.axis + " sweep";
  return write_outputs(results, shared, a, base + "_" + a.axis + "_sweep.csv", out);
}

int cmd_plot(const PlotArgs& a, std::ostream& out) {
  const std::vector<ExperimentResult> results = read_results_csv(a.csv);
  PlotSpec spec;
  spec.title = a.title.empty() && !results.empty() ? results.front().experiment : a.title;
  spec.metric = a.metric;
  spec.x_axis = a.x_axis;
  fs::path svg = a.svg.empty() ? fs::path(a.csv).replace_extension(".svg") : fs::path(a.svg);
  emit_plot(results, svg, spec);
  out << "wrote " << svg.string() << "\n";
  return kExitOk;
}

int cmd_topo(const TopoArgs& a, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, TopologyKind> kinds{{"star", TopologyKind::star},
                                                          {"ring", TopologyKind::ring},
                                                          {"complete", TopologyKind::complete},
                                                          {"k_regular", TopologyKind::k_regular}};
  static const std::map<std::string, WeightRule> rules{{"metropolis", WeightRule::metropolis},
                                                        {"uniform", WeightRule::uniform}};
  TopologySpec spec;
  spec.kind = kinds.at(a.kind);
  spec.weights = rules.at(a.weights);
  spec.nodes = a.nodes;
  spec.degree = a.degree;
  spec.seed = a.seed;
  NetworkModel net;
  try {
    net = build_topology(spec);
  } catch (const InvalidArgument& e) {
    err << "topo: " << e.what() << "\n";
    return kExitUsage;
  }
  out << "nodes " << net.nodes << "\n"
      << "edges " << net.edges.size() << "\n"
      << "lambda2 " << format_double(net.lambda2) << "\n";
  if (!a.csv.empty()) {
    write_weights_csv(net, a.csv);
    out << "wrote " << a.csv << "\n";
  }
  return kExitOk;
}

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("config", a.config, "experiment config file")->required();
  cmd->add_option("--set", a.sets, "override a config field, e.g. algorithms.dmb.B=200 (repeatable)");
  cmd->add_option("--scale", a.scale, "entry of the config's scales map")->capture_default_str();
  cmd->add_option("--workers", a.workers, "worker threads for trials")->check(CLI::PositiveNumber);
  cmd->add_option("--out-dir", a.out_dir, std::string("output directory (default $") + kOutDirEnv + " or .)");
  cmd->add_option("--csv", a.csv, "aggregated CSV path (overrides output.csv)");
  cmd->add_option("--svg", a.svg, "SVG plot path (overrides output.svg)");
  cmd->add_option("--raw", a.raw, "per-trial CSV path (overrides output.raw)");
  cmd->add_flag("-q,--quiet", a.quiet, "no summary table");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulator for distributed learning from fast data streams", "streamlearn"};
  app.require_subcommand(1);

  PlanArgs plan_args;
  auto* plan = app.add_subcommand("plan", "rate planning table over a mini-batch sweep");
  plan->add_option("--streaming", plan_args.streaming, "R_s, samples/s")->check(CLI::PositiveNumber);
  plan->add_option("--processing", plan_args.processing, "R_p, samples/s per node")->check(CLI::PositiveNumber);
  plan->add_option("--messaging", plan_args.messaging, "R_c, messages/s")->check(CLI::PositiveNumber);
  plan->add_option("--nodes", plan_args.nodes, "N")->check(CLI::PositiveNumber);
  plan->add_option("--rounds", plan_args.rounds, "fixed R instead of the per-B budget")->check(CLI::NonNegativeNumber);
  plan->add_option("--B", plan_args.minibatches, "mini-batch sizes (default N*2^k)")->delimiter(',');
  plan->add_option("--max-exponent", plan_args.max_exponent, "largest k in the default sweep")->check(CLI::Range(0, 40));
  plan->add_option("--config", plan_args.config, "take rates and N from a config");
  plan->add_option("--scale", plan_args.scale, "config scale");
  plan->add_option("--csv", plan_args.csv, "also write the table as CSV");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "run one experiment");
  add_run_options(run, run_args);

  RunArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "run an experiment once per value of one knob");
  add_run_options(sweep, sweep_args);
  sweep->add_option("--axis", sweep_args.axis, "B, mu, N, R or c")->required();
  sweep->add_option("--values", sweep_args.values, "comma separated values")->required()->delimiter(',');
  sweep->add_option("--algorithm", sweep_args.algorithm, "only change this algorithm entry");

  PlotArgs plot_args;
  auto* plot = app.add_subcommand("plot", "render an aggregated CSV as SVG");
  plot->add_option("csv", plot_args.csv, "aggregated CSV")->required()->check(CLI::ExistingFile);
  plot->add_option("--svg", plot_args.svg, "output path (default: CSV path with .svg)");
  plot->add_option("--metric", plot_args.metric, "metric to plot (default: first)");
  plot->add_option("--x", plot_args.x_axis, "t_prime, t or sim_seconds")
      ->check(CLI::IsMember({"t_prime", "t", "sim_seconds"}));
  plot->add_option("--title", plot_args.title, "plot title");

  TopoArgs topo_args;
  auto* topo = app.add_subcommand("topo", "build a topology and report its mixing matrix");
  topo->add_option("--kind", topo_args.kind, "star, ring, complete or k_regular")
      ->required()
      ->check(CLI::IsMember({"star", "ring", "complete", "k_regular"}));
  topo->add_option("--nodes", topo_args.nodes, "N")->required();
  topo->add_option("--degree", topo_args.degree, "k for k_regular");
  topo->add_option("--seed", topo_args.seed, "seed for k_regular");
  topo->add_option("--weights", topo_args.weights, "metropolis or uniform")
      ->check(CLI::IsMember({"metropolis", "uniform"}));
  topo->add_option("--csv", topo_args.csv, "write the mixing matrix as CSV");

  std::vector<const char*> argv{"streamlearn"};
  for (const std::string& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const CLI::App* sub : app.get_subcommands()) target = sub;
    out << target->help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "streamlearn: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*plan) return cmd_plan(plan_args, out, err);
    if (*run) return cmd_run(run_args, out);
    if (*sweep) return cmd_sweep(sweep_args, out, err);
    if (*plot) return cmd_plot(plot_args, out);
    return cmd_topo(topo_args, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const InfeasibleError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const TrialError& e) {
    err << "run failed: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const InvalidArgument& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NoInput& e) {
    err << "cannot read config: " << e.what() << "\n";
    return kExitNoInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

}  // namespace streamlearn
