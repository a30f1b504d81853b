#include "streamlearn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "streamlearn/rng.hpp"

namespace streamlearn {

namespace {

constexpr std::size_t kEstimationSamples = 10000;

std::string curve_error(const CurveConfig& c, const std::string& what) {
  return "algorithm " + c.label + ": " + what;
}

bool centralized_kind(AlgorithmKind k) {
  return k == AlgorithmKind::centralized || k == AlgorithmKind::centralized_accelerated;
}
bool local_kind(AlgorithmKind k) { return k == AlgorithmKind::local_sgd || k == AlgorithmKind::local_asgd; }
bool dgd_kind(AlgorithmKind k) { return k == AlgorithmKind::dgd_naive || k == AlgorithmKind::dgd_minibatch; }
bool exact_kind(AlgorithmKind k) { return k == AlgorithmKind::dmb || k == AlgorithmKind::dm_krasulina; }

Vector unit_sphere_point(std::uint64_t seed, int dimension) {
  CounterRng rng(seed, RngDomain::initial_point, 0);
  std::normal_distribution<double> normal;
  Vector w(dimension);
  do {
    for (int i = 0; i < dimension; ++i) w[i] = normal(rng);
  } while (!(w.norm() > 0));
  return w / w.norm();
}

struct TrialOutput {
  // values[curve][checkpoint * columns + column]
  std::vector<std::vector<double>> values;
  std::vector<bool> failed;  // per curve
  std::vector<RunRecord> raw;
};

struct Column {
  Metric metric;
  bool worst;
  std::string name;
};

std::vector<Column> columns_for(const ExperimentConfig& cfg) {
  std::vector<Column> cols;
  for (Metric m : cfg.metrics) cols.push_back({m, false, metric_name(m)});
  if (cfg.worst_node)
    for (Metric m : cfg.metrics) cols.push_back({m, true, std::string(metric_name(m)) + "_worst_node"});
  return cols;
}

LossModel base_loss(const ExperimentConfig& cfg, int dimension) {
  LossModel model = cfg.loss.model;
  model.dimension = dimension;
  if (cfg.loss.expanse_default && model.kind != LossKind::pca)
    model.expanse = 10.0 * std::sqrt(static_cast<double>(dimension));
  return model;
}

bool needs_smoothness(const StepSchedule& s) {
  return s.smoothness <= 0 && (s.kind == StepKind::lan_optimal || s.kind == StepKind::dmb_theorem);
}
bool needs_sigma(const StepSchedule& s) { return s.sigma <= 0 && s.kind == StepKind::dmb_theorem; }

StreamSource stream_for(const ExperimentConfig& cfg, const std::optional<StreamSource>& shared_file,
                        std::uint64_t seed) {
  if (shared_file) return *shared_file;
  StreamSpec s = cfg.stream;
  s.seed = seed;
  return StreamSource(s);
}

// Rejects loss/stream/metric/schedule combinations before any trial runs.
void check_problem(const ExperimentConfig& cfg, const StreamSource& probe, const std::vector<Column>& columns) {
  const LossModel model = base_loss(cfg, probe.dimension());
  try {
    model.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("loss: ") + e.what());
  }
  if (model.supervised() && !probe.labeled()) throw ConfigError("supervised loss needs a labeled stream");
  if (!model.supervised() && probe.kind() != StreamKind::gaussian_covariance && probe.kind() != StreamKind::file)
    throw ConfigError("pca loss needs a gaussian_covariance or file stream");
  const Evaluator ev(model, probe, cfg.holdout);
  for (const Column& col : columns)
    if (!ev.available(col.metric))
      throw ConfigError(std::string("metric ") + metric_name(col.metric) +
                        " is not available for this stream and loss" +
                        (col.metric == Metric::excess_risk ? " (logistic_gaussian needs holdout > 0)" : ""));
  for (const CurveConfig& c : cfg.curves) {
    if (c.kind == AlgorithmKind::dm_krasulina && model.kind != LossKind::pca)
      throw ConfigError(curve_error(c, "dm_krasulina needs the pca loss"));
    if (c.schedule.c0 && probe.kind() != StreamKind::gaussian_covariance)
      throw ConfigError(curve_error(c, "schedule.c0 needs a known eigengap (gaussian_covariance stream)"));
    if (needs_smoothness(c.schedule.base) && !model.smoothness && model.kind != LossKind::logistic)
      throw ConfigError(curve_error(c, "schedule needs loss.smoothness"));
    if ((c.schedule.base.kind == StepKind::lan_optimal || c.schedule.base.kind == StepKind::dmb_theorem) &&
        !model.expanse && c.schedule.base.expanse <= 0)
      throw ConfigError(curve_error(c, "schedule needs a bounded model space (loss.expanse)"));
    try {
      StepSchedule probe_schedule = c.schedule.base;
      if (probe_schedule.kind == StepKind::lan_optimal || probe_schedule.kind == StepKind::dmb_theorem) continue;
      if (c.schedule.c0) probe_schedule.c = 1.0;
      probe_schedule.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(curve_error(c, e.what()));
    }
  }
}

std::optional<NetworkModel> network_for(const ExperimentConfig& cfg) {
  if (!cfg.topology) return std::nullopt;
  try {
    return build_topology(*cfg.topology);
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("topology: ") + e.what());
  }
}

}  // namespace

std::uint64_t trial_seed(std::uint64_t master, std::int64_t trial) {
  return derive_seed(master, static_cast<std::uint64_t>(trial));
}

std::vector<std::int64_t> checkpoint_grid(std::int64_t iterations) {
  std::vector<std::int64_t> grid;
  if (iterations < 1) return grid;
  for (std::int64_t t = 1; t <= std::min<std::int64_t>(iterations, 1000); ++t) grid.push_back(t);
  double x = 1.0;
  while (true) {
    x *= 1.2;
    const auto t = static_cast<std::int64_t>(std::llround(x));
    if (t > iterations) break;
    if (t > 1000 && t > grid.back()) grid.push_back(t);
  }
  if (grid.back() != iterations) grid.push_back(iterations);
  return grid;
}

double nearest_rank(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidArgument("no values to rank");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::int64_t>(std::ceil(q * n - 1e-12));
  rank = std::clamp<std::int64_t>(rank, 1, static_cast<std::int64_t>(sorted.size()));
  return sorted[static_cast<std::size_t>(rank - 1)];
}

Summary summarize(std::vector<double> values) {
  if (values.empty()) throw InvalidArgument("no values to summarize");
  Summary s;
  double total = 0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  std::sort(values.begin(), values.end());
  s.median = nearest_rank(values, 0.5);
  s.q10 = nearest_rank(values, 0.1);
  s.q90 = nearest_rank(values, 0.9);
  return s;
}

std::vector<ResolvedCurve> resolve_curves(const ExperimentConfig& cfg, const NetworkModel* network) {
  std::vector<ResolvedCurve> out;
  const std::int64_t topo_nodes = cfg.topology ? cfg.topology->nodes : 1;
  const double lambda2 = network ? network->lambda2 : 0.0;
  using Mode = CountField::Mode;
  for (const CurveConfig& c : cfg.curves) {
    ResolvedCurve r;
    r.label = c.label;
    r.kind = c.kind;
    r.nodes = c.nodes.fixed() ? c.nodes.value : topo_nodes;
    if (r.nodes < 1) throw ConfigError(curve_error(c, "N must be positive"));
    if (uses_network(c.kind) && r.nodes > 1) {
      if (!network) throw ConfigError(curve_error(c, "needs a topology section"));
      if (network->nodes != r.nodes)
        throw ConfigError(curve_error(c, "N=" + std::to_string(r.nodes) + " does not match topology.nodes=" +
                                             std::to_string(network->nodes)));
    }

    SystemRates rates = cfg.rates;
    rates.nodes = r.nodes;
    rates.minibatch = r.nodes;
    rates.rounds = 1;
    const double rho = cfg.rho ? *cfg.rho : mismatch_ratio(rates);

    std::optional<DgdPlan> dgd;
    if (dgd_kind(c.kind)) {
      if (!(rho > 0)) throw ConfigError(curve_error(c, "DGD needs a positive mismatch ratio rho"));
      dgd = dgd_plan(c.kind, r.nodes, rho);
    }
    const bool auto_batch_kind = c.kind == AlgorithmKind::dsgd || c.kind == AlgorithmKind::adsgd ||
                                 local_kind(c.kind) || centralized_kind(c.kind);
    std::optional<ConsensusPlan> cplan;
    auto consensus = [&]() -> const ConsensusPlan& {
      if (!cplan) {
        if (!(rho > 0)) throw ConfigError(curve_error(c, "automatic sizing needs a positive mismatch ratio rho"));
        cplan = consensus_plan(lambda2, rho, static_cast<double>(cfg.horizon), cfg.local_batch_scale);
      }
      return *cplan;
    };

    // B
    if (c.minibatch.fixed()) {
      r.minibatch = c.minibatch.value;
    } else if (dgd) {
      r.minibatch = dgd->minibatch;
    } else if (auto_batch_kind) {
      r.minibatch = r.nodes * consensus().local_batch;
    } else {
      throw ConfigError(curve_error(c, "B must be given"));
    }
    if (r.minibatch % r.nodes != 0)
      throw ConfigError(curve_error(c, "B=" + std::to_string(r.minibatch) + " is not a multiple of N=" +
                                           std::to_string(r.nodes)));

    // R
    if (c.rounds.fixed()) {
      r.rounds = c.rounds.value;
    } else if (local_kind(c.kind) || centralized_kind(c.kind)) {
      r.rounds = 0;
    } else if (dgd) {
      r.rounds = 1;
    } else if (exact_kind(c.kind)) {
      if (c.rounds.mode == Mode::automatic) {
        SystemRates probe = cfg.rates;
        probe.nodes = r.nodes;
        probe.minibatch = r.minibatch;
        const RoundsBudget budget = max_rounds(probe);
        if (!budget.feasible)
          throw InfeasibleError(curve_error(c, "no communication round fits the rate budget"));
        r.rounds = budget.rounds;
      } else {
        r.rounds = 1;
      }
    } else {
      r.rounds = consensus().rounds;
    }

    // mu
    if (c.discarded.fixed()) {
      r.discarded = c.discarded.value;
    } else if (dgd) {
      r.discarded = dgd->discarded;
    } else if (c.discarded.mode == Mode::automatic) {
      SystemRates probe = cfg.rates;
      probe.nodes = r.nodes;
      probe.minibatch = r.minibatch;
      probe.rounds = r.rounds;
      r.discarded = discarded_per_iteration(probe);
    } else {
      r.discarded = 0;
    }

    r.iterations = cfg.horizon / (r.minibatch + r.discarded);
    if (r.iterations < 1)
      throw ConfigError(curve_error(c, "horizon " + std::to_string(cfg.horizon) + " is shorter than one iteration (" +
                                           std::to_string(r.minibatch + r.discarded) + " samples)"));
    out.push_back(r);
  }
  return out;
}

void validate_experiment(const ExperimentConfig& cfg) {
  const std::optional<NetworkModel> network = network_for(cfg);
  resolve_curves(cfg, network ? &*network : nullptr);
  std::optional<StreamSource> shared_file;
  if (cfg.stream.kind == StreamKind::file) shared_file = open_file_stream(cfg.stream.path, cfg.stream.format);
  check_problem(cfg, stream_for(cfg, shared_file, trial_seed(cfg.seed, 0)), columns_for(cfg));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  const std::optional<NetworkModel> network = network_for(cfg);
  const std::vector<ResolvedCurve> curves = resolve_curves(cfg, network ? &*network : nullptr);
  const std::vector<Column> columns = columns_for(cfg);

  std::optional<StreamSource> shared_file;
  if (cfg.stream.kind == StreamKind::file) shared_file = open_file_stream(cfg.stream.path, cfg.stream.format);
  auto make_stream = [&](std::uint64_t seed) { return stream_for(cfg, shared_file, seed); };
  check_problem(cfg, make_stream(trial_seed(cfg.seed, 0)), columns);

  std::vector<std::vector<std::int64_t>> grids;
  for (const ResolvedCurve& r : curves) grids.push_back(checkpoint_grid(r.iterations));

  const auto trials = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialOutput> outputs(trials);
  std::vector<std::exception_ptr> errors(trials);

  auto run_trial = [&](std::size_t trial) {
    const std::uint64_t seed = trial_seed(cfg.seed, static_cast<std::int64_t>(trial));
    const StreamSource stream = make_stream(seed);
    LossModel model = base_loss(cfg, stream.dimension());
    const Evaluator evaluator(model, stream, cfg.holdout);

    bool want_l = false, want_sigma = false;
    for (const CurveConfig& c : cfg.curves) {
      want_l |= needs_smoothness(c.schedule.base) && !model.smoothness;
      want_sigma |= needs_sigma(c.schedule.base) && cfg.loss.noise_auto;
    }
    if (want_l || want_sigma) {
      const std::vector<Sample> est = stream.kind() == StreamKind::file
                                          ? std::vector<Sample>(stream.records().begin(), stream.records().end())
                                          : stream.draw_aux(RngDomain::estimation, kEstimationSamples);
      if (want_l) model.smoothness = estimate_logistic_smoothness(est);
      if (want_sigma) model.noise_variance = estimate_gradient_noise(model, Vector::Zero(model.model_dimension()), est);
    }

    Vector initial = Vector::Zero(model.model_dimension());
    if (model.kind == LossKind::pca) initial = unit_sphere_point(seed, model.dimension);

    TrialOutput& out = outputs[trial];
    out.values.resize(curves.size());
    out.failed.assign(curves.size(), false);
    const Problem problem{&model, &stream, network ? &*network : nullptr};

    for (std::size_t ci = 0; ci < curves.size(); ++ci) {
      const CurveConfig& cc = cfg.curves[ci];
      const ResolvedCurve& rc = curves[ci];
      RunSpec spec;
      spec.kind = rc.kind;
      spec.minibatch = rc.minibatch;
      spec.nodes = rc.nodes;
      spec.rounds = rc.rounds;
      spec.discarded = rc.discarded;
      spec.iterations = rc.iterations;
      spec.normalization = cc.normalization;
      spec.report = cc.report;
      spec.streaming_rate = cfg.rates.streaming_rate;
      spec.processing_rate = cfg.rates.processing_rate;
      spec.messaging_rate = cfg.rates.messaging_rate;
      spec.initial = initial;
      StepSchedule sched = cc.schedule.base;
      if (cc.schedule.c0) sched.c = *cc.schedule.c0 / (2.0 * stream.truth().spectrum.gap());
      if (sched.smoothness <= 0 && model.smoothness) sched.smoothness = *model.smoothness;
      if (sched.expanse <= 0 && model.expanse) sched.expanse = *model.expanse;
      if (sched.sigma <= 0) sched.sigma = std::sqrt(model.noise_variance);
      if (sched.horizon <= 0) sched.horizon = rc.iterations;
      spec.schedule = sched;

      const std::vector<std::int64_t>& grid = grids[ci];
      std::vector<double>& vals = out.values[ci];
      vals.reserve(grid.size() * columns.size());
      std::size_t next = 0;
      std::vector<double> per_row;
      double last_excess = 0;
      auto hook = [&](const IterationView& view) {
        if (next >= grid.size() || view.t != grid[next]) return;
        ++next;
        const NodeVectors& it = *view.iterates;
        RunRecord mean_rec, worst_rec;
        for (const Column& col : columns) {
          per_row.resize(static_cast<std::size_t>(it.rows()));
          for (Eigen::Index i = 0; i < it.rows(); ++i)
            per_row[static_cast<std::size_t>(i)] =
                evaluator.evaluate(col.metric, Eigen::Map<const Vector>(it.row(i).data(), it.cols()));
          double v;
          if (col.worst) {
            v = *std::max_element(per_row.begin(), per_row.end());
          } else {
            double s = 0;
            for (double x : per_row) s += x;
            v = s / static_cast<double>(per_row.size());
          }
          vals.push_back(v);
          RunRecord& rec = col.worst ? worst_rec : mean_rec;
          switch (col.metric) {
            case Metric::excess_risk: rec.excess_risk = v; break;
            case Metric::param_error: rec.param_error = v; break;
            case Metric::risk: rec.risk = v; break;
          }
          if (col.metric == Metric::excess_risk && !col.worst) last_excess = v;
        }
        if (options.keep_raw) {
          for (RunRecord* rec : {&mean_rec, &worst_rec}) {
            if (rec == &worst_rec && !cfg.worst_node) continue;
            rec->trial = static_cast<std::int64_t>(trial);
            rec->algorithm = rc.label;
            rec->node = rec == &worst_rec ? RunRecord::kNodeWorst : RunRecord::kNodeMean;
            rec->t = view.t;
            rec->t_prime = view.t_prime;
            rec->sim_seconds = view.sim_seconds;
            rec->discarded = view.discarded_total;
            out.raw.push_back(*rec);
          }
        }
      };
      run_algorithm(problem, spec, hook);
      if (model.kind == LossKind::pca && stream.kind() == StreamKind::gaussian_covariance) {
        const bool tracked = std::any_of(columns.begin(), columns.end(),
                                         [](const Column& c) { return c.metric == Metric::excess_risk && !c.worst; });
        if (tracked && last_excess > stream.truth().spectrum.gap() / 2.0) out.failed[ci] = true;
      }
    }
  };

  const int workers = std::max(1, std::min<int>(options.workers.value_or(cfg.workers), static_cast<int>(trials)));
  std::atomic<std::size_t> next_trial{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t trial = next_trial.fetch_add(1);
      if (trial >= trials) return;
      try {
        run_trial(trial);
      } catch (...) {
        errors[trial] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t trial = 0; trial < trials; ++trial) {
    if (!errors[trial]) continue;
    try {
      std::rethrow_exception(errors[trial]);
    } catch (const std::exception& e) {
      throw TrialError(static_cast<std::int64_t>(trial), e.what());
    }
  }

  ExperimentResult result;
  result.experiment = cfg.name;
  result.trial_count = cfg.trials;
  result.curves = curves;
  std::vector<double> gather(trials);
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const ResolvedCurve& rc = curves[ci];
    for (std::size_t trial = 0; trial < trials; ++trial)
      if (outputs[trial].failed[ci]) ++result.curves[ci].failed_trials;
    RunSpec clock;
    clock.kind = rc.kind;
    clock.minibatch = rc.minibatch;
    clock.nodes = rc.nodes;
    clock.rounds = rc.rounds;
    clock.streaming_rate = cfg.rates.streaming_rate;
    clock.processing_rate = cfg.rates.processing_rate;
    clock.messaging_rate = cfg.rates.messaging_rate;
    const double per_iteration = clock.seconds_per_iteration();
    const std::vector<std::int64_t>& grid = grids[ci];
    for (std::size_t k = 0; k < grid.size(); ++k) {
      for (std::size_t col = 0; col < columns.size(); ++col) {
        for (std::size_t trial = 0; trial < trials; ++trial)
          gather[trial] = outputs[trial].values[ci][k * columns.size() + col];
        AggregateRow row;
        row.curve = ci;
        row.t = grid[k];
        row.t_prime = grid[k] * (rc.minibatch + rc.discarded);
        row.sim_seconds = static_cast<double>(grid[k]) * per_iteration;
        row.metric = columns[col].name;
        row.stats = summarize(gather);
        result.rows.push_back(std::move(row));
      }
    }
  }
  if (options.keep_raw)
    for (auto& out : outputs) result.raw.insert(result.raw.end(), out.raw.begin(), out.raw.end());
  return result;
}

}  // namespace streamlearn
