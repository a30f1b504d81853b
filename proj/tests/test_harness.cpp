#include <doctest.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "streamlearn/harness.hpp"
#include "streamlearn/io.hpp"

using namespace streamlearn;

namespace {

const std::filesystem::path kConfigs = std::filesystem::path(STREAMLEARN_SOURCE_DIR) / "configs";

const char* kSmall = R"(experiment: small
seed: 5
trials: 4
horizon: 2000
metrics: [param_error, risk]
holdout: 200
stream:
  kind: logistic_gaussian
  dimension: 3
loss:
  kind: logistic
algorithms:
  dmb:
    kind: dmb
    B: [1, 8]
    N: [1, 4]
    R: 1
    schedule:
      kind: inv_sqrt
      c: [0.5, 1.0]
output:
  csv: small.csv
scales:
  desk: {}
  big:
    trials: 40
    horizon: 100000
)";

const char* kRing = R"(experiment: ring
seed: 3
trials: 3
horizon: "N^2"
stream:
  kind: conditional_gaussian
  dimension: 4
loss:
  kind: logistic
system:
  rho: 0.5
topology:
  kind: ring
  nodes: 8
algorithms:
  dsgd:
    kind: dsgd
    schedule: {kind: inv_sqrt, c: 1.0}
  local:
    kind: local_sgd
    schedule: {kind: inv_sqrt, c: 1.0}
)";

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("streamlearn_harness_" + name);
}

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("config parsing fills every section") {
  const ExperimentConfig cfg = parse_config(kSmall);
  CHECK(cfg.name == "small");
  CHECK(cfg.seed == 5);
  CHECK(cfg.trials == 4);
  CHECK(cfg.horizon == 2000);
  CHECK(cfg.holdout == 200);
  REQUIRE(cfg.metrics.size() == 2);
  CHECK(cfg.metrics[0] == Metric::param_error);
  CHECK(cfg.stream.kind == StreamKind::logistic_gaussian);
  CHECK(cfg.loss.model.kind == LossKind::logistic);
  REQUIRE(cfg.curves.size() == 2);
  CHECK(cfg.curves[0].label == "dmb[B=1,N=1,c=0.5]");
  CHECK(cfg.curves[1].label == "dmb[B=8,N=4,c=1.0]");
  CHECK(cfg.curves[1].minibatch.value == 8);
  CHECK(cfg.curves[1].nodes.value == 4);
  CHECK(cfg.curves[1].schedule.base.c == 1.0);
  CHECK(cfg.output.csv == "small.csv");
  CHECK(cfg.output.title == "small");
}

TEST_CASE("config errors carry the offending line") {
  const std::string base = kSmall;
  // An unknown key at line 3.
  std::string typo = base;
  typo.replace(typo.find("trials: 4"), 9, "trails: 4");
  CHECK(error_line(typo) == 3);
  CHECK_THROWS_WITH_AS(parse_config(typo), "line 3: unknown key 'trails' in configuration", ConfigError);

  std::string bad_kind = base;
  bad_kind.replace(bad_kind.find("kind: dmb"), 9, "kind: xyz");
  CHECK(error_line(bad_kind) == 14);

  std::string ragged = base;
  ragged.replace(ragged.find("N: [1, 4]"), 9, "N: [1, 4, 4]");
  CHECK(error_line(ragged) == 16);

  CHECK(error_line("experiment: [unclosed\n") >= 1);
  CHECK_THROWS_AS(parse_config("- a list\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment: x\n"), ConfigError);
}

TEST_CASE("scales and overrides") {
  const ExperimentConfig big = parse_config(kSmall, {}, "big");
  CHECK(big.trials == 40);
  CHECK(big.horizon == 100000);
  CHECK(big.curves.size() == 2);
  CHECK_THROWS_WITH_AS(parse_config(kSmall, {}, "huge"), "unknown scale 'huge'", ConfigError);

  const std::vector<std::string> set = {"algorithms.dmb.B=200", "trials=2", "algorithms.dmb.N=[1, 10]"};
  const ExperimentConfig o = parse_config(kSmall, set);
  CHECK(o.trials == 2);
  REQUIRE(o.curves.size() == 2);
  CHECK(o.curves[0].minibatch.value == 200);
  CHECK(o.curves[1].nodes.value == 10);

  // Overrides apply after the scale overlay.
  const std::vector<std::string> h = {"horizon=500"};
  CHECK(parse_config(kSmall, h, "big").horizon == 500);

  CHECK_THROWS_AS(parse_config(kSmall, std::vector<std::string>{"trials"}), ConfigError);
  CHECK_THROWS_AS(parse_config(kSmall, std::vector<std::string>{"seed.x=1"}), ConfigError);

  YAML::Node root = YAML::Load("a: {b: 1}");
  apply_override(root, "a.c.d=hello");
  CHECK(root["a"]["c"]["d"].as<std::string>() == "hello");
  CHECK(root["a"]["b"].as<int>() == 1);
}

TEST_CASE("bundled configurations load at both scales") {
  const std::map<std::string, std::size_t> curves = {{"dmb_batch", 4},      {"dmb_discard", 6},
                                                     {"krasulina_batch", 4}, {"krasulina_discard", 5},
                                                     {"dsgd_expander", 8}};
  for (const auto& [name, count] : curves) {
    CAPTURE(name);
    for (const char* scale : {"desk", "full"}) {
      const ExperimentConfig cfg = load_config(kConfigs / (name + ".cfg"), {}, scale);
      CHECK(cfg.name == name);
      CHECK(cfg.curves.size() == count);
      CHECK_NOTHROW(validate_experiment(cfg));
    }
  }
  const ExperimentConfig full = load_config(kConfigs / "dsgd_expander.cfg", {}, "full");
  CHECK(full.trials == 600);
  CHECK(full.horizon == 256);
}

TEST_CASE("horizon expressions") {
  CHECK(evaluate_horizon("1000", 0) == 1000);
  CHECK(evaluate_horizon("1e6", 0) == 1000000);
  CHECK(evaluate_horizon("N^2", 8) == 64);
  CHECK(evaluate_horizon("N^3", 16) == 4096);
  CHECK(evaluate_horizon("N^1.5", 16) == 64);
  CHECK_THROWS_AS(evaluate_horizon("N^2", 0), ConfigError);
  CHECK_THROWS_AS(evaluate_horizon("M^2", 4), ConfigError);
  CHECK_THROWS_AS(evaluate_horizon("0", 4), ConfigError);
  CHECK_THROWS_AS(evaluate_horizon("2.5", 4), ConfigError);
}

TEST_CASE("checkpoint grid") {
  const auto small = checkpoint_grid(5);
  CHECK(small == std::vector<std::int64_t>{1, 2, 3, 4, 5});
  for (std::int64_t T : {999, 1000, 1001, 5000, 123457}) {
    const auto g = checkpoint_grid(T);
    CAPTURE(T);
    REQUIRE(std::is_sorted(g.begin(), g.end()));
    REQUIRE(std::adjacent_find(g.begin(), g.end()) == g.end());
    CHECK(g.front() == 1);
    CHECK(g.back() == T);
    const std::int64_t dense = std::min<std::int64_t>(T, 1000);
    CHECK(std::count_if(g.begin(), g.end(), [&](std::int64_t t) { return t <= dense; }) == dense);
    for (std::size_t i = 1; i < g.size(); ++i)
      if (g[i - 1] > 1000 && g[i] != T) CHECK(static_cast<double>(g[i]) / static_cast<double>(g[i - 1]) <= 1.21);
  }
}

TEST_CASE("nearest-rank summaries") {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(nearest_rank(v, 0.1) == 1);
  CHECK(nearest_rank(v, 0.5) == 5);
  CHECK(nearest_rank(v, 0.9) == 9);
  CHECK(nearest_rank(v, 0.95) == 10);
  CHECK(nearest_rank(v, 0.0) == 1);
  const Summary s = summarize({4, 1, 3, 2});
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2);
  CHECK(s.q10 == 1);
  CHECK(s.q90 == 4);
  const Summary one = summarize({7});
  CHECK(one.q10 == 7);
  CHECK(one.q90 == 7);
  CHECK_THROWS_AS(summarize({}), InvalidArgument);
}

TEST_CASE("trial seeds are stable and distinct") {
  std::set<std::uint64_t> seen;
  for (std::int64_t i = 0; i < 1000; ++i) seen.insert(trial_seed(42, i));
  CHECK(seen.size() == 1000);
  CHECK(trial_seed(42, 7) == trial_seed(42, 7));
  CHECK(trial_seed(42, 7) != trial_seed(43, 7));
}

TEST_CASE("curve resolution") {
  std::string bad = kSmall;
  bad.replace(bad.find("B: [1, 8]"), 9, "B: [1, 15]");
  const ExperimentConfig cfg = parse_config(bad, std::vector<std::string>{"algorithms.dmb.N=[1, 10]"});
  CHECK_THROWS_WITH_AS(validate_experiment(cfg), "algorithm dmb[B=15,N=10,c=1.0]: B=15 is not a multiple of N=10",
                       ConfigError);

  const ExperimentConfig ok = parse_config(kSmall);
  const auto r = resolve_curves(ok, nullptr);
  REQUIRE(r.size() == 2);
  CHECK(r[1].minibatch == 8);
  CHECK(r[1].nodes == 4);
  CHECK(r[1].rounds == 1);
  CHECK(r[1].iterations == 250);

  // Automatic sizing on a graph: B/N from the consensus plan, R = floor(rho B/N).
  const ExperimentConfig ring = parse_config(kRing);
  const NetworkModel net = build_topology(*ring.topology);
  const auto rr = resolve_curves(ring, &net);
  const ConsensusPlan plan = consensus_plan(net.lambda2, 0.5, 64, 0.1);
  CHECK(rr[0].minibatch == 8 * plan.local_batch);
  CHECK(rr[0].rounds == plan.rounds);
  CHECK(rr[1].rounds == 0);

  const ExperimentConfig wrong_n = parse_config(kRing, std::vector<std::string>{"algorithms.dsgd.N=4"});
  CHECK_THROWS_AS(validate_experiment(wrong_n), ConfigError);

  // R = floor(B R_c/R_s - B R_c/(N R_p)) with R_s = 1e3, R_p = 1.25e5, R_c = 1e4:
  // 10 - 0.08 -> 9 for B = N = 1, and 80 - 0.16 -> 79 for B = 8, N = 4.
  const std::vector<std::string> auto_rounds = {"algorithms.dmb.R=auto", "rates.streaming=1000"};
  const auto pr = resolve_curves(parse_config(kSmall, auto_rounds), nullptr);
  CHECK(pr[0].rounds == 9);
  CHECK(pr[1].rounds == 79);
  const ExperimentConfig fast_stream = parse_config(kSmall, std::vector<std::string>{"algorithms.dmb.R=auto"});
  CHECK_THROWS_AS(validate_experiment(fast_stream), InfeasibleError);
}

TEST_CASE("runs are identical across worker counts") {
  const ExperimentConfig cfg = parse_config(kSmall);
  RunOptions one;
  one.workers = 1;
  RunOptions three;
  three.workers = 3;
  const ExperimentResult a = run_experiment(cfg, one);
  const ExperimentResult b = run_experiment(cfg, three);
  const std::string ca = format_csv(std::span(&a, 1));
  CHECK(ca == format_csv(std::span(&b, 1)));
  CHECK(a.trial_count == 4);
  REQUIRE(a.curves.size() == 2);
  CHECK(a.curves[1].iterations == 250);
  std::set<std::string> metrics;
  for (const AggregateRow& row : a.rows) metrics.insert(row.metric);
  CHECK(metrics == std::set<std::string>{"param_error", "risk"});
  // The last row of each curve sits at the final iteration.
  for (std::size_t c = 0; c < 2; ++c) {
    std::int64_t last = 0;
    for (const AggregateRow& row : a.rows)
      if (row.curve == c) last = std::max(last, row.t);
    CHECK(last == a.curves[c].iterations);
  }
}

TEST_CASE("graph runs report node means and the worst node") {
  const ExperimentConfig cfg = parse_config(kRing, std::vector<std::string>{"worst_node=true"});
  RunOptions opts;
  opts.keep_raw = true;
  const ExperimentResult r = run_experiment(cfg, opts);
  bool mean = false, worst = false;
  for (const RunRecord& rec : r.raw) {
    mean |= rec.node == RunRecord::kNodeMean;
    worst |= rec.node == RunRecord::kNodeWorst;
  }
  CHECK(mean);
  CHECK(worst);
  for (const AggregateRow& row : r.rows) CHECK(std::isfinite(row.stats.mean));
}

TEST_CASE("CSV output round trips") {
  const ExperimentConfig cfg = parse_config(kSmall);
  const ExperimentResult r = run_experiment(cfg);
  const auto path = temp_path("roundtrip.csv");
  emit_csv(std::span(&r, 1), path);
  const std::string text = read_text_file(path);
  CHECK(text.rfind("experiment,algorithm,B,N,R,mu,trial_count,t,t_prime,sim_seconds,metric,mean,median,q10,q90\n", 0) ==
        0);
  const auto back = read_results_csv(path);
  REQUIRE(back.size() == 1);
  CHECK(back[0].curves.size() == 2);
  CHECK(back[0].curves[1].minibatch == 8);
  CHECK(format_csv(back) == text);
  std::filesystem::remove(path);

  const auto raw = temp_path("raw.csv");
  RunOptions keep;
  keep.keep_raw = true;
  const ExperimentResult rr = run_experiment(cfg, keep);
  emit_raw_csv(std::span(&rr, 1), raw);
  const std::string raw_text = read_text_file(raw);
  CHECK(raw_text.rfind("experiment,algorithm,B,N,R,mu,trial,node,t,t_prime,sim_seconds,discarded,metric,value\n", 0) ==
        0);
  std::filesystem::remove(raw);

  const auto junk = temp_path("junk.csv");
  write_file_atomic(junk, "a,b\n1,2\n");
  CHECK_THROWS_AS(read_results_csv(junk), InvalidArgument);
  std::filesystem::remove(junk);

  CHECK(split_csv_line(R"(a,"b,c",  "d""e" ,f)") == std::vector<std::string>{"a", "b,c", "d\"e", "f"});
  CHECK(csv_field("x[B=1,N=2]") == "\"x[B=1,N=2]\"");
  CHECK(csv_field("plain") == "plain");
  CHECK_THROWS_AS(split_csv_line("\"open"), InvalidArgument);
}

TEST_CASE("SVG plot has one polyline per curve and a legend") {
  const ExperimentConfig cfg = parse_config(kSmall);
  const ExperimentResult r = run_experiment(cfg);
  PlotSpec spec;
  spec.title = "a < b";
  spec.metric = "param_error";
  const std::string svg = render_svg(std::span(&r, 1), spec);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("a &lt; b") != std::string::npos);
  auto count = [&](const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t p = svg.find(needle); p != std::string::npos; p = svg.find(needle, p + 1)) ++n;
    return n;
  };
  CHECK(count("<polyline") == 2);
  CHECK(count("class=\"legend\"") == 2);
  CHECK(svg.find("dmb[B=8,N=4,c=1.0]") != std::string::npos);
  spec.metric = "excess_risk";
  CHECK_THROWS_AS(render_svg(std::span(&r, 1), spec), InvalidArgument);
}

TEST_CASE("sweeps rename experiments and resize the graph") {
  const std::vector<std::string> mus = {"0", "100", "500"};
  const auto mu = sweep_configs(kSmall, {}, "desk", SweepAxis::discarded, mus);
  REQUIRE(mu.size() == 3);
  CHECK(mu[0].name == "small[mu=0]");
  CHECK(mu[2].name == "small[mu=500]");
  CHECK(mu[2].curves[1].discarded.value == 500);

  const std::vector<std::string> ns = {"8", "16", "32"};
  const auto n = sweep_configs(kRing, {}, "desk", SweepAxis::nodes, ns);
  REQUIRE(n.size() == 3);
  CHECK(n[0].horizon == 64);
  CHECK(n[1].horizon == 256);
  CHECK(n[2].horizon == 1024);
  CHECK(n[2].topology->nodes == 32);
  CHECK_NOTHROW(validate_experiment(n[0]));
  // On 16 nodes one D-SGD iteration already needs more than N^2 samples.
  CHECK_THROWS_AS(validate_experiment(n[1]), ConfigError);

  const auto only = sweep_configs(kRing, {}, "desk", SweepAxis::step_scale, std::vector<std::string>{"3"}, "dsgd");
  CHECK(only[0].curves[0].schedule.base.c == 3.0);
  CHECK(only[0].curves[1].schedule.base.c == 1.0);
  CHECK_THROWS_AS(sweep_configs(kRing, {}, "desk", SweepAxis::rounds, std::vector<std::string>{"1"}, "nope"),
                  ConfigError);

  SweepAxis axis;
  CHECK(parse_sweep_axis("mu", axis));
  CHECK(axis == SweepAxis::discarded);
  CHECK_FALSE(parse_sweep_axis("T", axis));
}

TEST_CASE("a failing trial names itself") {
  const auto data = temp_path("short.csv");
  write_file_atomic(data, "1.0,2.0,1\n-1.0,0.5,-1\n0.3,0.3,1\n");
  const std::string text = "experiment: f\ntrials: 2\nhorizon: 10\nstream:\n  kind: file\n  dimension: 2\n  path: " +
                           data.string() +
                           "\nloss:\n  kind: logistic\nalgorithms:\n  a:\n    kind: dmb\n    B: 1\n    "
                           "schedule: {kind: inv_sqrt, c: 1}\n";
  const ExperimentConfig cfg = parse_config(text);
  try {
    run_experiment(cfg);
    FAIL("expected a trial error");
  } catch (const TrialError& e) {
    CHECK(e.trial() == 0);
    CHECK(std::string(e.what()).rfind("trial 0: ", 0) == 0);
  }
  std::filesystem::remove(data);
}
