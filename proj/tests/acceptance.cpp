// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "streamlearn/algorithms.hpp"
#include "streamlearn/harness.hpp"
#include "streamlearn/io.hpp"
#include "streamlearn/losses.hpp"
#include "streamlearn/network.hpp"
#include "streamlearn/rates.hpp"
#include "streamlearn/streams.hpp"

using namespace streamlearn;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(STREAMLEARN_SOURCE_DIR) / "configs";

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

double relative_gap(const VectorRef& a, const VectorRef& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

// Mean of `metric` at each curve's final checkpoint.
std::vector<double> final_means(const ExperimentResult& r, const std::string& metric) {
  std::vector<double> out(r.curves.size(), NAN);
  std::vector<std::int64_t> last(r.curves.size(), -1);
  for (const AggregateRow& row : r.rows) {
    if (row.metric != metric || row.t < last[row.curve]) continue;
    last[row.curve] = row.t;
    out[row.curve] = row.stats.mean;
  }
  return out;
}

std::string config_text(const std::string& name) { return read_text_file(kConfigs / (name + ".cfg")); }

// First runs of the bundled desk configs, shared with the determinism check.
std::map<std::string, std::string> g_first_csv;

ExperimentResult run_bundled(const std::string& name, int workers) {
  RunOptions opts;
  opts.workers = workers;
  ExperimentResult r = run_experiment(parse_config(config_text(name)), opts);
  if (workers == 1) g_first_csv[name] = format_csv(std::span(&r, 1));
  return r;
}

LossModel logistic(int d) {
  LossModel m;
  m.kind = LossKind::logistic;
  m.dimension = d;
  m.expanse = 10.0 * std::sqrt(static_cast<double>(d));
  return m;
}

StreamSpec stream_spec(StreamKind kind, int d, std::uint64_t seed) {
  StreamSpec s;
  s.kind = kind;
  s.dimension = d;
  s.seed = seed;
  return s;
}

// ---- 1 -------------------------------------------------------------------

Outcome exact_averaging() {
  Outcome o;
  const int d = 5;
  {
    const LossModel m = logistic(d);
    const StreamSource s(stream_spec(StreamKind::logistic_gaussian, d, 101));
    RunSpec spec;
    spec.kind = AlgorithmKind::dmb;
    spec.nodes = 4;
    spec.minibatch = 8;
    spec.iterations = 100;
    spec.schedule.kind = StepKind::inv_sqrt;
    spec.schedule.c = 1.0;
    SgdState ref = make_sgd_state(Vector::Zero(d + 1));
    double worst = 0;
    run_algorithm({&m, &s, nullptr}, spec, [&](const IterationView& v) {
      Vector g = Vector::Zero(d + 1);
      for (std::int64_t b = 1; b <= 8; ++b) g += gradient(m, ref.w, s.generate((v.t - 1) * 8 + b));
      centralized_sgd_step(ref, g / 8.0, spec.schedule, m);
      worst = std::max(worst, relative_gap(v.iterates->row(0).transpose(), ref.w));
    });
    o.require(worst <= 1e-10, "DMB vs mini-batch SGD deviation " + num(worst) + " > 1e-10");
    o.note("DMB max deviation " + num(worst));
  }
  {
    LossModel m;
    m.kind = LossKind::pca;
    m.dimension = 10;
    const StreamSource s(stream_spec(StreamKind::gaussian_covariance, 10, 102));
    std::mt19937_64 eng(103);
    std::normal_distribution<double> normal;
    Vector w(10);
    for (int i = 0; i < 10; ++i) w[i] = normal(eng);
    RunSpec spec;
    spec.kind = AlgorithmKind::dm_krasulina;
    spec.nodes = 4;
    spec.minibatch = 8;
    spec.iterations = 100;
    spec.normalization = default_normalization(AlgorithmKind::dm_krasulina);
    spec.schedule.kind = StepKind::inv_t;
    spec.schedule.c = 2.0;
    spec.initial = w;
    double worst = 0;
    // Centralized mini-batch Krasulina: w += eta (1/N) sum over the 8 samples of
    // (z z^T w - (w^T z)^2/|w|^2 w).
    run_algorithm({&m, &s, nullptr}, spec, [&](const IterationView& v) {
      Vector xi = Vector::Zero(10);
      for (std::int64_t b = 1; b <= 8; ++b) {
        const Vector z = s.generate((v.t - 1) * 8 + b).x;
        const double p = z.dot(w);
        xi += p * z - (p * p / w.squaredNorm()) * w;
      }
      w += spec.schedule.eta(v.t) * xi / 4.0;
      worst = std::max(worst, relative_gap(v.iterates->row(0).transpose(), w));
    });
    o.require(worst <= 1e-10, "DM-Krasulina vs mini-batch Krasulina deviation " + num(worst) + " > 1e-10");
    o.note("DM-Krasulina max deviation " + num(worst));
  }
  return o;
}

// ---- 2 -------------------------------------------------------------------

Outcome consensus_contraction() {
  Outcome o;
  TopologySpec ts;
  ts.kind = TopologyKind::ring;
  ts.nodes = 16;
  const NetworkModel ring = build_topology(ts);
  std::mt19937_64 eng(201);
  std::normal_distribution<double> normal;
  NodeVectors x(16, 8);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 8; ++j) x(i, j) = normal(eng);
  auto deviation = [](const NodeVectors& v) { return (v.rowwise() - v.colwise().mean()).norm(); };
  const NodeVectors x10 = consensus(ring, x, 10);
  const NodeVectors x11 = consensus_round(ring, x10);
  const double ratio = deviation(x11) / deviation(x10);
  const double rel = std::abs(ratio - ring.lambda2) / ring.lambda2;
  o.require(rel <= 0.05, "decay ratio " + num(ratio) + " vs lambda2 " + num(ring.lambda2));
  o.note("ring16 decay ratio " + num(ratio) + ", lambda2 " + num(ring.lambda2));

  ts.kind = TopologyKind::complete;
  ts.nodes = 4;
  ts.weights = WeightRule::uniform;
  const NetworkModel complete = build_topology(ts);
  const LossModel m = logistic(5);
  const StreamSource s(stream_spec(StreamKind::logistic_gaussian, 5, 202));
  RunSpec spec;
  spec.nodes = 4;
  spec.minibatch = 8;
  spec.rounds = 1;
  spec.iterations = 100;
  spec.schedule.kind = StepKind::inv_sqrt;
  spec.schedule.c = 1.0;
  spec.report = ReportKind::averaged;
  std::vector<Vector> dmb;
  spec.kind = AlgorithmKind::dmb;
  run_algorithm({&m, &s, nullptr}, spec, [&](const IterationView& v) { dmb.push_back(v.iterates->row(0).transpose()); });
  spec.kind = AlgorithmKind::dsgd;
  double worst = 0;
  run_algorithm({&m, &s, &complete}, spec, [&](const IterationView& v) {
    for (Eigen::Index n = 0; n < v.iterates->rows(); ++n)
      worst = std::max(worst, relative_gap(v.iterates->row(n).transpose(), dmb[static_cast<std::size_t>(v.t - 1)]));
  });
  o.require(worst <= 1e-10, "D-SGD vs DMB deviation " + num(worst));
  o.note("D-SGD vs DMB max deviation " + num(worst));
  return o;
}

// ---- 3 -------------------------------------------------------------------

// Per-B stepsizes as in the bundled config; B = 1e4 uses the same grid's winner.
Outcome minibatch_law() {
  Outcome o;
  const std::vector<std::string> set = {"algorithms.dmb.B=[1, 10, 100, 10000]", "algorithms.dmb.N=[1, 10, 10, 10]",
                                        "algorithms.dmb.schedule.c=[0.25, 1.0, 4.0, 8.0]", "horizon=100000",
                                        "trials=50"};
  const ExperimentResult r = run_experiment(parse_config(config_text("dmb_batch"), set));
  const auto e = final_means(r, "param_error");
  const double lo = std::min({e[0], e[1], e[2]});
  const double hi = std::max({e[0], e[1], e[2]});
  o.note("B=1 " + num(e[0]) + ", B=10 " + num(e[1]) + ", B=100 " + num(e[2]) + ", B=1e4 " + num(e[3]));
  o.require(hi <= 3 * lo, "B in {1,10,100} spread " + num(hi / lo) + "x > 3x");
  o.require(e[3] >= 5 * lo, "B=1e4 only " + num(e[3] / lo) + "x worse than the best");
  return o;
}

// ---- 4 -------------------------------------------------------------------

Outcome discard_robustness() {
  Outcome o;
  const std::vector<std::string> set = {"algorithms.dmb.mu=[0, 100, 500, 5000]", "trials=50"};
  const ExperimentResult r = run_experiment(parse_config(config_text("dmb_discard"), set));
  const auto e = final_means(r, "param_error");
  o.note("mu=0 " + num(e[0]) + ", mu=100 " + num(e[1]) + ", mu=500 " + num(e[2]) + ", mu=5000 " + num(e[3]));
  for (std::size_t i = 1; i < e.size(); ++i) o.require(e[i] >= e[i - 1], "error decreases between mu values");
  o.require(e[1] <= 2 * e[0], "mu=100 is " + num(e[1] / e[0]) + "x of mu=0");
  o.require(e[3] >= 3 * e[0], "mu=5000 is only " + num(e[3] / e[0]) + "x of mu=0");
  return o;
}

// ---- 5 -------------------------------------------------------------------

Outcome krasulina_law() {
  Outcome o;
  const ExperimentResult r = run_bundled("krasulina_batch", 1);
  const auto e = final_means(r, "excess_risk");
  if (e.size() != 4) {
    o.require(false, "expected 4 curves");
    return o;
  }
  const double lo = std::min({e[0], e[1], e[2]});
  const double hi = std::max({e[0], e[1], e[2]});
  o.note("B=1 " + num(e[0]) + ", B=10 " + num(e[1]) + ", B=100 " + num(e[2]) + ", B=1000 " + num(e[3]));
  o.require(hi <= 3 * lo, "B in {1,10,100} spread " + num(hi / lo) + "x > 3x");
  o.require(e[3] >= 5 * lo, "B=1000 only " + num(e[3] / lo) + "x worse than the best");
  return o;
}

// ---- 6 -------------------------------------------------------------------

Outcome expander_ordering() {
  Outcome o;
  const ExperimentResult r = run_bundled("dsgd_expander", 1);
  const auto e = final_means(r, "excess_risk");
  std::map<std::string, double> by;
  for (std::size_t i = 0; i < r.curves.size(); ++i) by[r.curves[i].label] = e[i];
  for (const char* k : {"centralized", "centralized_accelerated", "dsgd", "adsgd", "local", "local_accelerated"})
    if (!by.count(k)) {
      o.require(false, std::string("missing curve ") + k);
      return o;
    }
  const double c = by["centralized"], d = by["dsgd"], a = by["adsgd"];
  const double local = std::min(by["local"], by["local_accelerated"]);
  o.note("centralized " + num(c) + ", dsgd " + num(d) + ", adsgd " + num(a) + ", local " + num(by["local"]) +
         ", local_accelerated " + num(by["local_accelerated"]) +
         ", centralized_accelerated " + num(by["centralized_accelerated"]));
  o.require(c <= std::min(d, a), "centralized above a distributed method");
  o.require(by["centralized_accelerated"] <= a, "centralized accelerated above AD-SGD");
  o.require(std::max(d, a) <= local, "a distributed method above the local baselines");
  o.require(d <= 2 * c, "D-SGD is " + num(d / c) + "x centralized");
  return o;
}

// ---- 7 -------------------------------------------------------------------

SystemRates rates(double rs, double rp, double rc, std::int64_t n, std::int64_t b, std::int64_t r) {
  SystemRates s;
  s.streaming_rate = rs;
  s.processing_rate = rp;
  s.messaging_rate = rc;
  s.nodes = n;
  s.minibatch = b;
  s.rounds = r;
  return s;
}

Outcome planner_exactness() {
  Outcome o;
  auto close = [&](double got, double want, const std::string& what) {
    o.require(std::abs(got - want) <= 1e-12 * std::abs(want), what + " = " + format_double(got));
  };
  close(effective_rate(rates(1e6, 1.25e5, 1e4, 10, 100, 5)), 50000.0 / 29.0, "R_e(B=100,R=5)");
  close(effective_rate(rates(1e6, 1.25e5, 1e3, 10, 500, 10)), 1250.0 / 13.0, "R_e(B=500,R=10)");
  const double no_comm = effective_rate(rates(1e6, 1.25e5, 1e12, 10, 10, 1));
  o.require(std::abs(no_comm - 1.25e5) <= 1e-6 * 1.25e5, "R_e in the communication-free limit");

  const RoundsBudget r1 = max_rounds(rates(1e6, 1.25e5, 1e3, 10, 10000, 1));
  o.require(r1.rounds == 2 && r1.feasible, "max_rounds(B=1e4) = " + std::to_string(r1.rounds));
  const RoundsBudget r2 = max_rounds(rates(1e5, 1.25e5, 1e4, 10, 500, 1));
  o.require(r2.rounds == 46 && r2.feasible, "max_rounds(B=500) = " + std::to_string(r2.rounds));
  const RoundsBudget r3 = max_rounds(rates(1.25e6, 1.25e5, 1e4, 10, 500, 1));
  o.require(r3.rounds == 0 && !r3.feasible, "max_rounds with zero slack");

  const std::int64_t mu1 = discarded_per_iteration(rates(1e6, 1.25e5, 1e4, 10, 100, 5));
  o.require(mu1 == 480, "mu(B=100) = " + std::to_string(mu1));
  const std::int64_t mu2 = discarded_per_iteration(rates(1e5, 1.25e5, 1e3, 10, 500, 10));
  o.require(mu2 == 540, "mu(B=500) = " + std::to_string(mu2));
  o.require(discarded_per_iteration(rates(1e3, 1.25e5, 1e4, 10, 100, 1)) == 0, "mu in the resourceful regime");

  close(min_comm_rate(rates(1e5, 1.25e5, 1, 10, 500, 9)), 45000.0 / 23.0, "min_comm_rate");
  close(mismatch_ratio(rates(1e6, 1.25e5, 1e4, 10, 10, 1)), 0.099992, "rho");
  const std::int64_t b1000[] = {1000};
  const auto row = rate_ratio_sweep(rates(1e6, 1.25e5, 1e3, 10, 10, 10), b1000, RoundsPolicy::fixed);
  close(row.at(0).stream_to_effective, 10800.0, "R_s/R_e(B=1000,R=10)");

  std::vector<std::int64_t> bs;
  for (int k = 0; k <= 16; ++k) bs.push_back(10LL << k);
  const auto sweep = rate_ratio_sweep(rates(1e6, 1.25e5, 1e4, 10, 10, 1), bs, RoundsPolicy::max_rounds);
  std::int64_t first = 0;
  for (const PlannerReport& p : sweep)
    if (p.feasible && first == 0) first = p.minibatch;
  o.require(first > 0, "no feasible B in the reference sweep");
  o.note("first feasible B " + std::to_string(first));
  return o;
}

// ---- 8 -------------------------------------------------------------------

Outcome invariant_suite() {
  Outcome o;
  std::mt19937_64 eng(801);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto vec = [&](int n, double scale) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = scale * normal(eng);
    return v;
  };
  auto sample = [&](int d) {
    Sample z;
    z.x = vec(d, 1.0);
    z.label = unit(eng) < 0.5 ? -1 : 1;
    return z;
  };

  // Logistic gradient vs central differences.
  double worst_fd = 0;
  for (int i = 0; i < 100; ++i) {
    const int d = 1 + static_cast<int>(unit(eng) * 10);
    const LossModel m = logistic(d);
    const Vector w = vec(d + 1, 1.0);
    const Sample z = sample(d);
    const Vector g = gradient(m, w, z);
    Vector fd(d + 1);
    const double h = 1e-6;
    for (int j = 0; j <= d; ++j) {
      Vector a = w, b = w;
      a[j] += h;
      b[j] -= h;
      fd[j] = (loss(m, a, z) - loss(m, b, z)) / (2 * h);
    }
    worst_fd = std::max(worst_fd, (g - fd).norm() / std::max(g.norm(), 1e-12));
  }
  o.require(worst_fd <= 1e-6, "finite differences off by " + num(worst_fd));

  // Convexity along segments, logistic and hinge.
  int convex_failures = 0;
  for (LossKind kind : {LossKind::logistic, LossKind::hinge}) {
    LossModel m = logistic(4);
    m.kind = kind;
    for (int i = 0; i < 1000; ++i) {
      const Vector w1 = vec(5, 2.0), w2 = vec(5, 2.0);
      const Sample z = sample(4);
      const double a = i % 2 == 0 ? 0.5 : unit(eng);
      const double lhs = loss(m, a * w1 + (1 - a) * w2, z);
      const double rhs = a * loss(m, w1, z) + (1 - a) * loss(m, w2, z);
      convex_failures += lhs > rhs + 1e-12;
    }
  }
  o.require(convex_failures == 0, std::to_string(convex_failures) + " convexity violations");

  // Krasulina directions are orthogonal to w.
  double worst_orth = 0;
  for (int i = 0; i < 1000; ++i) {
    const Vector w = vec(8, 1.0), z = vec(8, 1.0);
    const Vector xi = krasulina_direction(w, z);
    if (xi.norm() > 0) worst_orth = std::max(worst_orth, std::abs(w.dot(xi)) / (w.norm() * xi.norm()));
  }
  o.require(worst_orth <= 1e-10, "Krasulina |w'xi| ratio " + num(worst_orth));

  // DM-Krasulina iterate norms never decrease.
  {
    LossModel m;
    m.kind = LossKind::pca;
    m.dimension = 6;
    const StreamSource s(stream_spec(StreamKind::gaussian_covariance, 6, 802));
    RunSpec spec;
    spec.kind = AlgorithmKind::dm_krasulina;
    spec.nodes = 2;
    spec.minibatch = 4;
    spec.iterations = 500;
    spec.normalization = Normalization::sum;
    spec.schedule.kind = StepKind::inv_t;
    spec.schedule.c = 5.0;
    spec.initial = vec(6, 1.0);
    double prev = spec.initial->norm();
    bool monotone = true;
    run_algorithm({&m, &s, nullptr}, spec, [&](const IterationView& v) {
      const double n = v.iterates->row(0).norm();
      monotone &= n >= prev * (1 - 1e-12);
      prev = n;
    });
    o.require(monotone, "Krasulina iterate norm decreased");
  }

  // Mixing matrices: symmetric, doubly stochastic, mean preserving.
  double worst_ds = 0, worst_mean = 0;
  for (TopologyKind kind : {TopologyKind::star, TopologyKind::ring, TopologyKind::complete, TopologyKind::k_regular})
    for (WeightRule rule : {WeightRule::metropolis, WeightRule::uniform})
      for (int n : {4, 8, 16}) {
        TopologySpec ts;
        ts.kind = kind;
        ts.nodes = n;
        ts.degree = kind == TopologyKind::k_regular ? 3 : 0;
        ts.seed = 803;
        ts.weights = rule;
        const NetworkModel net = build_topology(ts);
        const Eigen::MatrixXd& W = net.weights;
        worst_ds = std::max({worst_ds, (W.rowwise().sum().array() - 1).abs().maxCoeff(),
                             (W.colwise().sum().array() - 1).abs().maxCoeff(), (W - W.transpose()).cwiseAbs().maxCoeff()});
        NodeVectors x(n, 3);
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < 3; ++j) x(i, j) = normal(eng);
        const NodeVectors y = consensus(net, x, 5);
        worst_mean = std::max(worst_mean, (y.colwise().mean() - x.colwise().mean()).cwiseAbs().maxCoeff());
      }
  o.require(worst_ds <= 1e-12, "mixing matrix off by " + num(worst_ds));
  o.require(worst_mean <= 1e-12, "consensus moved the mean by " + num(worst_mean));

  // Split mapping is a bijection onto the kept indices.
  bool bijective = true;
  for (std::int64_t n = 1; n <= 64; ++n)
    for (std::int64_t b = n; b <= 64; b += n)
      for (std::int64_t mu : {0, 3}) {
        const SplitPlan plan{b, n, mu};
        std::set<std::int64_t> seen, expected;
        for (std::int64_t t = 1; t <= 3; ++t) {
          for (std::int64_t node = 1; node <= n; ++node)
            for (std::int64_t k = 1; k <= b / n; ++k) bijective &= seen.insert(split(plan, t, node, k)).second;
          for (std::int64_t i = 1; i <= b; ++i) expected.insert((t - 1) * (b + mu) + i);
        }
        bijective &= seen == expected;
      }
  o.require(bijective, "split mapping is not a bijection");
  o.note("finite-difference error " + num(worst_fd) + ", orthogonality " + num(worst_orth) + ", stochasticity " +
         num(worst_ds));
  return o;
}

// ---- 9 -------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  for (const char* name : {"dmb_batch", "dmb_discard", "krasulina_batch", "krasulina_discard", "dsgd_expander"}) {
    if (!g_first_csv.count(name)) run_bundled(name, 1);
    const ExperimentResult again = run_bundled(name, 2);
    const bool same = format_csv(std::span(&again, 1)) == g_first_csv[name];
    o.require(same, std::string(name) + " differs between runs");
  }
  if (o.pass) o.note("5 bundled configs identical with 1 and 2 workers");
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0: no limit
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "exact-averaging equivalence", 1, exact_averaging},
      {2, "consensus spectral contraction", 1, consensus_contraction},
      {3, "DMB mini-batch law", 120, minibatch_law},
      {4, "DMB discard robustness", 120, discard_robustness},
      {5, "DM-Krasulina mini-batch law", 120, krasulina_law},
      {6, "D-SGD/AD-SGD ordering on an expander", 300, expander_ordering},
      {7, "planner exactness", 1, planner_exactness},
      {8, "numerical invariant suite", 30, invariant_suite},
      {9, "determinism of bundled configs", 0, determinism},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && seconds > c.budget_seconds)
      o.require(false, "runtime " + num(seconds) + " s over the " + num(c.budget_seconds) + " s budget");
    failures += !o.pass;
    std::printf("%s [%d] %s (%.2f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, seconds, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
