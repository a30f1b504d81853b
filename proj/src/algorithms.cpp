#include "streamlearn/algorithms.hpp"

#include <algorithm>
#include <cmath>

#include "streamlearn/error.hpp"

namespace streamlearn {

namespace {

using RowMap = Eigen::Map<Vector>;

RowMap row_of(NodeVectors& m, Eigen::Index i) { return RowMap(m.row(i).data(), m.cols()); }
Eigen::Map<const Vector> row_of(const NodeVectors& m, Eigen::Index i) {
  return Eigen::Map<const Vector>(m.row(i).data(), m.cols());
}

// Pairwise (tree) sum of the rows of `work`, left in row 0 and divided by the
// row count. Destroys the other rows.
void reduce_mean_in_place(NodeVectors& work) {
  Eigen::Index live = work.rows();
  const Eigen::Index n = live;
  while (live > 1) {
    const Eigen::Index half = live / 2;
    for (Eigen::Index i = 0; i < half; ++i) work.row(i) = work.row(2 * i) + work.row(2 * i + 1);
    if (live % 2 == 1) work.row(half) = work.row(live - 1);
    live = half + live % 2;
  }
  work.row(0) /= static_cast<double>(n);
}

enum class Communication { exact, consensus, gossip_iterates, none };

struct Layout {
  Communication comm = Communication::exact;
  Eigen::Index groups = 1;     // nodes that draw samples
  Eigen::Index rows = 1;       // distinct iterates
  bool accelerated = false;
  bool centralized_clock = false;
};

Layout layout_for(const RunSpec& spec) {
  Layout l;
  const auto N = static_cast<Eigen::Index>(spec.nodes);
  switch (spec.kind) {
    case AlgorithmKind::dmb:
    case AlgorithmKind::dm_krasulina:
      l = {Communication::exact, N, 1, false, false};
      break;
    case AlgorithmKind::centralized:
      l = {Communication::exact, 1, 1, false, true};
      break;
    case AlgorithmKind::centralized_accelerated:
      l = {Communication::exact, 1, 1, true, true};
      break;
    case AlgorithmKind::dsgd:
      l = {Communication::consensus, N, N, false, false};
      break;
    case AlgorithmKind::adsgd:
      l = {Communication::consensus, N, N, true, false};
      break;
    case AlgorithmKind::local_sgd:
      l = {Communication::none, N, N, false, false};
      break;
    case AlgorithmKind::local_asgd:
      l = {Communication::none, N, N, true, false};
      break;
    case AlgorithmKind::dgd_naive:
    case AlgorithmKind::dgd_minibatch:
      l = {Communication::gossip_iterates, N, N, false, false};
      break;
  }
  return l;
}

class Simulation {
 public:
  Simulation(const Problem& problem, const RunSpec& spec)
      : loss_(*problem.loss), stream_(*problem.stream), net_(problem.network), spec_(spec),
        layout_(layout_for(spec)) {
    spec_.validate();
    loss_.validate();
    if (stream_.dimension() != loss_.dimension)
      throw InvalidArgument("stream dimension does not match the loss dimension");
    if (spec.kind == AlgorithmKind::dm_krasulina && loss_.kind != LossKind::pca)
      throw InvalidArgument("DM-Krasulina needs the pca loss");
    const bool mixes = layout_.comm == Communication::consensus || layout_.comm == Communication::gossip_iterates;
    if (mixes && spec.nodes > 1) {
      if (!net_) throw InvalidArgument(std::string(algorithm_kind_name(spec.kind)) + " needs a network");
      if (net_->nodes != spec.nodes)
        throw InvalidArgument("network has " + std::to_string(net_->nodes) + " nodes, run expects " +
                              std::to_string(spec.nodes));
    }
    p_ = loss_.model_dimension();
    Vector w0 = spec.initial ? *spec.initial : Vector::Zero(p_);
    if (w0.size() != p_) throw InvalidArgument("initial point has the wrong dimension");
    if (loss_.kind != LossKind::pca) project_in_place(loss_, w0);

    local_ = spec.minibatch / (layout_.centralized_clock ? 1 : spec.nodes);
    plan_ = SplitPlan{spec.minibatch, layout_.centralized_clock ? 1 : spec.nodes, spec.discarded};
    plan_.validate();
    scale_ = spec.normalization == Normalization::mean ? 1.0 / static_cast<double>(local_) : 1.0;

    W_ = w0.transpose().replicate(layout_.rows, 1);
    if (layout_.accelerated) {
      V_ = W_;
      U_ = W_;
    } else {
      Wav_ = NodeVectors::Zero(layout_.rows, p_);
    }
    G_.resize(layout_.groups, p_);
    per_iteration_ = spec_.seconds_per_iteration();
  }

  void run(const IterationHook& hook) {
    for (std::int64_t t = 1; t <= spec_.iterations; ++t) {
      step(t);
      if (hook) {
        IterationView view;
        view.t = t;
        view.t_prime = t * (spec_.minibatch + spec_.discarded);
        view.discarded_total = t * spec_.discarded;
        view.sim_seconds = static_cast<double>(t) * per_iteration_;
        view.iterates = reported();
        hook(view);
      }
    }
  }

 private:
  const NodeVectors* reported() const {
    if (layout_.accelerated || spec_.report == ReportKind::last) return &W_;
    return &Wav_;
  }

  // Local (pseudo-)gradients of every sampling group at its query point.
  void local_gradients(std::int64_t t, const NodeVectors& query) {
    G_.setZero();
    for (Eigen::Index n = 0; n < layout_.groups; ++n) {
      const Eigen::Index qrow = query.rows() == 1 ? 0 : n;
      const auto q = row_of(query, qrow);
      auto g = row_of(G_, n);
      for (std::int64_t b = 1; b <= local_; ++b) {
        const std::int64_t idx = b + n * local_ + (t - 1) * (spec_.minibatch + spec_.discarded);
        stream_.generate_into(idx, sample_);
        add_gradient(loss_, q, sample_, scale_, g);
      }
    }
  }

  // Turns G_ into the per-row directions H_ the update uses.
  void communicate() {
    switch (layout_.comm) {
      case Communication::exact:
        reduce_mean_in_place(G_);
        H_ = G_.topRows(1);
        return;
      case Communication::consensus:
        H_ = G_;
        if (net_ && spec_.nodes > 1)
          for (std::int64_t r = 0; r < spec_.rounds; ++r) H_ = net_->weights * H_;
        return;
      case Communication::gossip_iterates:
      case Communication::none:
        H_ = G_;
        return;
    }
  }

  void step(std::int64_t t) {
    const double eta = spec_.schedule.eta(t);
    if (layout_.accelerated) {
      const double inv_beta = 1.0 / spec_.schedule.beta(t);
      U_ = inv_beta * V_ + (1.0 - inv_beta) * W_;
      local_gradients(t, U_);
      communicate();
      V_ = U_ - eta * H_;
      for (Eigen::Index i = 0; i < V_.rows(); ++i) project_in_place(loss_, row_of(V_, i));
      W_ = inv_beta * V_ + (1.0 - inv_beta) * W_;
      return;
    }
    local_gradients(t, W_);
    communicate();
    if (layout_.comm == Communication::gossip_iterates && net_ && spec_.nodes > 1) {
      W_ = net_->weights * W_;
    }
    W_ -= eta * H_;
    for (Eigen::Index i = 0; i < W_.rows(); ++i) project_in_place(loss_, row_of(W_, i));
    weight_sum_ += eta;
    Wav_ += (eta / weight_sum_) * (W_ - Wav_);
  }

  const LossModel& loss_;
  const StreamSource& stream_;
  const NetworkModel* net_;
  RunSpec spec_;
  Layout layout_;
  Eigen::Index p_ = 0;
  std::int64_t local_ = 1;
  SplitPlan plan_;
  double scale_ = 1;
  double per_iteration_ = 0;
  double weight_sum_ = 0;
  NodeVectors W_, Wav_, U_, V_, G_, H_;
  Sample sample_;
};

void require_kind(const RunSpec& spec, std::initializer_list<AlgorithmKind> kinds, const char* runner) {
  for (AlgorithmKind k : kinds)
    if (spec.kind == k) return;
  throw InvalidArgument(std::string(runner) + " cannot run " + algorithm_kind_name(spec.kind));
}

}  // namespace

const char* algorithm_kind_name(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::dmb: return "dmb";
    case AlgorithmKind::dm_krasulina: return "dm_krasulina";
    case AlgorithmKind::dsgd: return "dsgd";
    case AlgorithmKind::adsgd: return "adsgd";
    case AlgorithmKind::centralized: return "centralized";
    case AlgorithmKind::centralized_accelerated: return "centralized_accelerated";
    case AlgorithmKind::local_sgd: return "local_sgd";
    case AlgorithmKind::local_asgd: return "local_asgd";
    case AlgorithmKind::dgd_naive: return "dgd_naive";
    case AlgorithmKind::dgd_minibatch: return "dgd_minibatch";
  }
  return "?";
}

bool parse_algorithm_kind(const std::string& name, AlgorithmKind& out) {
  for (AlgorithmKind k :
       {AlgorithmKind::dmb, AlgorithmKind::dm_krasulina, AlgorithmKind::dsgd, AlgorithmKind::adsgd,
        AlgorithmKind::centralized, AlgorithmKind::centralized_accelerated, AlgorithmKind::local_sgd,
        AlgorithmKind::local_asgd, AlgorithmKind::dgd_naive, AlgorithmKind::dgd_minibatch}) {
    if (name == algorithm_kind_name(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

Normalization default_normalization(AlgorithmKind k) {
  return k == AlgorithmKind::dm_krasulina ? Normalization::sum : Normalization::mean;
}

ReportKind default_report(AlgorithmKind k) {
  switch (k) {
    case AlgorithmKind::dsgd:
    case AlgorithmKind::centralized:
    case AlgorithmKind::local_sgd:
      return ReportKind::averaged;
    default:
      return ReportKind::last;
  }
}

bool uses_network(AlgorithmKind k) {
  return k == AlgorithmKind::dsgd || k == AlgorithmKind::adsgd || k == AlgorithmKind::dgd_naive ||
         k == AlgorithmKind::dgd_minibatch;
}

bool is_accelerated(AlgorithmKind k) {
  return k == AlgorithmKind::adsgd || k == AlgorithmKind::centralized_accelerated ||
         k == AlgorithmKind::local_asgd;
}

SgdState make_sgd_state(const Vector& w0) {
  SgdState s;
  s.w = w0;
  s.averaged = Vector::Zero(w0.size());
  return s;
}

void centralized_sgd_step(SgdState& state, const VectorRef& g, const StepSchedule& schedule,
                          const LossModel& model) {
  if (g.size() != state.w.size()) throw InvalidArgument("gradient has the wrong dimension");
  const std::int64_t t = state.t + 1;
  const double eta = schedule.eta(t);
  state.w -= eta * g;
  project_in_place(model, state.w);
  state.weight_sum += eta;
  state.averaged += (eta / state.weight_sum) * (state.w - state.averaged);
  state.t = t;
}

AcceleratedState make_accelerated_state(const Vector& w0) {
  AcceleratedState s;
  s.u = w0;
  s.v = w0;
  s.w = w0;
  return s;
}

const Vector& accelerated_query_point(AcceleratedState& state, const StepSchedule& schedule) {
  const double beta = schedule.beta(state.t + 1);
  if (!(beta >= 1)) throw InvalidArgument("momentum beta_t must be at least 1");
  const double inv_beta = 1.0 / beta;
  state.u = inv_beta * state.v + (1.0 - inv_beta) * state.w;
  return state.u;
}

void accelerated_sgd_step(AcceleratedState& state, const VectorRef& g, const StepSchedule& schedule,
                          const LossModel& model) {
  if (g.size() != state.u.size()) throw InvalidArgument("gradient has the wrong dimension");
  const std::int64_t t = state.t + 1;
  const double inv_beta = 1.0 / schedule.beta(t);
  state.v = state.u - schedule.eta(t) * g;
  project_in_place(model, state.v);
  state.w = inv_beta * state.v + (1.0 - inv_beta) * state.w;
  state.t = t;
}

void RunSpec::validate() const {
  if (nodes < 1) throw InvalidArgument("run needs at least one node");
  if (minibatch < 1) throw InvalidArgument("run needs a positive mini-batch");
  if (minibatch % nodes != 0)
    throw InvalidArgument("mini-batch size " + std::to_string(minibatch) +
                          " is not a multiple of the node count " + std::to_string(nodes));
  if (discarded < 0) throw InvalidArgument("discard count must be non-negative");
  if (iterations < 1) throw InvalidArgument("run needs at least one iteration");
  if (rounds < 0) throw InvalidArgument("rounds must be non-negative");
  if ((kind == AlgorithmKind::dmb || kind == AlgorithmKind::dm_krasulina) && rounds < 1)
    throw InfeasibleError("exact averaging needs at least one communication round per iteration");
  if ((kind == AlgorithmKind::local_sgd || kind == AlgorithmKind::local_asgd) && rounds != 0)
    throw InvalidArgument("local baselines do not communicate; rounds must be 0");
  if (!(processing_rate > 0) || !(messaging_rate > 0) || !(streaming_rate > 0))
    throw InvalidArgument("rates must be positive");
  schedule.validate();
}

double RunSpec::seconds_per_iteration() const {
  if (kind == AlgorithmKind::centralized || kind == AlgorithmKind::centralized_accelerated)
    return static_cast<double>(minibatch) / streaming_rate;
  return static_cast<double>(minibatch) / (static_cast<double>(nodes) * processing_rate) +
         static_cast<double>(rounds) / messaging_rate;
}

void run_algorithm(const Problem& problem, const RunSpec& spec, const IterationHook& hook) {
  if (!problem.loss || !problem.stream) throw InvalidArgument("problem needs a loss and a stream");
  Simulation sim(problem, spec);
  sim.run(hook);
}

void run_dmb(const Problem& problem, const RunSpec& spec, const IterationHook& hook) {
  require_kind(spec, {AlgorithmKind::dmb}, "run_dmb");
  run_algorithm(problem, spec, hook);
}

void run_dm_krasulina(const Problem& problem, const RunSpec& spec, const IterationHook& hook) {
  require_kind(spec, {AlgorithmKind::dm_krasulina}, "run_dm_krasulina");
  run_algorithm(problem, spec, hook);
}

void run_dsgd(const Problem& problem, const RunSpec& spec, const IterationHook& hook) {
  require_kind(spec, {AlgorithmKind::dsgd}, "run_dsgd");
  run_algorithm(problem, spec, hook);
}

void run_adsgd(const Problem& problem, const RunSpec& spec, const IterationHook& hook) {
  require_kind(spec, {AlgorithmKind::adsgd}, "run_adsgd");
  run_algorithm(problem, spec, hook);
}

void run_baseline(const Problem& problem, const RunSpec& spec, const IterationHook& hook) {
  require_kind(spec,
               {AlgorithmKind::centralized, AlgorithmKind::centralized_accelerated, AlgorithmKind::local_sgd,
                AlgorithmKind::local_asgd, AlgorithmKind::dgd_naive, AlgorithmKind::dgd_minibatch},
               "run_baseline");
  run_algorithm(problem, spec, hook);
}

DgdPlan dgd_plan(AlgorithmKind kind, std::int64_t nodes, double rho) {
  if (!(rho > 0)) throw InvalidArgument("DGD needs a positive mismatch ratio rho");
  if (nodes < 1) throw InvalidArgument("DGD needs at least one node");
  const auto per_round = static_cast<std::int64_t>(std::ceil(1.0 / rho - 1e-12));
  if (kind == AlgorithmKind::dgd_minibatch) return {nodes * per_round, 0};
  if (kind == AlgorithmKind::dgd_naive) return {nodes, nodes * (per_round - 1)};
  throw InvalidArgument("not a DGD variant");
}

ConsensusPlan consensus_plan(double lambda2, double rho, double t_prime, double scale) {
  if (!(rho > 0)) throw InvalidArgument("consensus plan needs a positive mismatch ratio rho");
  if (!(t_prime >= 1)) throw InvalidArgument("consensus plan needs t' >= 1");
  ConsensusPlan p;
  if (lambda2 > 0) {
    const double raw = scale * std::log(t_prime) / (rho * std::log(1.0 / lambda2));
    p.local_batch = std::max<std::int64_t>(1, std::llround(raw));
  }
  p.rounds = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(rho * static_cast<double>(p.local_batch) + 1e-12)));
  return p;
}

}  // namespace streamlearn
