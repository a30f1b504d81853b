#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "streamlearn/losses.hpp"
#include "streamlearn/network.hpp"
#include "streamlearn/schedule.hpp"
#include "streamlearn/streams.hpp"

namespace streamlearn {

enum class AlgorithmKind {
  dmb,
  dm_krasulina,
  dsgd,
  adsgd,
  centralized,
  centralized_accelerated,
  local_sgd,
  local_asgd,
  dgd_naive,
  dgd_minibatch,
};

/// How a node combines its B/N local (pseudo-)gradients before averaging.
enum class Normalization { mean, sum };

/// Which iterate a run reports: the latest one or the stepsize-weighted average.
enum class ReportKind { last, averaged };

const char* algorithm_kind_name(AlgorithmKind k);
bool parse_algorithm_kind(const std::string& name, AlgorithmKind& out);

/// Default local-batch convention of each method's own listing: sums for
/// DM-Krasulina, means otherwise.
Normalization default_normalization(AlgorithmKind k);
/// Averaged iterates for SGD-with-averaging methods, last iterate otherwise.
ReportKind default_report(AlgorithmKind k);
bool uses_network(AlgorithmKind k);
bool is_accelerated(AlgorithmKind k);

// ---- single-machine steps -------------------------------------------------

struct SgdState {
  Vector w;
  Vector averaged;
  double weight_sum = 0;
  std::int64_t t = 0;  // completed steps
};

SgdState make_sgd_state(const Vector& w0);

/// w <- project(w - eta_t g), then folds the new w into the average with
/// weight eta_t.
void centralized_sgd_step(SgdState& state, const VectorRef& g, const StepSchedule& schedule,
                          const LossModel& model);

struct AcceleratedState {
  Vector u;
  Vector v;
  Vector w;
  std::int64_t t = 0;  // completed steps
};

AcceleratedState make_accelerated_state(const Vector& w0);

/// Sets and returns u = beta^-1 v + (1 - beta^-1) w for the coming step.
const Vector& accelerated_query_point(AcceleratedState& state, const StepSchedule& schedule);

/// With g evaluated at state.u: v <- project(u - eta g); w <- beta^-1 v + (1 - beta^-1) w.
void accelerated_sgd_step(AcceleratedState& state, const VectorRef& g, const StepSchedule& schedule,
                          const LossModel& model);

// ---- simulated distributed runs ------------------------------------------

struct RunSpec {
  AlgorithmKind kind = AlgorithmKind::dmb;
  std::int64_t minibatch = 1;   // B
  std::int64_t nodes = 1;       // N
  std::int64_t rounds = 1;      // R, messages per iteration
  std::int64_t discarded = 0;   // mu
  std::int64_t iterations = 1;  // T
  StepSchedule schedule;
  Normalization normalization = Normalization::mean;
  ReportKind report = ReportKind::last;
  double streaming_rate = 1;    // clock of the centralized baselines
  double processing_rate = 1;
  double messaging_rate = 1;
  std::optional<Vector> initial;  // shared starting point, default 0

  void validate() const;
  /// Simulated seconds per iteration.
  double seconds_per_iteration() const;
};

struct Problem {
  const LossModel* loss = nullptr;
  const StreamSource* stream = nullptr;
  const NetworkModel* network = nullptr;  // needed when the run mixes over a graph
};

/// What a run exposes after each iteration. `iterates` holds one row per
/// distinct node iterate (a single row when all nodes agree by construction).
struct IterationView {
  std::int64_t t = 0;
  std::int64_t t_prime = 0;
  std::int64_t discarded_total = 0;
  double sim_seconds = 0;
  const NodeVectors* iterates = nullptr;
};

using IterationHook = std::function<void(const IterationView&)>;

/// Runs any algorithm kind for spec.iterations iterations.
void run_algorithm(const Problem& problem, const RunSpec& spec, const IterationHook& hook);

void run_dmb(const Problem& problem, const RunSpec& spec, const IterationHook& hook);
void run_dm_krasulina(const Problem& problem, const RunSpec& spec, const IterationHook& hook);
void run_dsgd(const Problem& problem, const RunSpec& spec, const IterationHook& hook);
void run_adsgd(const Problem& problem, const RunSpec& spec, const IterationHook& hook);
void run_baseline(const Problem& problem, const RunSpec& spec, const IterationHook& hook);

/// DGD batch sizing for mismatch rho: mini-batched uses B/N = ceil(1/rho)
/// with nothing discarded; naive uses B/N = 1 and drops the other
/// ceil(1/rho) - 1 samples per node. Both use one consensus round.
struct DgdPlan {
  std::int64_t minibatch = 0;
  std::int64_t discarded = 0;
};
DgdPlan dgd_plan(AlgorithmKind kind, std::int64_t nodes, double rho);

/// Local batch and rounds for consensus-based SGD on a graph:
/// B/N = max(1, round(scale log(t') / (rho log(1/lambda2)))), R = max(1, floor(rho B/N)).
struct ConsensusPlan {
  std::int64_t local_batch = 1;
  std::int64_t rounds = 1;
};
ConsensusPlan consensus_plan(double lambda2, double rho, double t_prime, double scale);

}  // namespace streamlearn
