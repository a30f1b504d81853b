#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace streamlearn {

/// Streaming, processing and messaging rates of a homogeneous N-node system.
/// Rates are per second; processing_rate is per node.
struct SystemRates {
  double streaming_rate = 0;   // R_s, samples/s
  double processing_rate = 0;  // R_p, samples/s/node
  double messaging_rate = 0;   // R_c, messages/s
  std::int64_t nodes = 1;      // N
  std::int64_t minibatch = 1;  // B, network-wide
  std::int64_t rounds = 1;     // R

  /// Throws InvalidArgument unless rates > 0, N >= 1, B a positive multiple
  /// of N and R >= 0 (R = 0 is allowed for communication-free baselines).
  void validate() const;
};

/// Mini-batches per second: (B/(N R_p) + R/R_c)^-1.
double effective_rate(const SystemRates& rates);

/// Wall time of one iteration, B/(N R_p) + R/R_c.
double iteration_seconds(const SystemRates& rates);

struct RoundsBudget {
  std::int64_t rounds = 0;
  bool feasible = false;  // false when R_s >= N R_p or no whole round fits
};

/// Largest R with B/(N R_p) + R/R_c <= B/R_s. The `rounds` field of the
/// input is ignored.
RoundsBudget max_rounds(const SystemRates& rates);

/// Samples dropped per iteration: max(0, ceil(R_s/R_e) - B).
std::int64_t discarded_per_iteration(const SystemRates& rates);

/// N R_c/R_s - 1/R_p. Not clamped; negative means no slack.
double mismatch_ratio(const SystemRates& rates);

/// Smallest messaging rate that fits R rounds per iteration without
/// discarding: N R R_s R_p / (B (N R_p - R_s)). Throws InfeasibleError when
/// N R_p <= R_s.
double min_comm_rate(const SystemRates& rates);

struct PlannerReport {
  std::int64_t minibatch = 0;
  std::int64_t rounds = 0;
  std::int64_t max_rounds = 0;
  double effective_rate = 0;
  double stream_to_effective = 0;  // R_s / R_e
  std::int64_t discarded = 0;
  double rho = 0;
  bool feasible = false;  // R_s / R_e <= B and, if rounds came from the budget, budget >= 1
};

PlannerReport plan(const SystemRates& rates);

enum class RoundsPolicy { max_rounds, fixed };

/// One PlannerReport per B. With RoundsPolicy::max_rounds each row uses the
/// rounds budget for its B (rows with a zero budget are infeasible); with
/// RoundsPolicy::fixed the template's R is used throughout.
std::vector<PlannerReport> rate_ratio_sweep(const SystemRates& rates_template,
                                            std::span<const std::int64_t> minibatches,
                                            RoundsPolicy policy);

enum class Variant { standard, accelerated };

/// Inputs of the gradient-noise moment formulas for consensus-based SGD.
struct BoundEvaluator {
  double lambda2 = 0;
  double sigma2 = 0;
  double smoothness = 0;  // L
  double expanse = 0;     // D_W
  std::int64_t minibatch = 1;
  std::int64_t nodes = 1;
  std::int64_t rounds = 1;
  std::int64_t t = 1;
  double eta = 0;

  void validate() const;
};

struct NoiseMoments {
  double delta2 = 0;  // second moment of the consensus-averaged gradient noise
  double xi = 0;      // first moment of the consensus error
};

NoiseMoments dsgd_noise_moments(const BoundEvaluator& be, Variant variant = Variant::standard);

/// Excess-risk bounds at iteration t built from the moments above, exactly
/// as stated with unit-free constants:
/// standard    2L/t + sqrt(4 Delta^2/t) + sqrt(1/2) Xi D/L,
/// accelerated 8L/t^2 + 4 sqrt(4 Delta^2/t) + sqrt(32) Xi.
double dsgd_risk_bound(const BoundEvaluator& be, Variant variant = Variant::standard);

/// Distributed mini-batch SGD error bound after t' samples with mu discards
/// per iteration: (B+mu) (2 D^2 L/t' + 2 D sigma/sqrt(t')).
double dmb_risk_bound(double smoothness, double sigma, double expanse, std::int64_t minibatch,
                      std::int64_t discarded, double t_prime);

struct ConditionCheck {
  std::string name;
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

struct ScalingReport {
  double rho = 0;
  std::vector<ConditionCheck> conditions;
  bool all_pass() const;
};

/// Order conditions for near-optimal consensus-based SGD with every hidden
/// constant set to 1. Conditions are soft diagnostics; nothing throws for a
/// failed condition. lambda2 = 0 collapses the log ratio to 0.
ScalingReport check_scaling_conditions(const SystemRates& rates, double lambda2, double sigma,
                                       double t_prime, Variant variant = Variant::standard);

}  // namespace streamlearn
