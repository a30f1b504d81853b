#include "streamlearn/rates.hpp"

#include <cmath>
#include <limits>

#include "streamlearn/error.hpp"

namespace streamlearn {

namespace {

// Guards integer rounding of quantities that are exact integers in real
// arithmetic but land a few ulps off in floating point.
constexpr double kRoundingSlack = 1e-12;

std::int64_t floor_tolerant(double x) {
  return static_cast<std::int64_t>(std::floor(x + std::abs(x) * kRoundingSlack));
}

std::int64_t ceil_tolerant(double x) {
  return static_cast<std::int64_t>(std::ceil(x - std::abs(x) * kRoundingSlack));
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0; }

}  // namespace

void SystemRates::validate() const {
  if (!positive_finite(streaming_rate)) throw InvalidArgument("streaming rate must be positive");
  if (!positive_finite(processing_rate)) throw InvalidArgument("processing rate must be positive");
  if (!(messaging_rate > 0)) throw InvalidArgument("messaging rate must be positive");
  if (nodes < 1) throw InvalidArgument("node count must be at least 1");
  if (minibatch < 1) throw InvalidArgument("mini-batch size must be at least 1");
  if (minibatch % nodes != 0)
    throw InvalidArgument("mini-batch size " + std::to_string(minibatch) +
                          " is not a multiple of the node count " + std::to_string(nodes));
  if (rounds < 0) throw InvalidArgument("rounds must be non-negative");
}

double iteration_seconds(const SystemRates& r) {
  r.validate();
  const double compute = static_cast<double>(r.minibatch) /
                         (static_cast<double>(r.nodes) * r.processing_rate);
  return compute + static_cast<double>(r.rounds) / r.messaging_rate;
}

double effective_rate(const SystemRates& r) { return 1.0 / iteration_seconds(r); }

RoundsBudget max_rounds(const SystemRates& r) {
  SystemRates probe = r;
  probe.rounds = 1;
  probe.validate();
  const double B = static_cast<double>(r.minibatch);
  const double N = static_cast<double>(r.nodes);
  if (r.streaming_rate >= N * r.processing_rate) return {0, false};
  // B R_c (1/R_s - 1/(N R_p)), expanded so exact cases stay exact.
  const double slack = B * r.messaging_rate / r.streaming_rate -
                       B * r.messaging_rate / (N * r.processing_rate);
  if (!(slack > 0)) return {0, false};
  const std::int64_t rounds = floor_tolerant(slack);
  return {rounds, rounds > 0};
}

std::int64_t discarded_per_iteration(const SystemRates& r) {
  r.validate();
  const double B = static_cast<double>(r.minibatch);
  const double N = static_cast<double>(r.nodes);
  // R_s / R_e = R_s B/(N R_p) + R_s R/R_c
  const double ratio = r.streaming_rate * B / (N * r.processing_rate) +
                       r.streaming_rate * static_cast<double>(r.rounds) / r.messaging_rate;
  const std::int64_t needed = ceil_tolerant(ratio);
  return needed > r.minibatch ? needed - r.minibatch : 0;
}

double mismatch_ratio(const SystemRates& r) {
  r.validate();
  return static_cast<double>(r.nodes) * r.messaging_rate / r.streaming_rate -
         1.0 / r.processing_rate;
}

double min_comm_rate(const SystemRates& r) {
  r.validate();
  const double N = static_cast<double>(r.nodes);
  const double slack = N * r.processing_rate - r.streaming_rate;
  if (!(slack > 0))
    throw InfeasibleError("streaming rate reaches the aggregate processing rate; no messaging rate suffices");
  return N * static_cast<double>(r.rounds) * r.streaming_rate * r.processing_rate /
         (static_cast<double>(r.minibatch) * slack);
}

PlannerReport plan(const SystemRates& r) {
  PlannerReport out;
  out.minibatch = r.minibatch;
  out.rounds = r.rounds;
  out.max_rounds = max_rounds(r).rounds;
  out.effective_rate = effective_rate(r);
  const double B = static_cast<double>(r.minibatch);
  const double N = static_cast<double>(r.nodes);
  out.stream_to_effective = r.streaming_rate * B / (N * r.processing_rate) +
                            r.streaming_rate * static_cast<double>(r.rounds) / r.messaging_rate;
  out.discarded = discarded_per_iteration(r);
  out.rho = mismatch_ratio(r);
  out.feasible = out.discarded == 0;
  return out;
}

std::vector<PlannerReport> rate_ratio_sweep(const SystemRates& tmpl,
                                            std::span<const std::int64_t> minibatches,
                                            RoundsPolicy policy) {
  std::vector<PlannerReport> rows;
  rows.reserve(minibatches.size());
  for (std::int64_t b : minibatches) {
    SystemRates r = tmpl;
    r.minibatch = b;
    if (policy == RoundsPolicy::max_rounds) {
      const RoundsBudget budget = max_rounds(r);
      if (!budget.feasible) {
        // No whole round fits: report the one-round configuration as infeasible.
        r.rounds = 1;
        PlannerReport row = plan(r);
        row.rounds = 0;
        row.max_rounds = 0;
        row.feasible = false;
        rows.push_back(row);
        continue;
      }
      r.rounds = budget.rounds;
    }
    rows.push_back(plan(r));
  }
  return rows;
}

void BoundEvaluator::validate() const {
  if (!(lambda2 >= 0 && lambda2 < 1)) throw InvalidArgument("lambda2 must lie in [0, 1)");
  if (sigma2 < 0 || smoothness < 0 || expanse < 0 || eta < 0)
    throw InvalidArgument("bound inputs must be non-negative");
  if (minibatch < 1 || nodes < 1 || rounds < 0 || t < 0)
    throw InvalidArgument("bound counts out of range");
  if (minibatch % nodes != 0) throw InvalidArgument("mini-batch size must be a multiple of N");
}

NoiseMoments dsgd_noise_moments(const BoundEvaluator& be, Variant variant) {
  be.validate();
  const double N = static_cast<double>(be.nodes);
  const double B = static_cast<double>(be.minibatch);
  const double local = B / N;
  const double t = static_cast<double>(be.t);
  const double lr = std::pow(be.lambda2, static_cast<double>(be.rounds));  // lambda2^R
  const double sigma = std::sqrt(be.sigma2);
  NoiseMoments m;
  if (variant == Variant::standard) {
    const double growth = std::expm1(t * std::log1p(N * N * lr));  // (1 + x)^t - 1
    m.delta2 = 4.0 * be.sigma2 / B +
               2.0 * (be.sigma2 / local) * (1.0 + N * N * N * N * lr * lr) * growth * growth +
               4.0 * lr * lr * be.sigma2 * N * N * N / B;
    m.xi = (sigma / std::sqrt(local)) * (1.0 + N * N * lr) * growth;
  } else {
    const double growth = std::expm1(t * std::log1p(2.0 * be.eta * N * N * be.smoothness * lr));
    m.delta2 = 2.0 * (be.sigma2 / local) * growth * growth +
               (4.0 * be.sigma2 / local) * (lr * lr * N * N + 1.0 / N);
    m.xi = (sigma / std::sqrt(local)) * (1.0 + B * B * lr) * growth;
  }
  return m;
}

double dsgd_risk_bound(const BoundEvaluator& be, Variant variant) {
  const NoiseMoments m = dsgd_noise_moments(be, variant);
  const double t = static_cast<double>(be.t);
  if (!(t > 0)) throw InvalidArgument("risk bound needs t >= 1");
  const double L = be.smoothness;
  if (variant == Variant::standard) {
    if (!(L > 0)) throw InvalidArgument("risk bound needs L > 0");
    return 2.0 * L / t + std::sqrt(4.0 * m.delta2 / t) + std::sqrt(0.5) * m.xi * be.expanse / L;
  }
  return 8.0 * L / (t * t) + 4.0 * std::sqrt(4.0 * m.delta2 / t) + std::sqrt(32.0) * m.xi;
}

double dmb_risk_bound(double smoothness, double sigma, double expanse, std::int64_t minibatch,
                      std::int64_t discarded, double t_prime) {
  if (!(t_prime > 0)) throw InvalidArgument("t' must be positive");
  const double D = expanse;
  return static_cast<double>(minibatch + discarded) *
         (2.0 * D * D * smoothness / t_prime + 2.0 * D * sigma / std::sqrt(t_prime));
}

bool ScalingReport::all_pass() const {
  for (const auto& c : conditions)
    if (!c.pass) return false;
  return true;
}

ScalingReport check_scaling_conditions(const SystemRates& r, double lambda2, double sigma,
                                       double t_prime, Variant variant) {
  if (!(t_prime >= 1)) throw InvalidArgument("t' must be at least 1");
  if (!(sigma > 0)) throw InvalidArgument("sigma must be positive");
  if (!(lambda2 >= 0 && lambda2 < 1)) throw InvalidArgument("lambda2 must lie in [0, 1)");
  ScalingReport rep;
  rep.rho = mismatch_ratio(r);
  const double N = static_cast<double>(r.nodes);
  const double local = static_cast<double>(r.minibatch) / N;
  const bool accel = variant == Variant::accelerated;
  // log(t')/log(1/lambda2); lambda2 = 0 sends the denominator to infinity.
  const double log_ratio = lambda2 > 0 ? std::log(t_prime) / std::log(1.0 / lambda2) : 0.0;

  ConditionCheck lower{"local batch lower bound", local, 0, false};
  if (log_ratio == 0) {
    lower.rhs = 1.0;
    lower.pass = local >= 1.0;
  } else if (rep.rho > 0) {
    lower.rhs = 1.0 + log_ratio / rep.rho;
    lower.pass = local >= lower.rhs;
  } else {
    lower.rhs = std::numeric_limits<double>::infinity();
    lower.pass = false;
  }
  rep.conditions.push_back(lower);

  ConditionCheck upper{"local batch upper bound", local, 0, false};
  upper.rhs = accel ? std::sqrt(sigma) * std::pow(t_prime, 0.75) / N : sigma * std::sqrt(t_prime) / N;
  upper.pass = local <= upper.rhs;
  rep.conditions.push_back(upper);

  ConditionCheck comm{"messaging rate lower bound", r.messaging_rate, 0, false};
  const double growth = accel ? std::pow(t_prime, 0.75) : std::sqrt(t_prime);
  comm.rhs = r.streaming_rate * log_ratio / (sigma * growth) +
             r.streaming_rate / (r.processing_rate * N);
  comm.pass = r.messaging_rate >= comm.rhs;
  rep.conditions.push_back(comm);

  ConditionCheck horizon{"horizon lower bound", t_prime, 0, false};
  horizon.rhs = (accel ? std::pow(N, 4.0 / 3.0) : N * N) / (sigma * sigma);
  horizon.pass = t_prime >= horizon.rhs;
  rep.conditions.push_back(horizon);
  return rep;
}

}  // namespace streamlearn
