#include "streamlearn/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "streamlearn/error.hpp"

namespace streamlearn {

double StepSchedule::eta(std::int64_t t) const {
  if (t < 1) throw InvalidArgument("stepsize index must be at least 1");
  const double tt = static_cast<double>(t);
  switch (kind) {
    case StepKind::constant: return c;
    case StepKind::inv_sqrt: return c / std::sqrt(tt);
    case StepKind::inv_t: return c / tt;
    case StepKind::lan_optimal:
      return std::min(1.0 / (2.0 * smoothness), std::sqrt(expanse * expanse / (2.0 * static_cast<double>(horizon))));
    case StepKind::dmb_theorem: return 1.0 / (smoothness + (sigma / expanse) * std::sqrt(tt));
    case StepKind::krasulina: return c / (offset + tt);
    case StepKind::adsgd_pair: return c / std::pow(tt + 1.0, 1.5);
  }
  throw InvalidArgument("unknown stepsize kind");
}

double StepSchedule::beta(std::int64_t t) const {
  if (t < 1) throw InvalidArgument("momentum index must be at least 1");
  if (momentum == MomentumKind::half_t)
    return std::max(1.0, static_cast<double>(t) / 2.0);
  return 1.0;
}

StepSchedule StepSchedule::adsgd(double c) {
  StepSchedule s;
  s.kind = StepKind::adsgd_pair;
  s.c = c;
  s.momentum = MomentumKind::half_t;
  return s;
}

void StepSchedule::validate() const {
  switch (kind) {
    case StepKind::constant:
    case StepKind::inv_sqrt:
    case StepKind::inv_t:
    case StepKind::adsgd_pair:
      if (!(c > 0)) throw InvalidArgument("stepsize scale c must be positive");
      break;
    case StepKind::krasulina:
      if (!(c > 0)) throw InvalidArgument("stepsize scale c must be positive");
      if (!(offset >= 0)) throw InvalidArgument("krasulina offset Q must be non-negative");
      break;
    case StepKind::lan_optimal:
      if (!(smoothness > 0) || !(expanse > 0) || horizon < 1)
        throw InvalidArgument("lan_optimal stepsize needs L > 0, D_W > 0 and a horizon");
      break;
    case StepKind::dmb_theorem:
      if (!(smoothness > 0) || !(expanse > 0) || !(sigma >= 0))
        throw InvalidArgument("dmb_theorem stepsize needs L > 0, D_W > 0 and sigma >= 0");
      break;
  }
}

KrasulinaOffsets krasulina_offsets(int dimension, double kappa, double sigma_b2, double c, double delta) {
  if (!(delta > 0 && delta < 1)) throw InvalidArgument("delta must lie in (0, 1)");
  const double d = static_cast<double>(dimension);
  const double e = std::numbers::e;
  const double m = std::max(1.0, c * c);
  const double log_term = std::log(4.0 / delta);
  KrasulinaOffsets q;
  q.q1 = 64.0 * e * d * std::pow(kappa, 4) * m / (delta * delta) * log_term;
  q.q2 = 512.0 * e * e * d * d * sigma_b2 * m / std::pow(delta, 4) * log_term;
  return q;
}

StepSchedule krasulina_schedule(double c0, double gap, double offset, const KrasulinaOffsets& required) {
  if (!(c0 > 2)) throw InvalidArgument("krasulina schedule needs c0 > 2");
  if (!(gap > 0)) throw InvalidArgument("krasulina schedule needs a positive eigengap");
  if (offset < required.q1 + required.q2)
    throw InvalidArgument("krasulina offset Q is below Q1 + Q2");
  StepSchedule s;
  s.kind = StepKind::krasulina;
  s.c = c0 / (2.0 * gap);
  s.offset = offset;
  return s;
}

const char* step_kind_name(StepKind k) {
  switch (k) {
    case StepKind::constant: return "constant";
    case StepKind::inv_sqrt: return "inv_sqrt";
    case StepKind::inv_t: return "inv_t";
    case StepKind::lan_optimal: return "lan_optimal";
    case StepKind::dmb_theorem: return "dmb_theorem";
    case StepKind::krasulina: return "krasulina";
    case StepKind::adsgd_pair: return "adsgd_pair";
  }
  return "?";
}

bool parse_step_kind(const std::string& name, StepKind& out) {
  for (StepKind k : {StepKind::constant, StepKind::inv_sqrt, StepKind::inv_t, StepKind::lan_optimal,
                     StepKind::dmb_theorem, StepKind::krasulina, StepKind::adsgd_pair}) {
    if (name == step_kind_name(k)) {
      out = k;
      return true;
    }
  }
  return false;
}

}  // namespace streamlearn
