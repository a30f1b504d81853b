#pragma once

#include <cstdint>
#include <string>

namespace streamlearn {

enum class StepKind { constant, inv_sqrt, inv_t, lan_optimal, dmb_theorem, krasulina, adsgd_pair };
enum class MomentumKind { none, half_t };

/// Stepsize sequence eta_t, t >= 1, plus the momentum sequence beta_t used
/// by accelerated methods.
///
///   constant     c
///   inv_sqrt     c / sqrt(t)
///   inv_t        c / t
///   lan_optimal  min(1/(2L), sqrt(D^2/(2T)))          (constant over the horizon T)
///   dmb_theorem  1 / (L + (sigma/D) sqrt(t))
///   krasulina    c / (Q + t)
///   adsgd_pair   c / (t+1)^{3/2}, with beta_t = max(1, t/2)
struct StepSchedule {
  StepKind kind = StepKind::inv_sqrt;
  double c = 1.0;
  double smoothness = 0;  // L
  double sigma = 0;
  double expanse = 0;     // D_W
  double offset = 0;      // Q
  std::int64_t horizon = 0;  // T
  MomentumKind momentum = MomentumKind::none;

  double eta(std::int64_t t) const;
  double beta(std::int64_t t) const;
  void validate() const;

  static StepSchedule adsgd(double c);
};

/// Offsets of the Krasulina schedule for failure probability delta:
/// Q1 = 64 e d kappa^4 max(1,c^2)/delta^2 ln(4/delta),
/// Q2 = 512 e^2 d^2 sigma_B^2 max(1,c^2)/delta^4 ln(4/delta).
struct KrasulinaOffsets {
  double q1 = 0;
  double q2 = 0;
};
KrasulinaOffsets krasulina_offsets(int dimension, double kappa, double sigma_b2, double c, double delta);

/// Krasulina schedule with c = c0 / (2 gap). Requires c0 > 2 and Q >= q1 + q2
/// when offsets are supplied.
StepSchedule krasulina_schedule(double c0, double gap, double offset,
                                const KrasulinaOffsets& required = {});

const char* step_kind_name(StepKind k);
bool parse_step_kind(const std::string& name, StepKind& out);

}  // namespace streamlearn
