#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "streamlearn/losses.hpp"
#include "streamlearn/streams.hpp"

namespace streamlearn {

/// Nodes and weights with sum_i weights[i] f(nodes[i]) ~ E f(g), g ~ N(0, 1).
struct NormalQuadrature {
  std::vector<double> nodes;
  std::vector<double> weights;

  /// Gauss-Hermite rule with `points` nodes (Golub-Welsch).
  static NormalQuadrature gauss_hermite(int points);
  template <class F>
  double expect(F&& f) const {
    double s = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(nodes[i]);
    return s;
  }
};

enum class Metric { excess_risk, param_error, risk };

const char* metric_name(Metric m);
std::optional<Metric> parse_metric(const std::string& name);

/// Quality measures of a model point against the stream's ground truth.
///
/// excess_risk: f(w) - f(w*). Exact (quadrature) for logistic loss on
///   conditional_gaussian streams, exact for pca on gaussian_covariance,
///   a Monte Carlo difference on a fixed holdout for logistic_gaussian, and
///   the Rayleigh gap against the empirical covariance for pca file streams.
/// param_error: ||w - w*||^2 for supervised synthetic streams; for pca, the
///   squared sine of the angle to the top eigenvector.
/// risk: mean loss on the holdout (synthetic) or on every record (file).
class Evaluator {
 public:
  Evaluator(const LossModel& model, const StreamSource& stream, std::size_t holdout_size);

  bool available(Metric m) const;
  double evaluate(Metric m, const VectorRef& w) const;

  /// Risk minimizer when it is known in closed form or by construction.
  const std::optional<Vector>& optimum() const { return optimum_; }

  /// Exact logistic risk for conditional_gaussian streams.
  double conditional_logistic_risk(const VectorRef& w) const;

 private:
  double excess_risk(const VectorRef& w) const;
  double param_error(const VectorRef& w) const;
  double risk(const VectorRef& w) const;

  LossModel model_;
  StreamKind kind_;
  GroundTruth truth_;
  std::optional<Vector> optimum_;
  std::vector<Sample> holdout_;
  double optimum_holdout_risk_ = 0;
  double optimum_risk_ = 0;
  NormalQuadrature quad_;
  Matrix empirical_cov_;
  double empirical_top_ = 0;
};

}  // namespace streamlearn
