#include "streamlearn/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "streamlearn/error.hpp"

namespace streamlearn {

namespace {
constexpr int kQuadraturePoints = 128;
}

NormalQuadrature NormalQuadrature::gauss_hermite(int points) {
  if (points < 1) throw InvalidArgument("quadrature needs at least one point");
  // Jacobi matrix of the probabilists' Hermite polynomials: off-diagonal sqrt(k).
  Matrix J = Matrix::Zero(points, points);
  for (int k = 1; k < points; ++k) {
    J(k, k - 1) = std::sqrt(static_cast<double>(k));
    J(k - 1, k) = J(k, k - 1);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(J);
  if (solver.info() != Eigen::Success) throw Error("quadrature eigen-decomposition failed");
  NormalQuadrature q;
  q.nodes.resize(static_cast<std::size_t>(points));
  q.weights.resize(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double v0 = solver.eigenvectors()(0, i);
    q.nodes[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    q.weights[static_cast<std::size_t>(i)] = v0 * v0;
  }
  return q;
}

const char* metric_name(Metric m) {
  switch (m) {
    case Metric::excess_risk: return "excess_risk";
    case Metric::param_error: return "param_error";
    case Metric::risk: return "risk";
  }
  return "?";
}

std::optional<Metric> parse_metric(const std::string& name) {
  if (name == "excess_risk") return Metric::excess_risk;
  if (name == "param_error") return Metric::param_error;
  if (name == "risk") return Metric::risk;
  return std::nullopt;
}

Evaluator::Evaluator(const LossModel& model, const StreamSource& stream, std::size_t holdout_size)
    : model_(model), kind_(stream.kind()), truth_(stream.truth()) {
  model_.validate();
  if (stream.dimension() != model.dimension)
    throw InvalidArgument("stream dimension " + std::to_string(stream.dimension()) +
                          " does not match loss dimension " + std::to_string(model.dimension));
  if (model.supervised() && !stream.labeled())
    throw InvalidArgument("supervised loss needs a labeled stream");
  const int d = model.dimension;

  if (kind_ == StreamKind::file) {
    const auto recs = stream.records();
    holdout_.assign(recs.begin(), recs.end());
    if (model.kind == LossKind::pca) {
      empirical_cov_ = Matrix::Zero(d, d);
      for (const Sample& s : holdout_) empirical_cov_.noalias() += s.x * s.x.transpose();
      empirical_cov_ /= static_cast<double>(holdout_.size());
      Eigen::SelfAdjointEigenSolver<Matrix> solver(empirical_cov_);
      empirical_top_ = solver.eigenvalues()[d - 1];
      optimum_ = solver.eigenvectors().col(d - 1);
    }
    return;
  }

  if (holdout_size > 0 && model.supervised())
    holdout_ = stream.draw_aux(RngDomain::holdout, holdout_size);

  switch (kind_) {
    case StreamKind::logistic_gaussian:
      if (model.kind == LossKind::logistic) {
        optimum_ = truth_.w_star;
        if (!holdout_.empty()) optimum_holdout_risk_ = estimate_risk(model_, *optimum_, holdout_);
      }
      break;
    case StreamKind::conditional_gaussian:
      if (model.kind == LossKind::logistic) {
        // Equal class priors and shared isotropic covariance: the Bayes
        // log-odds are linear, so the logistic model is well specified.
        const double s2 = truth_.class_variance;
        Vector w(d + 1);
        w.head(d) = (truth_.mean_pos - truth_.mean_neg) / s2;
        w[d] = -(truth_.mean_pos.squaredNorm() - truth_.mean_neg.squaredNorm()) / (2.0 * s2);
        optimum_ = w;
        quad_ = NormalQuadrature::gauss_hermite(kQuadraturePoints);
        optimum_risk_ = conditional_logistic_risk(w);
      }
      break;
    case StreamKind::gaussian_covariance:
      if (model.kind == LossKind::pca) optimum_ = truth_.basis.col(0);
      break;
    case StreamKind::file:
      break;
  }
}

bool Evaluator::available(Metric m) const {
  switch (m) {
    case Metric::excess_risk:
      if (model_.kind == LossKind::pca)
        return kind_ == StreamKind::gaussian_covariance || kind_ == StreamKind::file;
      if (model_.kind != LossKind::logistic) return false;
      if (kind_ == StreamKind::conditional_gaussian) return true;
      return kind_ == StreamKind::logistic_gaussian && !holdout_.empty();
    case Metric::param_error:
      return optimum_.has_value() && kind_ != StreamKind::file;
    case Metric::risk:
      return !holdout_.empty() || (kind_ == StreamKind::conditional_gaussian && model_.kind == LossKind::logistic);
  }
  return false;
}

double Evaluator::evaluate(Metric m, const VectorRef& w) const {
  if (!available(m)) throw InvalidArgument(std::string("metric ") + metric_name(m) + " is not available for this stream");
  switch (m) {
    case Metric::excess_risk: return excess_risk(w);
    case Metric::param_error: return param_error(w);
    case Metric::risk: return risk(w);
  }
  return 0;
}

double Evaluator::conditional_logistic_risk(const VectorRef& w) const {
  const int d = model_.dimension;
  const double scale = std::sqrt(truth_.class_variance) * w.head(d).norm();
  const double m_pos = w.head(d).dot(truth_.mean_pos) + w[d];
  const double m_neg = w.head(d).dot(truth_.mean_neg) + w[d];
  // Given y, w^T[x;1] ~ N(m_y, scale^2); the loss is softplus(-y * that).
  const double pos = quad_.expect([&](double g) { return softplus(-(m_pos + scale * g)); });
  const double neg = quad_.expect([&](double g) { return softplus(m_neg + scale * g); });
  return 0.5 * (pos + neg);
}

double Evaluator::excess_risk(const VectorRef& w) const {
  if (model_.kind == LossKind::pca) {
    if (kind_ == StreamKind::file) return rayleigh_gap(empirical_cov_, empirical_top_, w);
    return pca_excess_risk(truth_.spectrum, truth_.basis, w);
  }
  if (kind_ == StreamKind::conditional_gaussian)
    return std::max(0.0, conditional_logistic_risk(w) - optimum_risk_);
  return estimate_risk(model_, w, holdout_) - optimum_holdout_risk_;
}

double Evaluator::param_error(const VectorRef& w) const {
  if (model_.kind == LossKind::pca) {
    const double n2 = w.squaredNorm();
    if (!(n2 > 0)) throw InvalidArgument("zero-norm model point");
    const double c = optimum_->dot(w);
    return std::max(0.0, 1.0 - c * c / n2);
  }
  return (w - *optimum_).squaredNorm();
}

double Evaluator::risk(const VectorRef& w) const {
  if (holdout_.empty()) return conditional_logistic_risk(w);
  return estimate_risk(model_, w, holdout_);
}

}  // namespace streamlearn
