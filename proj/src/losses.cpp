#include "streamlearn/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "streamlearn/error.hpp"

namespace streamlearn {

namespace {

void check_supervised(const LossModel& model, const VectorRef& w, const Sample& z) {
  if (z.x.size() != model.dimension || w.size() != model.dimension + 1)
    throw InvalidArgument("dimension mismatch: model d=" + std::to_string(model.dimension) +
                          ", sample " + std::to_string(z.x.size()) + ", w " +
                          std::to_string(w.size()));
  if (z.label != 1 && z.label != -1) throw InvalidArgument("supervised sample needs a label of -1 or +1");
}

void check_pca(const LossModel& model, const VectorRef& w, const Sample& z) {
  if (z.x.size() != model.dimension || w.size() != model.dimension)
    throw InvalidArgument("dimension mismatch for pca loss");
}

double squared_norm_nonzero(const VectorRef& w) {
  const double n2 = w.squaredNorm();
  if (!(n2 > 0)) throw InvalidArgument("zero-norm model point");
  return n2;
}

}  // namespace

double softplus(double a) {
  if (a > 0) return a + std::log1p(std::exp(-a));
  return std::log1p(std::exp(a));
}

void LossModel::validate() const {
  if (dimension < 1) throw InvalidArgument("loss dimension must be positive");
  if (smoothness && !(*smoothness > 0)) throw InvalidArgument("smoothness must be positive");
  if (!(noise_variance >= 0)) throw InvalidArgument("noise variance must be non-negative");
  if (data_bound && !(*data_bound > 0)) throw InvalidArgument("data bound must be positive");
  if (expanse && !(*expanse > 0)) throw InvalidArgument("expanse must be positive");
  if (kind == LossKind::pca && expanse)
    throw InvalidArgument("pca iterates are unconstrained; expanse must be absent");
}

double SpectrumSpec::gap() const {
  if (eigenvalues.size() < 2) return eigenvalues.empty() ? 0.0 : eigenvalues[0];
  return eigenvalues[0] - eigenvalues[1];
}

void SpectrumSpec::validate() const {
  if (eigenvalues.empty()) throw InvalidArgument("spectrum is empty");
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (!(eigenvalues[i] >= 0)) throw InvalidArgument("spectrum entries must be non-negative");
    if (i > 0 && eigenvalues[i] > eigenvalues[i - 1])
      throw InvalidArgument("spectrum must be sorted nonincreasing");
  }
  if (!(gap() > 0)) throw InvalidArgument("spectrum needs a positive eigengap");
}

SpectrumSpec SpectrumSpec::linear(int dimension, double top, double gap, double last) {
  if (dimension < 1) throw InvalidArgument("spectrum dimension must be positive");
  SpectrumSpec s;
  s.eigenvalues.resize(static_cast<std::size_t>(dimension));
  s.eigenvalues[0] = top;
  if (dimension == 1) return s;
  const double second = top - gap;
  if (dimension == 2) {
    s.eigenvalues[1] = second;
    return s;
  }
  for (int i = 1; i < dimension; ++i) {
    const double frac = static_cast<double>(i - 1) / static_cast<double>(dimension - 2);
    s.eigenvalues[static_cast<std::size_t>(i)] = second + (last - second) * frac;
  }
  return s;
}

double margin_input(const VectorRef& w, const Sample& z) {
  const Eigen::Index d = z.x.size();
  return w.head(d).dot(z.x) + w[d];
}

double loss(const LossModel& model, const VectorRef& w, const Sample& z) {
  switch (model.kind) {
    case LossKind::logistic: {
      check_supervised(model, w, z);
      return softplus(-static_cast<double>(z.label) * margin_input(w, z));
    }
    case LossKind::hinge: {
      check_supervised(model, w, z);
      return std::max(0.0, 1.0 - static_cast<double>(z.label) * margin_input(w, z));
    }
    case LossKind::pca: {
      check_pca(model, w, z);
      const double n2 = squared_norm_nonzero(w);
      const double p = w.dot(z.x);
      return -p * p / n2;
    }
  }
  throw InvalidArgument("unknown loss kind");
}

void add_gradient(const LossModel& model, const VectorRef& w, const Sample& z, double scale,
                  Eigen::Ref<Vector> out) {
  const Eigen::Index d = z.x.size();
  switch (model.kind) {
    case LossKind::logistic: {
      check_supervised(model, w, z);
      const double y = static_cast<double>(z.label);
      const double a = y * margin_input(w, z);
      // 1/(1+exp(a)), written to avoid overflow for large |a|.
      const double s = a > 0 ? std::exp(-a) / (1.0 + std::exp(-a)) : 1.0 / (1.0 + std::exp(a));
      const double c = -y * s * scale;
      out.head(d) += c * z.x;
      out[d] += c;
      return;
    }
    case LossKind::hinge: {
      check_supervised(model, w, z);
      const double y = static_cast<double>(z.label);
      if (1.0 - y * margin_input(w, z) > 0) {
        out.head(d) -= (y * scale) * z.x;
        out[d] -= y * scale;
      }
      return;
    }
    case LossKind::pca: {
      check_pca(model, w, z);
      add_krasulina_direction(w, z.x, -scale, out);
      return;
    }
  }
  throw InvalidArgument("unknown loss kind");
}

Vector gradient(const LossModel& model, const VectorRef& w, const Sample& z) {
  Vector g = Vector::Zero(w.size());
  add_gradient(model, w, z, 1.0, g);
  return g;
}

void add_krasulina_direction(const VectorRef& w, const VectorRef& z, double scale,
                             Eigen::Ref<Vector> out) {
  if (w.size() != z.size()) throw InvalidArgument("dimension mismatch for krasulina direction");
  const double n2 = squared_norm_nonzero(w);
  const double p = z.dot(w);
  out.noalias() += (scale * p) * z;
  out.noalias() -= (scale * p * p / n2) * w;
}

Vector krasulina_direction(const VectorRef& w, const VectorRef& z) {
  Vector xi = Vector::Zero(w.size());
  add_krasulina_direction(w, z, 1.0, xi);
  return xi;
}

void project_in_place(const LossModel& model, Eigen::Ref<Vector> w) {
  if (!model.expanse) return;
  const double n = w.norm();
  if (n > *model.expanse) w *= *model.expanse / n;
}

Vector project(const LossModel& model, const VectorRef& w) {
  Vector out = w;
  project_in_place(model, out);
  return out;
}

double pca_excess_risk(const SpectrumSpec& spec, const Matrix& basis, const VectorRef& w) {
  const auto d = static_cast<Eigen::Index>(spec.eigenvalues.size());
  if (basis.rows() != d || basis.cols() != d || w.size() != d)
    throw InvalidArgument("dimension mismatch in pca excess risk");
  squared_norm_nonzero(w);
  // Coordinates in the eigenbasis; the excess is a weighted sum of
  // nonnegative terms, so it never goes below zero through cancellation.
  const Vector c = basis.transpose() * w;
  const double top = spec.eigenvalues[0];
  double num = 0;
  double den = 0;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double c2 = c[i] * c[i];
    num += (top - spec.eigenvalues[static_cast<std::size_t>(i)]) * c2;
    den += c2;
  }
  if (!(den > 0)) throw InvalidArgument("zero-norm model point");
  return num / den;
}

double rayleigh_gap(const Matrix& covariance, double top_eigenvalue, const VectorRef& w) {
  if (covariance.rows() != w.size() || covariance.cols() != w.size())
    throw InvalidArgument("dimension mismatch in rayleigh quotient");
  const double n2 = squared_norm_nonzero(w);
  return std::max(0.0, top_eigenvalue - w.dot(covariance * w) / n2);
}

double estimate_risk(const LossModel& model, const VectorRef& w, std::span<const Sample> holdout) {
  if (holdout.empty()) throw InvalidArgument("holdout set is empty");
  double total = 0;
  for (const Sample& z : holdout) total += loss(model, w, z);
  return total / static_cast<double>(holdout.size());
}

double estimate_gradient_noise(const LossModel& model, const VectorRef& w,
                               std::span<const Sample> samples) {
  if (samples.size() < 2) throw InvalidArgument("need at least two samples to estimate noise");
  const Eigen::Index p = w.size();
  Vector mean = Vector::Zero(p);
  Vector g(p);
  double sum_sq = 0;
  for (const Sample& z : samples) {
    g.setZero();
    add_gradient(model, w, z, 1.0, g);
    mean += g;
    sum_sq += g.squaredNorm();
  }
  const double n = static_cast<double>(samples.size());
  mean /= n;
  return (sum_sq - n * mean.squaredNorm()) / (n - 1.0);
}

double estimate_logistic_smoothness(std::span<const Sample> samples) {
  double best = 0;
  for (const Sample& z : samples) best = std::max(best, z.x.squaredNorm() + 1.0);
  return best / 4.0;
}

double max_sample_norm(std::span<const Sample> samples) {
  double best = 0;
  for (const Sample& z : samples) best = std::max(best, z.x.norm());
  return best;
}

}  // namespace streamlearn
