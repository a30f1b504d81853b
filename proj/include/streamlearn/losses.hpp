#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <vector>

namespace streamlearn {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// One stream record. Supervised records carry a label in {-1, +1};
/// unsupervised ones leave it at 0.
struct Sample {
  Vector x;
  int label = 0;
};

enum class LossKind { logistic, hinge, pca };

/// Loss family plus the constants the schedules and bounds need.
/// For supervised kinds the model carries an intercept as its last entry,
/// so model_dimension() = d + 1.
struct LossModel {
  LossKind kind = LossKind::logistic;
  int dimension = 1;                    // feature dimension d
  std::optional<double> smoothness;     // L
  double noise_variance = 0;            // sigma^2
  std::optional<double> data_bound;     // kappa
  std::optional<double> expanse;        // D_W, radius of the feasible ball

  int model_dimension() const { return kind == LossKind::pca ? dimension : dimension + 1; }
  bool supervised() const { return kind != LossKind::pca; }
  void validate() const;
};

/// Eigenvalues of a covariance, sorted nonincreasing.
struct SpectrumSpec {
  std::vector<double> eigenvalues;

  double gap() const;
  void validate() const;  // sorted, nonnegative, gap > 0
  /// lambda_1 = top, lambda_2 = top - gap, then linear decay to `last`.
  static SpectrumSpec linear(int dimension, double top = 1.0, double gap = 0.1, double last = 0.1);
};

using VectorRef = Eigen::Ref<const Vector>;

/// w^T [x; 1] for supervised models.
double margin_input(const VectorRef& w, const Sample& z);

double loss(const LossModel& model, const VectorRef& w, const Sample& z);

/// Gradient (hinge: subgradient, 0 at margin exactly 1). For the pca kind
/// this returns the negated Krasulina direction so that w - eta * g is the
/// Krasulina update.
Vector gradient(const LossModel& model, const VectorRef& w, const Sample& z);

/// out += scale * gradient(model, w, z), without temporaries.
void add_gradient(const LossModel& model, const VectorRef& w, const Sample& z, double scale,
                  Eigen::Ref<Vector> out);

/// xi = z (z^T w) - ((w^T z)^2 / ||w||^2) w. Orthogonal to w.
Vector krasulina_direction(const VectorRef& w, const VectorRef& z);

/// out += scale * krasulina_direction(w, z).
void add_krasulina_direction(const VectorRef& w, const VectorRef& z, double scale,
                             Eigen::Ref<Vector> out);

/// Euclidean projection onto the ball of radius D_W; identity when the
/// model has no expanse.
Vector project(const LossModel& model, const VectorRef& w);
void project_in_place(const LossModel& model, Eigen::Ref<Vector> w);

/// lambda_1 - w^T Sigma w / ||w||^2 with Sigma = basis diag(lambda) basis^T.
double pca_excess_risk(const SpectrumSpec& spec, const Matrix& basis, const VectorRef& w);

/// lambda_max(C) - w^T C w / ||w||^2 for an arbitrary symmetric C.
double rayleigh_gap(const Matrix& covariance, double top_eigenvalue, const VectorRef& w);

/// Mean loss over a holdout set.
double estimate_risk(const LossModel& model, const VectorRef& w, std::span<const Sample> holdout);

/// Trace of the gradient covariance at w, from a sample set.
double estimate_gradient_noise(const LossModel& model, const VectorRef& w,
                               std::span<const Sample> samples);

/// Smoothness bound of the logistic loss, max ||[x; 1]||^2 / 4.
double estimate_logistic_smoothness(std::span<const Sample> samples);

/// Largest sample norm (unbounded data report this rather than a true bound).
double max_sample_norm(std::span<const Sample> samples);

/// Numerically stable ln(1 + exp(a)).
double softplus(double a);

}  // namespace streamlearn
