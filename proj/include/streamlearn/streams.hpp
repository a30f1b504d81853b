#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "streamlearn/losses.hpp"
#include "streamlearn/rng.hpp"

namespace streamlearn {

enum class StreamKind { logistic_gaussian, conditional_gaussian, gaussian_covariance, file };

struct FileFormat {
  bool header = false;        // skip the first line
  bool label_column = true;   // last column holds a -1/+1 label
};

struct StreamSpec {
  StreamKind kind = StreamKind::logistic_gaussian;
  int dimension = 1;
  std::uint64_t seed = 0;
  double class_variance = 2.0;                // sigma_x^2, conditional_gaussian
  std::optional<SpectrumSpec> spectrum;       // gaussian_covariance; default SpectrumSpec::linear
  std::filesystem::path path;                 // file
  FileFormat format;                          // file
};

/// The distribution behind a synthetic stream.
struct GroundTruth {
  Vector w_star;                     // logistic_gaussian: (w~*, w0*), length d+1
  Vector mean_neg;                   // conditional_gaussian: mu_{-1}
  Vector mean_pos;                   // conditional_gaussian: mu_{+1}
  double class_variance = 0;
  SpectrumSpec spectrum;             // gaussian_covariance
  Matrix basis;                      // orthonormal eigenvectors, column i pairs with eigenvalue i
  Matrix factor;                     // basis * diag(sqrt(lambda))

  /// Draws the ground truth a synthetic spec implies, from its seed.
  static GroundTruth draw(const StreamSpec& spec);
};

/// Indexed sample source. Synthetic kinds are pure functions of (seed, t');
/// file kind serves the rows of a CSV in order and fails past the last row.
class StreamSource {
 public:
  StreamSource(const StreamSpec& spec, GroundTruth truth);
  explicit StreamSource(const StreamSpec& spec);

  StreamKind kind() const { return spec_.kind; }
  int dimension() const { return spec_.dimension; }
  bool labeled() const;
  std::uint64_t seed() const { return spec_.seed; }
  const StreamSpec& spec() const { return spec_; }
  const GroundTruth& truth() const { return truth_; }

  /// Number of records for file kind; max int64 for synthetic kinds.
  std::int64_t size() const;

  /// Sample with 1-based global index t'.
  Sample generate(std::int64_t t_prime) const;
  void generate_into(std::int64_t t_prime, Sample& out) const;

  /// Samples from an independent random domain (holdout sets, estimates).
  /// Synthetic kinds only.
  void generate_aux(RngDomain domain, std::int64_t index, Sample& out) const;
  std::vector<Sample> draw_aux(RngDomain domain, std::size_t count) const;

  /// All records of a file stream (for empirical-risk evaluation).
  std::span<const Sample> records() const;

 private:
  StreamSource(const StreamSpec& spec, std::shared_ptr<const std::vector<Sample>> rows)
      : spec_(spec), rows_(std::move(rows)) {}
  friend StreamSource open_file_stream(const std::filesystem::path&, const FileFormat&);

  void synthesize(CounterRng& rng, Sample& out) const;

  StreamSpec spec_;
  GroundTruth truth_;
  std::shared_ptr<const std::vector<Sample>> rows_;
};

/// Reads a CSV of samples (one per row, numeric fields, optional trailing
/// label column, optional header). Throws IoError or InvalidArgument with
/// the offending line number.
StreamSource open_file_stream(const std::filesystem::path& path, const FileFormat& format);

/// Writes samples in the format open_file_stream reads, 17 significant digits.
void write_samples_csv(const std::filesystem::path& path, std::span<const Sample> samples,
                       bool with_label);

/// How the global stream is carved into per-node mini-batches.
struct SplitPlan {
  std::int64_t minibatch = 1;  // B
  std::int64_t nodes = 1;      // N
  std::int64_t discarded = 0;  // mu per iteration

  std::int64_t local() const { return minibatch / nodes; }
  void validate() const;
};

/// Global index of sample b (1-based) at node n (1-based) in iteration t:
/// b + (n-1) B/N + (t-1)(B+mu).
std::int64_t split(const SplitPlan& plan, std::int64_t t, std::int64_t n, std::int64_t b);

}  // namespace streamlearn
