#include "streamlearn/streams.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>

#include "streamlearn/error.hpp"
#include "streamlearn/io.hpp"

namespace streamlearn {

namespace {

double uniform01(CounterRng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Vector standard_normal(CounterRng& rng, int n) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal(rng);
  return v;
}

}  // namespace

GroundTruth GroundTruth::draw(const StreamSpec& spec) {
  GroundTruth gt;
  const int d = spec.dimension;
  if (d < 1) throw InvalidArgument("stream dimension must be positive");
  CounterRng rng(spec.seed, RngDomain::ground_truth, 0);
  switch (spec.kind) {
    case StreamKind::logistic_gaussian:
      gt.w_star = standard_normal(rng, d + 1);
      break;
    case StreamKind::conditional_gaussian:
      if (!(spec.class_variance > 0)) throw InvalidArgument("class variance must be positive");
      gt.mean_neg = standard_normal(rng, d);
      gt.mean_pos = standard_normal(rng, d);
      gt.class_variance = spec.class_variance;
      break;
    case StreamKind::gaussian_covariance: {
      gt.spectrum = spec.spectrum ? *spec.spectrum : SpectrumSpec::linear(d);
      if (static_cast<int>(gt.spectrum.eigenvalues.size()) != d)
        throw InvalidArgument("spectrum length does not match the stream dimension");
      gt.spectrum.validate();
      Matrix g(d, d);
      std::normal_distribution<double> normal;
      for (int j = 0; j < d; ++j)
        for (int i = 0; i < d; ++i) g(i, j) = normal(rng);
      Eigen::HouseholderQR<Matrix> qr(g);
      Matrix q = qr.householderQ();
      const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
      // Sign fix makes the basis Haar-distributed and independent of the QR
      // implementation's sign convention.
      for (int j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1.0;
      gt.basis = q;
      Vector root(d);
      for (int i = 0; i < d; ++i) root[i] = std::sqrt(gt.spectrum.eigenvalues[static_cast<std::size_t>(i)]);
      gt.factor = gt.basis * root.asDiagonal();
      break;
    }
    case StreamKind::file:
      break;
  }
  return gt;
}

StreamSource::StreamSource(const StreamSpec& spec, GroundTruth truth)
    : spec_(spec), truth_(std::move(truth)) {
  if (spec_.kind == StreamKind::file) throw InvalidArgument("use open_file_stream for file streams");
  if (spec_.dimension < 1) throw InvalidArgument("stream dimension must be positive");
}

StreamSource::StreamSource(const StreamSpec& spec) : spec_(spec) {
  if (spec_.kind == StreamKind::file) {
    *this = open_file_stream(spec.path, spec.format);
    return;
  }
  truth_ = GroundTruth::draw(spec_);
}

bool StreamSource::labeled() const {
  switch (spec_.kind) {
    case StreamKind::logistic_gaussian:
    case StreamKind::conditional_gaussian:
      return true;
    case StreamKind::gaussian_covariance:
      return false;
    case StreamKind::file:
      return spec_.format.label_column;
  }
  return false;
}

std::int64_t StreamSource::size() const {
  if (spec_.kind == StreamKind::file) return static_cast<std::int64_t>(rows_->size());
  return std::numeric_limits<std::int64_t>::max();
}

void StreamSource::synthesize(CounterRng& rng, Sample& out) const {
  const int d = spec_.dimension;
  std::normal_distribution<double> normal;
  out.x.resize(d);
  switch (spec_.kind) {
    case StreamKind::logistic_gaussian: {
      for (int i = 0; i < d; ++i) out.x[i] = normal(rng);
      const double a = truth_.w_star.head(d).dot(out.x) + truth_.w_star[d];
      const double p = 1.0 / (1.0 + std::exp(-a));
      out.label = uniform01(rng) < p ? 1 : -1;
      return;
    }
    case StreamKind::conditional_gaussian: {
      out.label = (rng() >> 63) ? 1 : -1;
      const Vector& mu = out.label > 0 ? truth_.mean_pos : truth_.mean_neg;
      const double s = std::sqrt(truth_.class_variance);
      for (int i = 0; i < d; ++i) out.x[i] = mu[i] + s * normal(rng);
      return;
    }
    case StreamKind::gaussian_covariance: {
      Vector g(d);
      for (int i = 0; i < d; ++i) g[i] = normal(rng);
      out.x.noalias() = truth_.factor * g;
      out.label = 0;
      return;
    }
    case StreamKind::file:
      break;
  }
  throw InvalidArgument("not a synthetic stream");
}

void StreamSource::generate_into(std::int64_t t_prime, Sample& out) const {
  if (t_prime < 1) throw InvalidArgument("sample index must be at least 1");
  if (spec_.kind == StreamKind::file) {
    if (t_prime > static_cast<std::int64_t>(rows_->size()))
      throw EndOfStream("file stream has " + std::to_string(rows_->size()) +
                        " records; sample " + std::to_string(t_prime) + " requested");
    out = (*rows_)[static_cast<std::size_t>(t_prime - 1)];
    return;
  }
  CounterRng rng(spec_.seed, RngDomain::samples, static_cast<std::uint64_t>(t_prime));
  synthesize(rng, out);
}

Sample StreamSource::generate(std::int64_t t_prime) const {
  Sample s;
  generate_into(t_prime, s);
  return s;
}

void StreamSource::generate_aux(RngDomain domain, std::int64_t index, Sample& out) const {
  if (spec_.kind == StreamKind::file) throw InvalidArgument("file streams have no auxiliary samples");
  CounterRng rng(spec_.seed, domain, static_cast<std::uint64_t>(index));
  synthesize(rng, out);
}

std::vector<Sample> StreamSource::draw_aux(RngDomain domain, std::size_t count) const {
  std::vector<Sample> out(count);
  for (std::size_t i = 0; i < count; ++i) generate_aux(domain, static_cast<std::int64_t>(i) + 1, out[i]);
  return out;
}

std::span<const Sample> StreamSource::records() const {
  if (!rows_) return {};
  return {rows_->data(), rows_->size()};
}

StreamSource open_file_stream(const std::filesystem::path& path, const FileFormat& format) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sample file " + path.string());
  auto rows = std::make_shared<std::vector<Sample>>();
  std::string line;
  int lineno = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && format.header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_csv_line(line);
    if (width == 0) {
      width = fields.size();
      if (width < (format.label_column ? 2u : 1u))
        throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": too few columns");
    } else if (fields.size() != width) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(width) + " fields, found " + std::to_string(fields.size()));
    }
    const std::size_t d = format.label_column ? width - 1 : width;
    Sample s;
    s.x.resize(static_cast<Eigen::Index>(d));
    try {
      for (std::size_t i = 0; i < d; ++i) s.x[static_cast<Eigen::Index>(i)] = parse_double(fields[i]);
      if (format.label_column) {
        const double y = parse_double(fields[d]);
        if (y != 1.0 && y != -1.0) throw InvalidArgument("label must be -1 or 1, got " + fields[d]);
        s.label = static_cast<int>(y);
      }
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    rows->push_back(std::move(s));
  }
  if (in.bad()) throw IoError("read failed for " + path.string());
  if (rows->empty()) throw InvalidArgument(path.string() + ": no samples");

  StreamSpec spec;
  spec.kind = StreamKind::file;
  spec.dimension = static_cast<int>(rows->front().x.size());
  spec.path = path;
  spec.format = format;
  return StreamSource(spec, std::shared_ptr<const std::vector<Sample>>(std::move(rows)));
}

void write_samples_csv(const std::filesystem::path& path, std::span<const Sample> samples,
                       bool with_label) {
  std::string body;
  for (const Sample& s : samples) {
    for (Eigen::Index i = 0; i < s.x.size(); ++i) {
      if (i) body += ',';
      body += format_double(s.x[i]);
    }
    if (with_label) body += (s.label > 0 ? ",1" : ",-1");
    body += '\n';
  }
  write_file_atomic(path, body);
}

void SplitPlan::validate() const {
  if (nodes < 1) throw InvalidArgument("split plan needs at least one node");
  if (minibatch < 1) throw InvalidArgument("split plan needs a positive mini-batch");
  if (minibatch % nodes != 0)
    throw InvalidArgument("mini-batch size " + std::to_string(minibatch) +
                          " is not a multiple of the node count " + std::to_string(nodes));
  if (discarded < 0) throw InvalidArgument("discard count must be non-negative");
}

std::int64_t split(const SplitPlan& plan, std::int64_t t, std::int64_t n, std::int64_t b) {
  plan.validate();
  const std::int64_t local = plan.local();
  if (t < 1 || n < 1 || n > plan.nodes || b < 1 || b > local)
    throw InvalidArgument("split index out of range");
  return b + (n - 1) * local + (t - 1) * (plan.minibatch + plan.discarded);
}

}  // namespace streamlearn
