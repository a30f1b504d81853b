#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>

#include "streamlearn/harness.hpp"
#include "streamlearn/io.hpp"

namespace streamlearn {

namespace {

constexpr const char* kCsvHeader =
    "experiment,algorithm,B,N,R,mu,trial_count,t,t_prime,sim_seconds,metric,mean,median,q10,q90";
constexpr const char* kRawHeader =
    "experiment,algorithm,B,N,R,mu,trial,node,t,t_prime,sim_seconds,discarded,metric,value";

std::string curve_prefix(const ExperimentResult& r, const ResolvedCurve& c) {
  return csv_field(r.experiment) + "," + csv_field(c.label) + "," + std::to_string(c.minibatch) + "," + std::to_string(c.nodes) + "," +
         std::to_string(c.rounds) + "," + std::to_string(c.discarded);
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::string format_csv(std::span<const ExperimentResult> results) {
  std::size_t rows = 0;
  for (const auto& r : results) rows += r.rows.size();
  if (rows == 0) throw InvalidArgument("no results to write");
  std::string out = kCsvHeader;
  out += '\n';
  for (const ExperimentResult& r : results) {
    for (const AggregateRow& row : r.rows) {
      const ResolvedCurve& c = r.curves.at(row.curve);
      out += curve_prefix(r, c);
      out += ',' + std::to_string(r.trial_count) + ',' + std::to_string(row.t) + ',' + std::to_string(row.t_prime) +
             ',' + format_double(row.sim_seconds) + ',' + row.metric + ',' + format_double(row.stats.mean) + ',' +
             format_double(row.stats.median) + ',' + format_double(row.stats.q10) + ',' +
             format_double(row.stats.q90) + '\n';
    }
  }
  return out;
}

void emit_csv(std::span<const ExperimentResult> results, const std::filesystem::path& path) {
  write_file_atomic(path, format_csv(results));
}

void emit_raw_csv(std::span<const ExperimentResult> results, const std::filesystem::path& path) {
  std::string out = kRawHeader;
  out += '\n';
  std::size_t count = 0;
  for (const ExperimentResult& r : results) {
    std::map<std::string, const ResolvedCurve*> by_label;
    for (const auto& c : r.curves) by_label[c.label] = &c;
    for (const RunRecord& rec : r.raw) {
      const ResolvedCurve& c = *by_label.at(rec.algorithm);
      const std::string prefix = curve_prefix(r, c) + ',' + std::to_string(rec.trial) + ',' +
                                 (rec.node == RunRecord::kNodeWorst ? "worst" : "mean") + ',' +
                                 std::to_string(rec.t) + ',' + std::to_string(rec.t_prime) + ',' +
                                 format_double(rec.sim_seconds) + ',' + std::to_string(rec.discarded) + ',';
      const std::string suffix = rec.node == RunRecord::kNodeWorst ? "_worst_node" : "";
      const std::pair<const char*, double> fields[] = {
          {"excess_risk", rec.excess_risk}, {"param_error", rec.param_error}, {"risk", rec.risk}};
      for (const auto& [name, value] : fields) {
        if (std::isnan(value)) continue;
        out += prefix + name + suffix + ',' + format_double(value) + '\n';
        ++count;
      }
    }
  }
  if (count == 0) throw InvalidArgument("no raw records to write");
  write_file_atomic(path, out);
}

std::vector<ExperimentResult> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open results file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw InvalidArgument(path.string() + ": unexpected header");
  std::vector<ExperimentResult> results;
  std::map<std::string, std::size_t> exp_index;
  std::vector<std::map<std::string, std::size_t>> curve_index;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 15)
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected 15 fields");
    try {
      auto [it, fresh] = exp_index.try_emplace(f[0], results.size());
      if (fresh) {
        results.emplace_back();
        results.back().experiment = f[0];
        results.back().trial_count = static_cast<std::int64_t>(parse_double(f[6]));
        curve_index.emplace_back();
      }
      ExperimentResult& r = results[it->second];
      const std::string key = csv_field(f[1]) + "," + f[2] + "," + f[3] + "," + f[4] + "," + f[5];
      auto [cit, cfresh] = curve_index[it->second].try_emplace(key, r.curves.size());
      if (cfresh) {
        ResolvedCurve c;
        c.label = f[1];
        c.minibatch = static_cast<std::int64_t>(parse_double(f[2]));
        c.nodes = static_cast<std::int64_t>(parse_double(f[3]));
        c.rounds = static_cast<std::int64_t>(parse_double(f[4]));
        c.discarded = static_cast<std::int64_t>(parse_double(f[5]));
        r.curves.push_back(c);
      }
      AggregateRow row;
      row.curve = cit->second;
      row.t = static_cast<std::int64_t>(parse_double(f[7]));
      row.t_prime = static_cast<std::int64_t>(parse_double(f[8]));
      row.sim_seconds = parse_double(f[9]);
      row.metric = f[10];
      row.stats = {parse_double(f[11]), parse_double(f[12]), parse_double(f[13]), parse_double(f[14])};
      r.rows.push_back(std::move(row));
    } catch (const InvalidArgument& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (results.empty()) throw InvalidArgument(path.string() + ": no result rows");
  return results;
}

std::string render_svg(std::span<const ExperimentResult> results, const PlotSpec& spec) {
  struct Series {
    std::string label;
    std::vector<double> x, y;
  };
  std::string metric = spec.metric;
  if (metric.empty())
    for (const auto& r : results)
      if (!r.rows.empty()) {
        metric = r.rows.front().metric;
        break;
      }
  if (metric.empty()) throw InvalidArgument("no results to plot");

  std::vector<Series> series;
  for (const ExperimentResult& r : results) {
    for (std::size_t ci = 0; ci < r.curves.size(); ++ci) {
      Series s;
      s.label = results.size() > 1 ? r.experiment + " " + r.curves[ci].label : r.curves[ci].label;
      for (const AggregateRow& row : r.rows) {
        if (row.curve != ci || row.metric != metric) continue;
        double x = static_cast<double>(row.t_prime);
        if (spec.x_axis == "t") x = static_cast<double>(row.t);
        else if (spec.x_axis == "sim_seconds") x = row.sim_seconds;
        if (!(x > 0) || !(row.stats.mean > 0) || !std::isfinite(row.stats.mean)) continue;
        s.x.push_back(x);
        s.y.push_back(row.stats.mean);
      }
      if (!s.x.empty()) series.push_back(std::move(s));
    }
  }
  if (series.empty()) throw InvalidArgument("nothing to plot for metric " + metric);

  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const Series& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  auto decades = [](double lo, double hi) {
    double a = std::floor(std::log10(lo)), b = std::ceil(std::log10(hi));
    if (b <= a) b = a + 1;
    return std::pair{a, b};
  };
  const auto [x0, x1] = decades(xmin, xmax);
  const auto [y0, y1] = decades(ymin, ymax);

  const double W = spec.width, H = spec.height;
  const double left = 80, right = 200, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;
  auto px = [&](double x) { return left + (std::log10(x) - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return top + ph - (std::log10(y) - y0) / (y1 - y0) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) + "\" height=\"" +
         std::to_string(spec.height) + "\" viewBox=\"0 0 " + std::to_string(spec.width) + " " +
         std::to_string(spec.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    out += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
           xml_escape(spec.title) + "</text>\n";
  out += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(pw) + "\" height=\"" + fixed(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double e = x0; e <= x1; e += 1) {
    const double x = left + (e - x0) / (x1 - x0) * pw;
    out += "<line x1=\"" + fixed(x) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(x) + "\" y2=\"" + fixed(top + ph) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + fixed(x) + "\" y=\"" + fixed(top + ph + 18) + "\" text-anchor=\"middle\">1e" +
           std::to_string(static_cast<int>(e)) + "</text>\n";
  }
  for (double e = y0; e <= y1; e += 1) {
    const double y = top + ph - (e - y0) / (y1 - y0) * ph;
    out += "<line x1=\"" + fixed(left) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(left + pw) + "\" y2=\"" + fixed(y) +
           "\" stroke=\"#dddddd\"/>\n";
    out += "<text x=\"" + fixed(left - 8) + "\" y=\"" + fixed(y + 4) + "\" text-anchor=\"end\">1e" +
           std::to_string(static_cast<int>(e)) + "</text>\n";
  }
  const std::string xlabel = spec.x_label.empty() ? spec.x_axis : spec.x_label;
  const std::string ylabel = spec.y_label.empty() ? metric : spec.y_label;
  out += "<text x=\"" + fixed(left + pw / 2) + "\" y=\"" + fixed(H - 16) + "\" text-anchor=\"middle\">" +
         xml_escape(xlabel) + "</text>\n";
  out += "<text x=\"18\" y=\"" + fixed(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
         fixed(top + ph / 2) + ")\">" + xml_escape(ylabel) + "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const Series& s = series[i];
    const char* color = palette[i % std::size(palette)];
    std::string xs, ys, pts;
    for (std::size_t k = 0; k < s.x.size(); ++k) {
      if (k) xs += ' ', ys += ' ', pts += ' ';
      xs += format_double(s.x[k]);
      ys += format_double(s.y[k]);
      pts += fixed(px(s.x[k])) + "," + fixed(py(s.y[k]));
    }
    out += "<polyline class=\"curve\" data-label=\"" + xml_escape(s.label) + "\" data-x=\"" + xs + "\" data-y=\"" + ys +
           "\" points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
  }
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = top + 10 + 18.0 * static_cast<double>(i);
    const double x = left + pw + 12;
    const char* color = palette[i % std::size(palette)];
    out += "<g class=\"legend\"><line x1=\"" + fixed(x) + "\" y1=\"" + fixed(y) + "\" x2=\"" + fixed(x + 20) +
           "\" y2=\"" + fixed(y) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/><text x=\"" + fixed(x + 26) +
           "\" y=\"" + fixed(y + 4) + "\">" + xml_escape(series[i].label) + "</text></g>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_plot(std::span<const ExperimentResult> results, const std::filesystem::path& path, const PlotSpec& spec) {
  write_file_atomic(path, render_svg(results, spec));
}

}  // namespace streamlearn
