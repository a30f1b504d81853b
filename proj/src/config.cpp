#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <set>
#include <sstream>
#include <utility>

#include "streamlearn/harness.hpp"
#include "streamlearn/io.hpp"

namespace streamlearn {

namespace {

int line_of(const YAML::Node& n) {
  const YAML::Mark m = n.Mark();
  return m.line >= 0 ? m.line + 1 : 0;
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) { throw ConfigError(what, line_of(n)); }

void allow_keys(const YAML::Node& map, std::initializer_list<const char*> keys, const std::string& section) {
  if (!map.IsMap()) fail(map, section + " must be a mapping");
  for (const auto& kv : map) {
    const std::string key = kv.first.as<std::string>();
    if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
      fail(kv.first, "unknown key '" + key + "' in " + section);
  }
}

std::string as_string(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail(n, field + " must be a scalar");
  return n.Scalar();
}

double as_double(const YAML::Node& n, const std::string& field) {
  const std::string s = as_string(n, field);
  try {
    return parse_double(s);
  } catch (const InvalidArgument&) {
    fail(n, field + " must be a number, got '" + s + "'");
  }
}

std::int64_t as_int(const YAML::Node& n, const std::string& field) {
  const double v = as_double(n, field);
  if (!(std::abs(v) < 9.0e18) || v != std::floor(v)) fail(n, field + " must be an integer");
  return static_cast<std::int64_t>(v);
}

bool as_bool(const YAML::Node& n, const std::string& field) {
  const std::string s = as_string(n, field);
  if (s == "true" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "no" || s == "off") return false;
  fail(n, field + " must be true or false");
}

bool is_auto(const YAML::Node& n) { return n.IsScalar() && n.Scalar() == "auto"; }

CountField as_count(const YAML::Node& n, const std::string& field) {
  if (is_auto(n)) return {CountField::Mode::automatic, 0};
  const std::int64_t v = as_int(n, field);
  if (v < 0) fail(n, field + " must be non-negative");
  return {CountField::Mode::fixed, v};
}

void deep_merge(YAML::Node target, const YAML::Node& overlay) {
  for (const auto& kv : overlay) {
    const std::string key = kv.first.as<std::string>();
    YAML::Node existing = target[key];
    if (existing.IsDefined() && existing.IsMap() && kv.second.IsMap()) {
      deep_merge(existing, kv.second);
    } else {
      target[key] = YAML::Clone(kv.second);
    }
  }
}

StreamSpec parse_stream(const YAML::Node& n) {
  allow_keys(n, {"kind", "dimension", "class_variance", "spectrum", "path", "header", "label_column"}, "stream");
  StreamSpec s;
  if (!n["kind"]) fail(n, "stream.kind is required");
  const std::string kind = as_string(n["kind"], "stream.kind");
  if (kind == "logistic_gaussian") s.kind = StreamKind::logistic_gaussian;
  else if (kind == "conditional_gaussian") s.kind = StreamKind::conditional_gaussian;
  else if (kind == "gaussian_covariance") s.kind = StreamKind::gaussian_covariance;
  else if (kind == "file") s.kind = StreamKind::file;
  else fail(n["kind"], "unknown stream kind '" + kind + "'");

  if (s.kind == StreamKind::file) {
    if (!n["path"]) fail(n, "file streams need stream.path");
    s.path = as_string(n["path"], "stream.path");
    if (n["header"]) s.format.header = as_bool(n["header"], "stream.header");
    if (n["label_column"]) s.format.label_column = as_bool(n["label_column"], "stream.label_column");
    return s;
  }
  if (!n["dimension"]) fail(n, "stream.dimension is required");
  s.dimension = static_cast<int>(as_int(n["dimension"], "stream.dimension"));
  if (s.dimension < 1) fail(n["dimension"], "stream.dimension must be positive");
  if (n["class_variance"]) {
    s.class_variance = as_double(n["class_variance"], "stream.class_variance");
    if (!(s.class_variance > 0)) fail(n["class_variance"], "stream.class_variance must be positive");
  }
  if (const YAML::Node sp = n["spectrum"]) {
    SpectrumSpec spec;
    if (sp.IsSequence()) {
      for (const auto& v : sp) spec.eigenvalues.push_back(as_double(v, "stream.spectrum entry"));
    } else {
      allow_keys(sp, {"top", "gap", "last"}, "stream.spectrum");
      const double top = sp["top"] ? as_double(sp["top"], "stream.spectrum.top") : 1.0;
      const double gap = sp["gap"] ? as_double(sp["gap"], "stream.spectrum.gap") : 0.1;
      const double last = sp["last"] ? as_double(sp["last"], "stream.spectrum.last") : 0.1;
      spec = SpectrumSpec::linear(s.dimension, top, gap, last);
    }
    if (static_cast<int>(spec.eigenvalues.size()) != s.dimension)
      fail(sp, "stream.spectrum must have one entry per dimension");
    try {
      spec.validate();
    } catch (const InvalidArgument& e) {
      fail(sp, std::string("stream.spectrum: ") + e.what());
    }
    s.spectrum = spec;
  }
  return s;
}

LossConfig parse_loss(const YAML::Node& n) {
  allow_keys(n, {"kind", "expanse", "smoothness", "noise_variance", "data_bound"}, "loss");
  LossConfig c;
  if (!n["kind"]) fail(n, "loss.kind is required");
  const std::string kind = as_string(n["kind"], "loss.kind");
  if (kind == "logistic") c.model.kind = LossKind::logistic;
  else if (kind == "hinge") c.model.kind = LossKind::hinge;
  else if (kind == "pca" || kind == "pca_krasulina") c.model.kind = LossKind::pca;
  else fail(n["kind"], "unknown loss kind '" + kind + "'");

  c.expanse_default = c.model.kind != LossKind::pca;
  if (const YAML::Node e = n["expanse"]) {
    const std::string v = as_string(e, "loss.expanse");
    if (v == "none") {
      c.expanse_default = false;
    } else if (v != "default") {
      c.expanse_default = false;
      c.model.expanse = as_double(e, "loss.expanse");
      if (!(*c.model.expanse > 0)) fail(e, "loss.expanse must be positive");
    }
  }
  if (const YAML::Node l = n["smoothness"]; l && !is_auto(l)) {
    c.smoothness_auto = false;
    c.model.smoothness = as_double(l, "loss.smoothness");
  }
  if (const YAML::Node s = n["noise_variance"]; s && !is_auto(s)) {
    c.noise_auto = false;
    c.model.noise_variance = as_double(s, "loss.noise_variance");
  }
  if (const YAML::Node k = n["data_bound"]; k && !is_auto(k)) c.model.data_bound = as_double(k, "loss.data_bound");
  return c;
}

TopologySpec parse_topology(const YAML::Node& n) {
  allow_keys(n, {"kind", "nodes", "degree", "seed", "weights"}, "topology");
  TopologySpec t;
  if (!n["kind"]) fail(n, "topology.kind is required");
  const std::string kind = as_string(n["kind"], "topology.kind");
  if (kind == "star") t.kind = TopologyKind::star;
  else if (kind == "ring") t.kind = TopologyKind::ring;
  else if (kind == "complete") t.kind = TopologyKind::complete;
  else if (kind == "k_regular" || kind == "k_regular_random") t.kind = TopologyKind::k_regular;
  else fail(n["kind"], "unknown topology kind '" + kind + "'");
  if (!n["nodes"]) fail(n, "topology.nodes is required");
  t.nodes = static_cast<int>(as_int(n["nodes"], "topology.nodes"));
  if (n["degree"]) t.degree = static_cast<int>(as_int(n["degree"], "topology.degree"));
  if (n["seed"]) t.seed = static_cast<std::uint64_t>(as_int(n["seed"], "topology.seed"));
  if (n["weights"]) {
    const std::string w = as_string(n["weights"], "topology.weights");
    if (w == "metropolis") t.weights = WeightRule::metropolis;
    else if (w == "uniform") t.weights = WeightRule::uniform;
    else fail(n["weights"], "unknown weight rule '" + w + "'");
  }
  return t;
}

ScheduleConfig parse_schedule(const YAML::Node& n, const std::string& where, const YAML::Node* c_override) {
  allow_keys(n, {"kind", "c", "c0", "Q", "momentum", "smoothness", "sigma", "expanse"}, where);
  ScheduleConfig s;
  if (!n["kind"]) fail(n, where + ".kind is required");
  const std::string kind = as_string(n["kind"], where + ".kind");
  if (!parse_step_kind(kind, s.base.kind)) fail(n["kind"], "unknown stepsize kind '" + kind + "'");
  if (s.base.kind == StepKind::adsgd_pair) s.base.momentum = MomentumKind::half_t;
  if (c_override) s.base.c = as_double(*c_override, where + ".c");
  else if (n["c"]) s.base.c = as_double(n["c"], where + ".c");
  if (n["c0"]) s.c0 = as_double(n["c0"], where + ".c0");
  if (n["Q"]) s.base.offset = as_double(n["Q"], where + ".Q");
  if (n["smoothness"]) s.base.smoothness = as_double(n["smoothness"], where + ".smoothness");
  if (n["sigma"]) s.base.sigma = as_double(n["sigma"], where + ".sigma");
  if (n["expanse"]) s.base.expanse = as_double(n["expanse"], where + ".expanse");
  if (n["momentum"]) {
    const std::string m = as_string(n["momentum"], where + ".momentum");
    if (m == "none") s.base.momentum = MomentumKind::none;
    else if (m == "half_t") s.base.momentum = MomentumKind::half_t;
    else fail(n["momentum"], "unknown momentum '" + m + "'");
  }
  if (s.c0 && !(*s.c0 > 2)) fail(n["c0"], where + ".c0 must exceed 2");
  return s;
}

// Expands list-valued B/N/R/mu/schedule.c into one curve per position.
void parse_algorithm(const std::string& id, const YAML::Node& n, std::vector<CurveConfig>& out) {
  const std::string where = "algorithms." + id;
  allow_keys(n, {"kind", "B", "N", "R", "mu", "schedule", "normalization", "report", "label"}, where);
  if (!n["kind"]) fail(n, where + ".kind is required");
  AlgorithmKind kind;
  const std::string kind_name = as_string(n["kind"], where + ".kind");
  if (!parse_algorithm_kind(kind_name, kind)) fail(n["kind"], "unknown algorithm kind '" + kind_name + "'");
  if (!n["schedule"]) fail(n, where + ".schedule is required");

  struct Axis {
    const char* name;
    YAML::Node node;
  };
  std::vector<Axis> axes = {{"B", n["B"]}, {"N", n["N"]}, {"R", n["R"]}, {"mu", n["mu"]},
                            {"c", n["schedule"]["c"]}};
  std::size_t length = 1;
  bool any_list = false;
  for (const Axis& a : axes) {
    if (a.node && a.node.IsSequence()) {
      if (a.node.size() == 0) fail(a.node, where + "." + a.name + " list is empty");
      if (any_list && a.node.size() != length)
        fail(a.node, where + ": list-valued fields must have equal lengths");
      length = a.node.size();
      any_list = true;
    }
  }

  for (std::size_t i = 0; i < length; ++i) {
    auto pick = [&](const YAML::Node& node) -> YAML::Node {
      if (node && node.IsSequence()) return node[i];
      return node;
    };
    CurveConfig c;
    c.id = id;
    c.kind = kind;
    c.label = n["label"] ? as_string(n["label"], where + ".label") : id;
    std::string suffix;
    for (const Axis& a : axes) {
      if (a.node && a.node.IsSequence()) {
        if (!suffix.empty()) suffix += ',';
        suffix += std::string(a.name) + "=" + as_string(a.node[i], where + "." + a.name);
      }
    }
    if (!suffix.empty()) c.label += "[" + suffix + "]";

    if (const YAML::Node b = pick(n["B"])) c.minibatch = as_count(b, where + ".B");
    if (const YAML::Node v = pick(n["N"])) c.nodes = as_count(v, where + ".N");
    if (const YAML::Node r = pick(n["R"])) c.rounds = as_count(r, where + ".R");
    if (const YAML::Node m = pick(n["mu"])) c.discarded = as_count(m, where + ".mu");
    const YAML::Node cnode = pick(n["schedule"]["c"]);
    c.schedule = parse_schedule(n["schedule"], where + ".schedule", cnode ? &cnode : nullptr);

    c.normalization = default_normalization(kind);
    if (n["normalization"]) {
      const std::string v = as_string(n["normalization"], where + ".normalization");
      if (v == "mean") c.normalization = Normalization::mean;
      else if (v == "sum") c.normalization = Normalization::sum;
      else fail(n["normalization"], "unknown normalization '" + v + "'");
    }
    c.report = default_report(kind);
    if (n["report"]) {
      const std::string v = as_string(n["report"], where + ".report");
      if (v == "last") c.report = ReportKind::last;
      else if (v == "averaged") c.report = ReportKind::averaged;
      else fail(n["report"], "unknown report kind '" + v + "'");
    }
    if (c.minibatch.fixed() && c.minibatch.value < 1) fail(n["B"], where + ".B must be positive");
    if (c.nodes.fixed() && c.nodes.value < 1) fail(n["N"], where + ".N must be positive");
    out.push_back(std::move(c));
  }
}

YAML::Node parse_document(const std::string& text) {
  try {
    YAML::Node root = YAML::Load(text);
    if (!root.IsMap()) throw ConfigError("configuration must be a mapping at the top level", 1);
    return root;
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
}

}  // namespace

std::int64_t evaluate_horizon(const std::string& expr, std::int64_t nodes) {
  std::string s;
  for (char ch : expr)
    if (ch != ' ') s += ch;
  if (!s.empty() && s[0] == 'N') {
    if (nodes < 1) throw ConfigError("horizon '" + expr + "' needs topology.nodes");
    double power = 1.0;
    if (s.size() > 1) {
      if (s[1] != '^') throw ConfigError("cannot parse horizon '" + expr + "'");
      try {
        power = parse_double(s.substr(2));
      } catch (const InvalidArgument&) {
        throw ConfigError("cannot parse horizon '" + expr + "'");
      }
    }
    return static_cast<std::int64_t>(std::llround(std::pow(static_cast<double>(nodes), power)));
  }
  double v = 0;
  try {
    v = parse_double(s);
  } catch (const InvalidArgument&) {
    throw ConfigError("cannot parse horizon '" + expr + "'");
  }
  if (!(v >= 1) || v != std::floor(v)) throw ConfigError("horizon must be a positive integer");
  return static_cast<std::int64_t>(v);
}

void apply_override(YAML::Node& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    parts.push_back(part);
  }
  YAML::Node parsed;
  try {
    parsed = YAML::Load(value);
  } catch (const YAML::Exception&) {
    throw ConfigError("override value '" + value + "' does not parse");
  }
  // Walk with fresh handles: yaml-cpp nodes alias, so reassigning a walking
  // variable would overwrite the tree.
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = chain.back()[parts[i]];
    if (next.IsDefined() && !next.IsMap())
      throw ConfigError("override path '" + path + "': '" + parts[i] + "' is not a section");
    if (!next.IsDefined()) chain.back()[parts[i]] = YAML::Node(YAML::NodeType::Map);
    chain.push_back(chain.back()[parts[i]]);
  }
  chain.back()[parts.back()] = parsed;
}

ExperimentConfig interpret_config(const YAML::Node& root) {
  allow_keys(root,
             {"experiment", "seed", "trials", "workers", "horizon", "holdout", "metrics", "worst_node", "scales",
              "stream", "loss", "rates", "system", "topology", "algorithms", "output"},
             "configuration");
  ExperimentConfig cfg;
  if (root["experiment"]) cfg.name = as_string(root["experiment"], "experiment");
  if (root["seed"]) cfg.seed = static_cast<std::uint64_t>(as_int(root["seed"], "seed"));
  if (root["trials"]) cfg.trials = as_int(root["trials"], "trials");
  if (cfg.trials < 1) fail(root["trials"], "trials must be at least 1");
  if (root["workers"]) cfg.workers = static_cast<int>(as_int(root["workers"], "workers"));
  if (cfg.workers < 1) fail(root["workers"], "workers must be at least 1");
  if (root["holdout"]) cfg.holdout = static_cast<std::size_t>(as_int(root["holdout"], "holdout"));
  if (root["worst_node"]) cfg.worst_node = as_bool(root["worst_node"], "worst_node");

  if (!root["stream"]) fail(root, "stream section is required");
  cfg.stream = parse_stream(root["stream"]);
  if (!root["loss"]) fail(root, "loss section is required");
  cfg.loss = parse_loss(root["loss"]);

  cfg.rates.streaming_rate = 1e6;
  cfg.rates.processing_rate = 1.25e5;
  cfg.rates.messaging_rate = 1e4;
  if (const YAML::Node r = root["rates"]) {
    allow_keys(r, {"streaming", "processing", "messaging"}, "rates");
    if (r["streaming"]) cfg.rates.streaming_rate = as_double(r["streaming"], "rates.streaming");
    if (r["processing"]) cfg.rates.processing_rate = as_double(r["processing"], "rates.processing");
    if (r["messaging"]) cfg.rates.messaging_rate = as_double(r["messaging"], "rates.messaging");
    if (!(cfg.rates.streaming_rate > 0 && cfg.rates.processing_rate > 0 && cfg.rates.messaging_rate > 0))
      fail(r, "rates must be positive");
  }
  if (const YAML::Node s = root["system"]) {
    allow_keys(s, {"rho", "local_batch_scale"}, "system");
    if (s["rho"]) cfg.rho = as_double(s["rho"], "system.rho");
    if (s["local_batch_scale"]) cfg.local_batch_scale = as_double(s["local_batch_scale"], "system.local_batch_scale");
  }
  if (root["topology"]) cfg.topology = parse_topology(root["topology"]);

  if (!root["horizon"]) fail(root, "horizon is required");
  cfg.horizon_expr = as_string(root["horizon"], "horizon");
  try {
    cfg.horizon = evaluate_horizon(cfg.horizon_expr, cfg.topology ? cfg.topology->nodes : 0);
  } catch (const ConfigError& e) {
    fail(root["horizon"], e.what());
  }

  const YAML::Node algs = root["algorithms"];
  if (!algs || !algs.IsMap() || algs.size() == 0) fail(root, "algorithms must be a non-empty mapping");
  for (const auto& kv : algs) parse_algorithm(kv.first.as<std::string>(), kv.second, cfg.curves);

  if (const YAML::Node m = root["metrics"]) {
    if (!m.IsSequence()) fail(m, "metrics must be a list");
    for (const auto& v : m) {
      const auto metric = parse_metric(as_string(v, "metrics entry"));
      if (!metric) fail(v, "unknown metric '" + v.Scalar() + "'");
      cfg.metrics.push_back(*metric);
    }
  } else {
    switch (cfg.stream.kind) {
      case StreamKind::logistic_gaussian: cfg.metrics = {Metric::param_error}; break;
      case StreamKind::conditional_gaussian:
      case StreamKind::gaussian_covariance: cfg.metrics = {Metric::excess_risk}; break;
      case StreamKind::file:
        cfg.metrics = {cfg.loss.model.kind == LossKind::pca ? Metric::excess_risk : Metric::risk};
        break;
    }
  }
  if (cfg.metrics.empty()) fail(root["metrics"], "at least one metric is required");

  if (const YAML::Node o = root["output"]) {
    allow_keys(o, {"csv", "svg", "raw", "title", "x_axis"}, "output");
    if (o["csv"]) cfg.output.csv = as_string(o["csv"], "output.csv");
    if (o["svg"]) cfg.output.svg = as_string(o["svg"], "output.svg");
    if (o["raw"]) cfg.output.raw = as_string(o["raw"], "output.raw");
    if (o["title"]) cfg.output.title = as_string(o["title"], "output.title");
    if (o["x_axis"]) {
      cfg.output.x_axis = as_string(o["x_axis"], "output.x_axis");
      if (cfg.output.x_axis != "t_prime" && cfg.output.x_axis != "t" && cfg.output.x_axis != "sim_seconds")
        fail(o["x_axis"], "output.x_axis must be t_prime, t or sim_seconds");
    }
  }
  if (cfg.output.title.empty()) cfg.output.title = cfg.name;
  return cfg;
}

namespace {

YAML::Node prepared_root(const std::string& text, std::span<const std::string> overrides, const std::string& scale) {
  YAML::Node root = parse_document(text);
  if (const YAML::Node scales = root["scales"]) {
    if (!scales.IsMap()) fail(scales, "scales must be a mapping");
    if (const YAML::Node chosen = scales[scale]) {
      if (!chosen.IsMap()) fail(chosen, "scale '" + scale + "' must be a mapping");
      const YAML::Node overlay = YAML::Clone(chosen);
      deep_merge(root, overlay);
    } else if (scale != "desk") {
      throw ConfigError("unknown scale '" + scale + "'");
    }
  } else if (scale != "desk") {
    throw ConfigError("unknown scale '" + scale + "'");
  }
  for (const std::string& o : overrides) apply_override(root, o);
  return root;
}

ExperimentConfig interpret_checked(const YAML::Node& root) {
  try {
    return interpret_config(root);
  } catch (const YAML::Exception& e) {
    throw ConfigError(e.msg, e.mark.line >= 0 ? e.mark.line + 1 : 0);
  }
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, std::span<const std::string> overrides,
                              const std::string& scale) {
  return interpret_checked(prepared_root(text, overrides, scale));
}

bool parse_sweep_axis(const std::string& name, SweepAxis& out) {
  static const std::pair<const char*, SweepAxis> names[] = {
      {"B", SweepAxis::minibatch}, {"mu", SweepAxis::discarded}, {"N", SweepAxis::nodes},
      {"R", SweepAxis::rounds},    {"c", SweepAxis::step_scale}};
  for (const auto& [n, a] : names)
    if (name == n) {
      out = a;
      return true;
    }
  return false;
}

std::vector<ExperimentConfig> sweep_configs(const std::string& text, std::span<const std::string> overrides,
                                            const std::string& scale, SweepAxis axis,
                                            std::span<const std::string> values, const std::string& algorithm) {
  const YAML::Node base = prepared_root(text, overrides, scale);
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const YAML::Node algs = base["algorithms"];
  if (!algs || !algs.IsMap()) throw ConfigError("algorithms must be a non-empty mapping");
  std::vector<std::string> ids;
  for (const auto& kv : algs) {
    const std::string id = kv.first.as<std::string>();
    if (algorithm.empty() || id == algorithm) ids.push_back(id);
  }
  if (ids.empty()) throw ConfigError("no algorithm named '" + algorithm + "'");
  const char* field = nullptr;
  switch (axis) {
    case SweepAxis::minibatch: field = "B"; break;
    case SweepAxis::discarded: field = "mu"; break;
    case SweepAxis::nodes: field = "N"; break;
    case SweepAxis::rounds: field = "R"; break;
    case SweepAxis::step_scale: field = "c"; break;
  }
  const std::string name = base["experiment"] ? base["experiment"].as<std::string>() : "experiment";
  std::vector<ExperimentConfig> out;
  for (const std::string& v : values) {
    YAML::Node root = YAML::Clone(base);
    for (const std::string& id : ids) {
      if (axis == SweepAxis::step_scale) {
        apply_override(root, "algorithms." + id + ".schedule.c=" + v);
      } else if (axis == SweepAxis::nodes) {
        // N follows the topology unless an algorithm pins it.
        const YAML::Node& view = root;
        if (view["algorithms"][id]["N"] || !view["topology"]) apply_override(root, "algorithms." + id + ".N=" + v);
      } else {
        apply_override(root, "algorithms." + id + "." + field + "=" + v);
      }
    }
    const YAML::Node& view = root;
    if (axis == SweepAxis::nodes && view["topology"]) apply_override(root, "topology.nodes=" + v);
    try {
      out.push_back(interpret_checked(root));
      out.back().name = name + "[" + field + "=" + v + "]";
      if (out.back().output.title == name) out.back().output.title = out.back().name;
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(field) + "=" + v + ": " + e.what());
    }
  }
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides,
                             const std::string& scale) {
  return parse_config(read_text_file(path), overrides, scale);
}

}  // namespace streamlearn
