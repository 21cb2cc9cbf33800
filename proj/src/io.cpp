#include "imab/io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include <json.hpp>

namespace imab::io {

using nlohmann::json;

std::string format_number(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

namespace {

std::string quote(const std::string& s) { return json(s).dump(); }

// Pretty writer: objects and arrays of containers are broken over lines,
// arrays of scalars stay on one line.
class Writer {
 public:
  std::string finish() {
    out_ += '\n';
    return std::move(out_);
  }

  void begin_object() { open('{', false); }
  void end_object() { close('}'); }
  void begin_array(bool flat = false) { open('[', flat); }
  void end_array() { close(']'); }

  Writer& key(const std::string& name) {
    separate();
    out_ += quote(name);
    out_ += ": ";
    pending_key_ = true;
    return *this;
  }

  void number(double v) { scalar(format_number(v)); }
  void integer(long long v) { scalar(std::to_string(v)); }
  void unsigned_integer(std::uint64_t v) { scalar(std::to_string(v)); }
  void boolean(bool v) { scalar(v ? "true" : "false"); }
  void string(const std::string& v) { scalar(quote(v)); }
  void null() { scalar("null"); }
  void optional_number(const std::optional<double>& v) { v ? number(*v) : null(); }

  void vector(const Eigen::VectorXd& v) {
    begin_array(true);
    for (Index i = 0; i < v.size(); ++i) number(v(i));
    end_array();
  }

  template <typename Derived>
  void matrix(const Eigen::DenseBase<Derived>& a) {
    begin_array();
    for (Index r = 0; r < a.rows(); ++r) {
      begin_array(true);
      for (Index c = 0; c < a.cols(); ++c) {
        if constexpr (std::is_integral_v<typename Derived::Scalar>)
          integer(a(r, c));
        else
          number(a(r, c));
      }
      end_array();
    }
    end_array();
  }

 private:
  struct Frame {
    bool flat;
    bool empty;
  };

  void separate() {
    if (pending_key_) {
      pending_key_ = false;
      return;
    }
    if (stack_.empty()) return;
    Frame& f = stack_.back();
    if (!f.empty) out_ += f.flat ? ", " : ",";
    if (!f.flat) {
      out_ += '\n';
      out_.append(2 * stack_.size(), ' ');
    }
    f.empty = false;
  }

  void scalar(const std::string& text) {
    separate();
    out_ += text;
  }

  void open(char c, bool flat) {
    separate();
    out_ += c;
    const bool parent_flat = !stack_.empty() && stack_.back().flat;
    stack_.push_back({flat || parent_flat, true});
  }

  void close(char c) {
    const Frame f = stack_.back();
    stack_.pop_back();
    if (!f.flat && !f.empty) {
      out_ += '\n';
      out_.append(2 * stack_.size(), ' ');
    }
    out_ += c;
  }

  std::string out_;
  std::vector<Frame> stack_;
  bool pending_key_ = false;
};

// ---- reading ----

std::string child(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}
std::string child(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

const json& field(const json& obj, const std::string& path, const std::string& key) {
  if (!obj.is_object()) throw ParseError(path.empty() ? "<root>" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(child(path, key), "missing");
  return *it;
}

bool has(const json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it != obj.end() && !it->is_null();
}

double as_number(const json& v, const std::string& path) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw ParseError(path, "expected a number");
  return v.get<double>();
}

double as_finite(const json& v, const std::string& path) {
  const double x = as_number(v, path);
  if (!std::isfinite(x)) throw ParseError(path, "expected a finite number");
  return x;
}

std::optional<double> as_optional(const json& v, const std::string& path) {
  if (v.is_null()) return std::nullopt;
  return as_finite(v, path);
}

long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path, "expected an integer");
  return v.get<long long>();
}

bool as_bool(const json& v, const std::string& path) {
  if (!v.is_boolean()) throw ParseError(path, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path, "expected a string");
  return v.get<std::string>();
}

const json& as_array(const json& v, const std::string& path, std::optional<std::size_t> size = std::nullopt) {
  if (!v.is_array()) throw ParseError(path, "expected an array");
  if (size && v.size() != *size)
    throw ParseError(path, "expected " + std::to_string(*size) + " entries, got " + std::to_string(v.size()));
  return v;
}

Eigen::VectorXd read_vector(const json& v, const std::string& path, std::optional<std::size_t> size = std::nullopt) {
  as_array(v, path, size);
  Eigen::VectorXd out(static_cast<Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Index>(i)) = as_finite(v[i], child(path, i));
  return out;
}

// Rows x cols; null entries become NaN when allow_null is set.
Eigen::MatrixXd read_matrix(const json& v, const std::string& path, std::optional<std::size_t> rows,
                            std::optional<std::size_t> cols, bool allow_null = false) {
  as_array(v, path, rows);
  if (v.empty()) return Eigen::MatrixXd(0, cols.value_or(0));
  const std::size_t ncols = cols.value_or(as_array(v[0], child(path, 0)).size());
  Eigen::MatrixXd out(static_cast<Index>(v.size()), static_cast<Index>(ncols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    const std::string row_path = child(path, r);
    as_array(v[r], row_path, ncols);
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string p = child(row_path, c);
      out(static_cast<Index>(r), static_cast<Index>(c)) = allow_null ? as_number(v[r][c], p) : as_finite(v[r][c], p);
    }
  }
  return out;
}

Eigen::MatrixXi read_int_matrix(const json& v, const std::string& path) {
  as_array(v, path);
  if (v.empty()) return Eigen::MatrixXi(0, 0);
  const std::size_t ncols = as_array(v[0], child(path, 0)).size();
  Eigen::MatrixXi out(static_cast<Index>(v.size()), static_cast<Index>(ncols));
  for (std::size_t r = 0; r < v.size(); ++r) {
    as_array(v[r], child(path, r), ncols);
    for (std::size_t c = 0; c < ncols; ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) = static_cast<int>(as_integer(v[r][c], child(child(path, r), c)));
  }
  return out;
}

json parse_document(const std::string& text, const std::string& expected_format) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("<root>", std::string("not valid JSON: ") + e.what());
  }
  const std::string format = as_string(field(doc, "", "format"), "format");
  if (format != expected_format) throw ParseError("format", "expected '" + expected_format + "', got '" + format + "'");
  const long long version = as_integer(field(doc, "", "version"), "version");
  if (version != kFormatVersion) throw ParseError("version", "unsupported version " + std::to_string(version));
  return doc;
}

void write_params_fields(Writer& w, const Params& params) {
  w.key("alpha").matrix(params.alpha);
  w.key("beta").matrix(params.beta);
}

Params read_params_fields(const json& obj, const std::string& path) {
  Params params;
  params.alpha = read_matrix(field(obj, path, "alpha"), child(path, "alpha"), std::nullopt, std::nullopt);
  params.beta = read_matrix(field(obj, path, "beta"), child(path, "beta"), static_cast<std::size_t>(params.alpha.rows()),
                            static_cast<std::size_t>(params.alpha.cols()));
  if (!params.feasible()) throw ParseError(path.empty() ? "alpha" : path, "require 0 <= alpha <= 1 and beta >= 0");
  return params;
}

}  // namespace

// ---- episodes ----

std::string write_episode(const EpisodeDocument& doc) {
  doc.spec.validate();
  doc.episode.validate(doc.spec);
  Writer w;
  w.begin_object();
  w.key("format").string("imab-episode");
  w.key("version").integer(kFormatVersion);
  w.key("arms").integer(doc.spec.arms);
  w.key("subsignals").integer(doc.spec.subsignals);
  w.key("weights").vector(doc.spec.weights);
  w.key("actions").begin_array(true);
  for (Index a : doc.episode.actions) w.integer(a);
  w.end_array();
  w.key("signals").begin_array();
  for (const auto& u : doc.episode.signals) w.matrix(u);
  w.end_array();
  if (doc.truth) {
    w.key("truth").begin_object();
    write_params_fields(w, doc.truth->params);
    w.key("reward_probs").vector(doc.truth->reward_probs);
    w.end_object();
  }
  w.end_object();
  return w.finish();
}

EpisodeDocument read_episode(const std::string& text) {
  const json doc = parse_document(text, "imab-episode");
  EpisodeDocument out;
  const long long m = as_integer(field(doc, "", "arms"), "arms");
  if (m < 2) throw ParseError("arms", "at least two arms are required");
  const long long k = as_integer(field(doc, "", "subsignals"), "subsignals");
  if (k < 1) throw ParseError("subsignals", "at least one subsignal is required");
  out.spec.arms = m;
  out.spec.subsignals = k;
  out.spec.weights = read_vector(field(doc, "", "weights"), "weights", static_cast<std::size_t>(k));

  const json& actions = as_array(field(doc, "", "actions"), "actions");
  if (actions.empty()) throw ParseError("actions", "at least one trial is required");
  for (std::size_t t = 0; t < actions.size(); ++t) {
    const long long a = as_integer(actions[t], child("actions", t));
    if (a < 0 || a >= m) throw ParseError(child("actions", t), "action outside [0, arms)");
    out.episode.actions.push_back(a);
  }
  const std::size_t n = actions.size();
  const json& signals = as_array(field(doc, "", "signals"), "signals", static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < signals.size(); ++i)
    out.episode.signals.push_back(read_matrix(signals[i], child("signals", i), n, static_cast<std::size_t>(m)));

  if (has(doc, "truth")) {
    const json& truth = doc["truth"];
    Truth t;
    t.params = read_params_fields(truth, "truth");
    if (t.params.subsignals() != k || t.params.arms() != m)
      throw ParseError("truth.alpha", "must be subsignals x arms");
    t.reward_probs = read_vector(field(truth, "truth", "reward_probs"), "truth.reward_probs", static_cast<std::size_t>(m));
    out.truth = std::move(t);
  }
  return out;
}

// ---- params ----

std::string write_params(const Params& params) {
  Writer w;
  w.begin_object();
  w.key("format").string("imab-params");
  w.key("version").integer(kFormatVersion);
  write_params_fields(w, params);
  w.end_object();
  return w.finish();
}

Params read_params(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("<root>", std::string("not valid JSON: ") + e.what());
  }
  if (doc.is_object() && doc.value("format", "") == "imab-report") {
    const ReportDocument report = read_report(text);
    if (report.report.params.alpha.size() == 0) throw ParseError("params", "report carries no parameters");
    return report.report.params;
  }
  doc = parse_document(text, "imab-params");
  return read_params_fields(doc, "");
}

// ---- reports ----

std::string write_report(const ReportDocument& doc) {
  const FitReport& r = doc.report;
  const FitOptions& o = doc.options;
  Writer w;
  w.begin_object();
  w.key("format").string("imab-report");
  w.key("version").integer(kFormatVersion);
  w.key("tool_version").string(doc.tool_version);
  w.key("command").string(doc.command);

  w.key("options").begin_object();
  w.key("method").string(to_string(o.method));
  if (o.depth) w.key("lag_depth").integer(*o.depth);
  else w.key("lag_depth").null();
  w.key("restarts").integer(o.restarts);
  w.key("eps_tilde").number(o.eps_tilde);
  w.key("seed").unsigned_integer(o.seed);
  w.key("alpha_init_max").number(o.alpha_init_max);
  w.key("beta_init_max").number(o.beta_init_max);
  w.key("logspace_floor").number(o.logspace_floor);
  w.key("direct_with_bound").boolean(o.direct_with_bound);
  w.key("solver").begin_object();
  w.key("max_iters").integer(o.solver.max_iters);
  w.key("rel_tol").number(o.solver.rel_tol);
  w.key("rel_window").integer(o.solver.rel_window);
  w.key("grad_tol").number(o.solver.grad_tol);
  w.key("initial_step").number(o.solver.initial_step);
  w.key("backtrack").number(o.solver.backtrack);
  w.end_object();
  w.end_object();

  w.key("method").string(to_string(r.method));
  w.key("trials").integer(r.trials);
  w.key("depth").integer(r.depth);
  if (r.params.alpha.size() > 0) {
    w.key("params").begin_object();
    write_params_fields(w, r.params);
    w.end_object();
  } else {
    w.key("params").null();
  }
  w.key("bound").string(to_string(r.bound_kind));
  w.key("J_lb").optional_number(r.lower_bound);
  w.key("J_ub").number(r.upper_bound);
  w.key("gap").optional_number(r.gap);
  w.key("L_total").optional_number(r.L_total);

  if (r.certificate) {
    const Certificate& c = *r.certificate;
    w.key("certificate").begin_object();
    w.key("global_optimal").boolean(c.global_optimal);
    w.key("full_depth").boolean(c.full_depth);
    w.key("L_total").number(c.L_total);
    w.key("epsilon").number(c.epsilon);
    w.key("eps_tilde").number(c.eps_tilde);
    w.key("max_abs_deviation").number(c.max_abs_deviation);
    w.key("gap").number(c.gap);
    w.key("decay_ratios").begin_array();
    for (const auto& d : c.decay_ratios) w.matrix(d);
    w.end_array();
    w.end_object();
  } else {
    w.key("certificate").null();
  }

  const FitDiagnostics& d = r.diagnostics;
  w.key("diagnostics").begin_object();
  w.key("solver_iterations").integer(d.solver_iterations);
  w.key("solver_converged").boolean(d.solver_converged);
  w.key("projected_gradient_norm").number(d.projected_gradient_norm);
  w.key("starts_used").matrix(d.starts_used);
  w.key("logspace_fallbacks").matrix(d.logspace_fallbacks);
  w.key("restarts").begin_array();
  for (const auto& s : d.restarts) {
    w.begin_object();
    w.key("index").integer(s.index);
    w.key("objective").number(s.objective);
    w.key("iterations").integer(s.iterations);
    w.key("converged").boolean(s.converged);
    w.end_object();
  }
  w.end_array();
  w.end_object();

  w.end_object();
  return w.finish();
}

ReportDocument read_report(const std::string& text) {
  const json doc = parse_document(text, "imab-report");
  ReportDocument out;
  out.tool_version = as_string(field(doc, "", "tool_version"), "tool_version");
  out.command = as_string(field(doc, "", "command"), "command");
  if (out.command != "fit" && out.command != "bound") throw ParseError("command", "expected 'fit' or 'bound'");

  const json& o = field(doc, "", "options");
  FitOptions& opt = out.options;
  try {
    opt.method = parse_fit_method(as_string(field(o, "options", "method"), "options.method"));
  } catch (const InvalidInput& e) {
    throw ParseError("options.method", e.what());
  }
  const json& depth = field(o, "options", "lag_depth");
  if (!depth.is_null()) opt.depth = as_integer(depth, "options.lag_depth");
  opt.restarts = static_cast<int>(as_integer(field(o, "options", "restarts"), "options.restarts"));
  opt.eps_tilde = as_finite(field(o, "options", "eps_tilde"), "options.eps_tilde");
  const json& seed = field(o, "options", "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    throw ParseError("options.seed", "expected a nonnegative integer");
  opt.seed = seed.get<std::uint64_t>();
  opt.alpha_init_max = as_finite(field(o, "options", "alpha_init_max"), "options.alpha_init_max");
  opt.beta_init_max = as_finite(field(o, "options", "beta_init_max"), "options.beta_init_max");
  opt.logspace_floor = as_finite(field(o, "options", "logspace_floor"), "options.logspace_floor");
  opt.direct_with_bound = as_bool(field(o, "options", "direct_with_bound"), "options.direct_with_bound");
  const json& s = field(o, "options", "solver");
  opt.solver.max_iters = static_cast<int>(as_integer(field(s, "options.solver", "max_iters"), "options.solver.max_iters"));
  opt.solver.rel_tol = as_finite(field(s, "options.solver", "rel_tol"), "options.solver.rel_tol");
  opt.solver.rel_window = static_cast<int>(as_integer(field(s, "options.solver", "rel_window"), "options.solver.rel_window"));
  opt.solver.grad_tol = as_finite(field(s, "options.solver", "grad_tol"), "options.solver.grad_tol");
  opt.solver.initial_step = as_finite(field(s, "options.solver", "initial_step"), "options.solver.initial_step");
  opt.solver.backtrack = as_finite(field(s, "options.solver", "backtrack"), "options.solver.backtrack");

  FitReport& r = out.report;
  try {
    r.method = parse_fit_method(as_string(field(doc, "", "method"), "method"));
  } catch (const InvalidInput& e) {
    throw ParseError("method", e.what());
  }
  r.trials = as_integer(field(doc, "", "trials"), "trials");
  r.depth = as_integer(field(doc, "", "depth"), "depth");
  const json& params = field(doc, "", "params");
  if (!params.is_null()) r.params = read_params_fields(params, "params");

  const std::string bound = as_string(field(doc, "", "bound"), "bound");
  if (bound == "exact") r.bound_kind = BoundKind::exact;
  else if (bound == "truncated") r.bound_kind = BoundKind::truncated;
  else if (bound == "absent") r.bound_kind = BoundKind::absent;
  else throw ParseError("bound", "expected exact, truncated or absent");
  r.lower_bound = as_optional(field(doc, "", "J_lb"), "J_lb");
  r.upper_bound = as_number(field(doc, "", "J_ub"), "J_ub");
  r.gap = as_optional(field(doc, "", "gap"), "gap");
  r.L_total = as_optional(field(doc, "", "L_total"), "L_total");

  const json& cert = field(doc, "", "certificate");
  if (!cert.is_null()) {
    Certificate c;
    c.global_optimal = as_bool(field(cert, "certificate", "global_optimal"), "certificate.global_optimal");
    c.full_depth = as_bool(field(cert, "certificate", "full_depth"), "certificate.full_depth");
    c.L_total = as_finite(field(cert, "certificate", "L_total"), "certificate.L_total");
    c.epsilon = as_finite(field(cert, "certificate", "epsilon"), "certificate.epsilon");
    c.eps_tilde = as_finite(field(cert, "certificate", "eps_tilde"), "certificate.eps_tilde");
    c.max_abs_deviation = as_finite(field(cert, "certificate", "max_abs_deviation"), "certificate.max_abs_deviation");
    c.gap = as_finite(field(cert, "certificate", "gap"), "certificate.gap");
    const json& ratios = as_array(field(cert, "certificate", "decay_ratios"), "certificate.decay_ratios");
    for (std::size_t i = 0; i < ratios.size(); ++i)
      c.decay_ratios.push_back(
          read_matrix(ratios[i], child("certificate.decay_ratios", i), std::nullopt, std::nullopt, true));
    r.certificate = std::move(c);
  }

  const json& d = field(doc, "", "diagnostics");
  FitDiagnostics& diag = r.diagnostics;
  diag.solver_iterations = static_cast<int>(as_integer(field(d, "diagnostics", "solver_iterations"), "diagnostics.solver_iterations"));
  diag.solver_converged = as_bool(field(d, "diagnostics", "solver_converged"), "diagnostics.solver_converged");
  diag.projected_gradient_norm =
      as_finite(field(d, "diagnostics", "projected_gradient_norm"), "diagnostics.projected_gradient_norm");
  diag.starts_used = read_int_matrix(field(d, "diagnostics", "starts_used"), "diagnostics.starts_used");
  diag.logspace_fallbacks = read_int_matrix(field(d, "diagnostics", "logspace_fallbacks"), "diagnostics.logspace_fallbacks");
  const json& restarts = as_array(field(d, "diagnostics", "restarts"), "diagnostics.restarts");
  for (std::size_t i = 0; i < restarts.size(); ++i) {
    const std::string p = child("diagnostics.restarts", i);
    RestartRecord rec;
    rec.index = static_cast<int>(as_integer(field(restarts[i], p, "index"), child(p, "index")));
    rec.objective = as_number(field(restarts[i], p, "objective"), child(p, "objective"));
    rec.iterations = static_cast<int>(as_integer(field(restarts[i], p, "iterations"), child(p, "iterations")));
    rec.converged = as_bool(field(restarts[i], p, "converged"), child(p, "converged"));
    diag.restarts.push_back(rec);
  }
  return out;
}

// ---- benchmark summary ----

namespace {

std::string csv_number(double v) { return std::isfinite(v) ? format_number(v) : ""; }
std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

}  // namespace

std::string bench_summary_csv(const BenchSummary& summary, const BenchConfig& config) {
  const Index k = static_cast<Index>(config.ranges.size());
  const Index m = config.arms;
  std::string out = "episode,true_ll";
  for (BenchMethod method : config.methods) {
    const std::string p = to_string(method) + "_";
    out += "," + p + "est_ll," + p + "j_lb," + p + "gap," + p + "certified," + p + "status";
    for (const char* name : {"alpha", "beta"})
      for (Index i = 0; i < k; ++i)
        for (Index j = 0; j < m; ++j)
          out += "," + p + name + "_err_" + std::to_string(i) + "_" + std::to_string(j);
  }
  out += '\n';

  for (const auto& record : summary.records) {
    out += std::to_string(record.id) + "," + csv_number(record.true_log_likelihood);
    for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
      const MethodRecord* result = mi < record.methods.size() ? &record.methods[mi] : nullptr;
      const FitReport* report = result && result->report ? &*result->report : nullptr;
      if (report) {
        const bool certified = report->certificate && report->certificate->global_optimal;
        out += "," + csv_number(-report->upper_bound) + "," + csv_number(report->lower_bound) + "," +
               csv_number(report->gap) + "," + (certified ? "1" : "0") + ",ok";
        for (const Eigen::MatrixXd* err : {&result->alpha_error, &result->beta_error})
          for (Index i = 0; i < k; ++i)
            for (Index j = 0; j < m; ++j) out += "," + csv_number((*err)(i, j));
      } else {
        out += ",,,,,error";
        for (Index c = 0; c < 2 * k * m; ++c) out += ",";
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace imab::io
