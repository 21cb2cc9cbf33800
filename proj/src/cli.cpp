#include "imab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "imab/io.hpp"
#include "imab/model.hpp"
#include "imab/pipeline.hpp"
#include "imab/sim.hpp"

namespace imab::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Streams {
  std::istream& in;
  std::ostream& out;
  std::ostream& err;
};

std::string read_input(const std::string& path, Streams& io) {
  if (path == "-") return {std::istreambuf_iterator<char>(io.in), std::istreambuf_iterator<char>()};
  std::ifstream file(path, std::ios::binary);
  if (!file) throw UsageError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(file), std::istreambuf_iterator<char>()};
}

void write_output(const std::string& path, const std::string& text, Streams& io) {
  if (path == "-") {
    io.out << text;
    io.out.flush();
    return;
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  file << text;
  if (!file) throw std::runtime_error("write to '" + path + "' failed");
}

std::string numbered(const std::string& stem, int id, const std::string& suffix) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d", id);
  return stem + buf + suffix;
}

int default_threads() {
  const char* env = std::getenv("IMAB_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 1 || n > 1024) throw UsageError("IMAB_THREADS must be a positive integer");
  return static_cast<int>(n);
}

// Flags shared by simulate and bench.
struct SimFlags {
  Index arms = 2;
  Index trials = 200;
  int episodes = 1;
  std::string scheme = "reward";
  std::uint64_t seed = 0;
  std::pair<double, double> alpha_range{0.0, 1.0};
  std::optional<std::pair<double, double>> beta_range;
  std::pair<double, double> act_alpha_range{0.0, 1.0};
  std::pair<double, double> act_beta_range{0.0, 5.0};
  std::vector<double> reward_probs;
  bool per_arm = false;
  bool shared = false;

  void attach(CLI::App& app) {
    app.add_option("--arms", arms, "Number of arms (>= 2)")->capture_default_str();
    app.add_option("--trials", trials, "Trials per episode")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--scheme", scheme, "Signal scheme: reward or reward+action")->capture_default_str();
    app.add_option("--seed", seed, "Batch seed")->capture_default_str();
    app.add_option("--alpha-range", alpha_range, "Reward-signal alpha draw range LO,HI")->delimiter(',');
    app.add_option("--beta-range", beta_range,
                   "Reward-signal beta draw range LO,HI (default 0,5; 0,10 with reward+action)")
        ->delimiter(',');
    app.add_option("--act-alpha-range", act_alpha_range, "Action-signal alpha draw range LO,HI")->delimiter(',');
    app.add_option("--act-beta-range", act_beta_range, "Action-signal beta draw range LO,HI")->delimiter(',');
    app.add_option("--reward-probs", reward_probs, "Fixed reward probabilities P1,P2,... (default U[0,1] per arm)")
        ->delimiter(',');
    auto* per = app.add_flag("--per-arm-draws", per_arm, "Draw (alpha, beta) separately for every arm");
    app.add_flag("--shared-draws", shared, "One (alpha, beta) per subsignal shared by all arms")->excludes(per);
  }

  BenchConfig config() const {
    if (arms < 2) throw UsageError("--arms must be at least 2");
    BenchConfig c;
    c.arms = arms;
    c.trials = trials;
    c.episodes = episodes;
    c.seed = seed;
    try {
      c.scheme = parse_signal_scheme(scheme);
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
    const bool two = c.scheme == SignalScheme::reward_and_action;
    ParamRange reward{alpha_range.first, alpha_range.second, 0.0, two ? 10.0 : 5.0};
    if (beta_range) std::tie(reward.beta_lo, reward.beta_hi) = *beta_range;
    c.ranges = {reward};
    if (two) c.ranges.push_back({act_alpha_range.first, act_alpha_range.second, act_beta_range.first, act_beta_range.second});
    c.per_arm_draws = per_arm || (two && !shared);
    if (!reward_probs.empty()) c.reward_probs = Eigen::Map<const Eigen::VectorXd>(reward_probs.data(), static_cast<Index>(reward_probs.size()));
    return c;
  }
};

// Flags shared by fit and bench.
struct FitFlags {
  int restarts = 10;
  double eps_tilde = 1e-5;
  double beta_init_max = 5.0;
  double alpha_init_max = 1.0;

  void attach(CLI::App& app) {
    app.add_option("--restarts", restarts, "Multistart count N")->capture_default_str();
    app.add_option("--eps-tilde", eps_tilde, "Per-entry certificate tolerance")->capture_default_str();
    app.add_option("--beta-init-max", beta_init_max, "Upper end of the random beta starts")->capture_default_str();
    app.add_option("--alpha-init-max", alpha_init_max, "Upper end of the random alpha starts")->capture_default_str();
  }

  void apply(FitOptions& options) const {
    options.restarts = restarts;
    options.eps_tilde = eps_tilde;
    options.beta_init_max = beta_init_max;
    options.alpha_init_max = alpha_init_max;
  }
};

io::EpisodeDocument load_episode(const std::string& path, Streams& io) {
  const std::string text = read_input(path, io);
  io::EpisodeDocument doc = io::read_episode(text);
  doc.truth.reset();  // fitting never sees the simulation ground truth
  return doc;
}

// ---- simulate ----

struct SimulateCommand {
  SimFlags sim;
  std::string out = "-";

  void attach(CLI::App& app) {
    sim.attach(app);
    app.add_option("--episodes", sim.episodes, "Episode count")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("-o,--out", out, "Output file, or a directory when --episodes > 1 (- for stdout)")
        ->capture_default_str();
  }

  int run(Streams& io) const {
    BenchConfig config = sim.config();
    config.validate();
    if (config.episodes > 1 && out == "-") throw UsageError("--out must name a directory when --episodes > 1");
    if (config.episodes > 1) std::filesystem::create_directories(out);
    for (int id = 0; id < config.episodes; ++id) {
      const EpisodeRecord record = simulate_bench_episode(config, id);
      io::EpisodeDocument doc;
      doc.spec = BanditSpec::uniform(config.arms, static_cast<Index>(config.ranges.size()));
      doc.episode = record.episode;
      doc.truth = io::Truth{record.truth, record.reward_probs};
      const std::string path =
          config.episodes == 1 ? out : (std::filesystem::path(out) / numbered("episode-", id, ".json")).string();
      write_output(path, io::write_episode(doc), io);
    }
    return kSuccess;
  }
};

// ---- fit ----

struct FitCommand {
  std::string in = "-";
  std::string out = "-";
  std::string method = "sequential";
  std::optional<Index> depth;
  std::uint64_t seed = 0;
  bool logspace = false;
  bool with_bound = false;
  int max_iters = SolverOptions{}.max_iters;
  FitFlags fit;

  void attach(CLI::App& app) {
    app.add_option("-i,--in", in, "Episode file (- for stdin)")->capture_default_str();
    app.add_option("-o,--out", out, "Report file (- for stdout)")->capture_default_str();
    app.add_option("--method", method, "sequential or direct")->capture_default_str()->check(
        CLI::IsMember({"sequential", "direct"}));
    app.add_option("--lag-depth", depth, "Lag depth p (default: the trial count)");
    app.add_option("--seed", seed, "Seed for the random starts")->capture_default_str();
    app.add_flag("--logspace-recovery", logspace, "Recover parameters with the log-space fit");
    app.add_flag("--with-bound", with_bound, "Also solve the relaxation for a direct fit");
    app.add_option("--max-iters", max_iters, "Iteration cap of the relaxation solver")->capture_default_str();
    fit.attach(app);
  }

  int run(Streams& io) const {
    if (logspace && method == "direct") throw UsageError("--logspace-recovery applies to the sequential method only");
    const io::EpisodeDocument doc = load_episode(in, io);
    io::ReportDocument report;
    report.command = "fit";
    FitOptions& options = report.options;
    fit.apply(options);
    options.depth = depth;
    options.seed = seed;
    options.method = logspace ? FitMethod::logspace_recovery : parse_fit_method(method);
    options.direct_with_bound = with_bound;
    options.solver.max_iters = max_iters;
    try {
      options.validate(doc.episode.trials());
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }

    bool converged = true;
    try {
      report.report = imab::fit(doc.episode, doc.spec, options);
    } catch (const FitError& e) {
      io.err << "imab fit: " << e.what() << "\n";
      report.report = e.partial();
      write_output(out, io::write_report(report), io);
      return kNotConverged;
    }
    const FitReport& r = report.report;
    if (r.method == FitMethod::direct) {
      const RestartRecord* best = nullptr;
      for (const auto& s : r.diagnostics.restarts)
        if (!best || s.objective < best->objective) best = &s;
      converged = best && best->converged;
      if (options.direct_with_bound) converged = converged && r.diagnostics.solver_converged;
    } else {
      converged = r.diagnostics.solver_converged;
    }
    write_output(out, io::write_report(report), io);
    if (!converged) {
      io.err << "imab fit: solver did not converge\n";
      return kNotConverged;
    }
    return kSuccess;
  }
};

// ---- bound ----

struct BoundCommand {
  std::string in = "-";
  std::string out = "-";
  std::optional<Index> depth;
  std::string params_path;
  bool audit = false;
  int max_iters = SolverOptions{}.max_iters;

  void attach(CLI::App& app) {
    app.add_option("-i,--in", in, "Episode file (- for stdin)")->capture_default_str();
    app.add_option("-o,--out", out, "Report file (- for stdout)")->capture_default_str();
    app.add_option("--lag-depth", depth, "Lag depth p (default: the trial count)");
    app.add_option("--params", params_path, "Parameter or report file to audit against the bound");
    app.add_flag("--audit", audit, "Report the gap of the --params file");
    app.add_option("--max-iters", max_iters, "Iteration cap of the relaxation solver")->capture_default_str();
  }

  int run(Streams& io) const {
    if (audit && params_path.empty()) throw UsageError("--audit requires --params");
    const io::EpisodeDocument doc = load_episode(in, io);
    io::ReportDocument report;
    report.command = "bound";
    FitOptions& options = report.options;
    options.depth = depth;
    options.solver.max_iters = max_iters;
    try {
      options.validate(doc.episode.trials());
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }

    FitReport& r = report.report;
    const LowerBound bound = lower_bound_only(doc.episode, doc.spec, options);
    r.trials = doc.episode.trials();
    r.depth = options.resolved_depth(r.trials);
    r.bound_kind = bound.truncated ? BoundKind::truncated : BoundKind::exact;
    r.lower_bound = bound.value;
    r.upper_bound = std::numeric_limits<double>::quiet_NaN();
    r.diagnostics.solver_iterations = bound.solution.iterations;
    r.diagnostics.solver_converged = bound.solution.converged;
    r.diagnostics.projected_gradient_norm = bound.solution.projected_gradient_norm;
    if (!params_path.empty()) {
      Params params = io::read_params(read_input(params_path, io));
      try {
        params.validate(doc.spec);
      } catch (const InvalidInput& e) {
        throw UsageError(std::string("--params: ") + e.what());
      }
      r.params = std::move(params);
      r.upper_bound = objective_J(r.params, doc.episode, doc.spec);
      r.gap = std::abs(r.upper_bound - bound.value);
    }
    write_output(out, io::write_report(report), io);
    if (!r.diagnostics.solver_converged) {
      io.err << "imab bound: solver did not converge\n";
      return kNotConverged;
    }
    return kSuccess;
  }
};

// ---- bench ----

struct BenchCommand {
  SimFlags sim;
  FitFlags fit;
  std::string out = "-";
  std::string reports_dir;
  std::vector<std::string> methods{"sequential"};
  Index truncated_depth = 5;
  std::optional<int> threads;
  bool full = false;

  void attach(CLI::App& app) {
    sim.episodes = 100;
    sim.attach(app);
    fit.attach(app);
    auto* count = app.add_option("--episodes", sim.episodes, "Episode count")->capture_default_str()->check(
        CLI::PositiveNumber);
    app.add_flag("--full", full, "Run 1000 episodes")->excludes(count);
    app.add_option("--methods", methods, "Comma-separated: sequential,truncated,direct,logspace")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--truncated-depth", truncated_depth, "Lag depth of the truncated method")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (default: IMAB_THREADS or 1)");
    app.add_option("-o,--out", out, "Summary CSV (- for stdout)")->capture_default_str();
    app.add_option("--reports-dir", reports_dir, "Also write one report per episode and method here");
  }

  int run(Streams& io) const {
    BenchConfig config = sim.config();
    if (full) config.episodes = 1000;
    fit.apply(config.fit);
    config.truncated_depth = truncated_depth;
    config.threads = threads ? *threads : default_threads();
    config.methods.clear();
    try {
      for (const auto& name : methods) config.methods.push_back(parse_bench_method(name));
      config.validate();
      config.fit.validate(config.trials);
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }

    const BenchSummary summary = run_benchmark(config);
    write_output(out, io::bench_summary_csv(summary, config), io);

    if (!reports_dir.empty()) std::filesystem::create_directories(reports_dir);
    for (const auto& record : summary.records) {
      for (const auto& result : record.methods) {
        const std::string name = to_string(result.method);
        if (!result.report) {
          io.err << "episode " << record.id << " " << name << ": " << result.error << "\n";
          continue;
        }
        if (reports_dir.empty()) continue;
        io::ReportDocument doc;
        doc.options = bench_fit_options(config, record.id, result.method);
        doc.report = *result.report;
        const auto path = std::filesystem::path(reports_dir) / numbered("episode-", record.id, "-" + name + ".json");
        write_output(path.string(), io::write_report(doc), io);
      }
    }
    for (const auto& agg : summary.aggregates) {
      io.err << to_string(agg.method) << ": " << agg.succeeded << " ok, " << agg.failed << " failed, median J_ub "
             << io::format_number(agg.median_upper_bound);
      if (agg.method != BenchMethod::direct && agg.method != BenchMethod::truncated)
        io.err << ", median gap " << io::format_number(agg.median_gap) << ", certified " << agg.certified;
      io.err << "\n";
    }
    return summary.success_rate() >= 0.9 ? kSuccess : kBatchFailure;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  Streams io{in, out, err};
  CLI::App app{"Parameter estimation for forgetting Q-learning bandit agents", "imab"};
  app.require_subcommand(1);

  SimulateCommand simulate;
  FitCommand fit;
  BoundCommand bound;
  BenchCommand bench;
  auto* simulate_app = app.add_subcommand("simulate", "Simulate agents and write episode files");
  auto* fit_app = app.add_subcommand("fit", "Fit parameters to an episode file");
  auto* bound_app = app.add_subcommand("bound", "Compute the relaxation lower bound only");
  auto* bench_app = app.add_subcommand("bench", "Simulate and fit a batch, write a CSV summary");
  simulate.attach(*simulate_app);
  fit.attach(*fit_app);
  bound.attach(*bound_app);
  bench.attach(*bench_app);

  try {
    app.parse(std::vector<std::string>(args.rbegin(), args.rend()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kUsage;
  }

  try {
    if (*simulate_app) return simulate.run(io);
    if (*fit_app) return fit.run(io);
    if (*bound_app) return bound.run(io);
    return bench.run(io);
  } catch (const UsageError& e) {
    err << "imab: " << e.what() << "\n";
    return kUsage;
  } catch (const io::ParseError& e) {
    err << "imab: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidInput& e) {
    err << "imab: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "imab: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace imab::cli
