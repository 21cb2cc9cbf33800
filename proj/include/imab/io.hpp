#ifndef IMAB_IO_HPP
#define IMAB_IO_HPP

// File formats. Episodes, parameters and fit reports are JSON documents with
// a "format" tag and an integer "version"; benchmark summaries are CSV.
// Floating-point numbers are written with 17 significant digits, and
// non-finite values as null.

#include <optional>
#include <stdexcept>
#include <string>

#include "imab/pipeline.hpp"
#include "imab/sim.hpp"
#include "imab/types.hpp"

namespace imab::io {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kFormatVersion = 1;

/// Malformed document. field() is the path of the first offending field,
/// e.g. "signals[0][12]".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& field, const std::string& problem)
      : std::runtime_error("field '" + field + "': " + problem), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

/// Simulation ground truth, kept under a separate "truth" key.
struct Truth {
  Params params;
  Eigen::VectorXd reward_probs;
};

struct EpisodeDocument {
  BanditSpec spec;
  Episode episode;
  std::optional<Truth> truth;
};

std::string write_episode(const EpisodeDocument& doc);
EpisodeDocument read_episode(const std::string& text);

std::string write_params(const Params& params);
/// Accepts an "imab-params" document or the "params" field of a report.
Params read_params(const std::string& text);

struct ReportDocument {
  std::string command = "fit";  // "fit" or "bound"
  std::string tool_version = kToolVersion;
  FitOptions options;
  FitReport report;
};

/// Reports without parameters (a plain bound) store params as 0 x 0 and
/// upper_bound as NaN; both are written as null.
std::string write_report(const ReportDocument& doc);
ReportDocument read_report(const std::string& text);

/// One row per episode: id, true log-likelihood, then for every method its
/// estimated log-likelihood, J_lb, gap, certified flag, status and the
/// absolute parameter errors in (subsignal, arm) order.
std::string bench_summary_csv(const BenchSummary& summary, const BenchConfig& config);

/// %.17g, or "null" when not finite.
std::string format_number(double value);

}  // namespace imab::io

#endif  // IMAB_IO_HPP
