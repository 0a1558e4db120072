#pragma once

// Seeded recovery experiments: one-off runs, factorial sweeps, and their CSV,
// JSON and SVG artifacts.
//
// Trial data is keyed by values, not positions: trial t of the cell (m, r)
// draws its truth, operator and noise direction from derive_seed(master, {m, r, t}),
// and the noise is sigma times that direction. Every sigma and solver in a
// cell therefore sees the same M, A and z / sigma, and removing a cell from a
// spec leaves every other record unchanged.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrmr/mat.hpp"
#include "lrmr/measop.hpp"
#include "lrmr/solvers.hpp"

namespace lrmr {

struct SpectrumRule {
  enum class Kind { flat, geometric, explicit_list };
  Kind kind = Kind::flat;
  /// Largest singular value for flat and geometric rules.
  double top = 1.0;
  /// sigma_{i+1} / sigma_i for the geometric rule.
  double ratio = 0.5;
  /// Explicit singular values, nonincreasing; the first r are used.
  std::vector<double> values;

  /// The r leading singular values. Throws ArgumentError if the rule cannot supply them.
  std::vector<double> spectrum(std::size_t r) const;
};

enum class SolverChoice { dantzig, lasso, both };

struct ExperimentSpec {
  std::string name = "experiment";
  OpKind op_kind = OpKind::gaussian;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::vector<std::size_t> m_values;
  std::vector<std::size_t> rank_values;
  SpectrumRule spectrum;
  std::vector<double> sigma_values;
  SolverChoice solver = SolverChoice::dantzig;
  /// Empty means the default_regularization rule.
  std::optional<double> reg_value;
  int trials_per_cell = 1;
  std::uint64_t master_seed = 0;
  SolverConfig solver_config;

  /// Throws ArgumentError on empty sequences, nonpositive sizes or out-of-range values.
  void validate() const;
};

/// Missing keys take the defaults above; every key is written back by to_json.
ExperimentSpec parse_spec(const nlohmann::json& j);
ExperimentSpec read_spec(const std::filesystem::path& path);
void to_json(nlohmann::json& j, const ExperimentSpec& spec);

struct BenchRecord {
  int trial = 0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t m = 0;
  std::size_t rank = 0;
  double sigma = 0.0;
  std::string solver;
  double err_fro_sq = 0.0;
  double ideal_risk = 0.0;
  /// n r sigma² with n = max(n1, n2)
  double minimax_ref = 0.0;
  double ratio_ideal = 0.0;
  double ratio_minimax = 0.0;
  double dual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
  /// Message of an exception raised while running the trial; not a CSV column.
  std::string error;
};

inline constexpr std::string_view kCsvHeader =
    "trial,n1,n2,m,rank,sigma,solver,err_fro_sq,ideal_risk,minimax_ref,ratio_ideal,"
    "ratio_minimax,dual_norm,iterations,converged,wall_ms";

/// Fills the derived fields (ideal_risk excluded) from err_fro_sq, n1, n2, rank and sigma.
void fill_ratios(BenchRecord& rec);

void to_json(nlohmann::json& j, const BenchRecord& rec);

struct TrialData {
  Mat truth;
  MeasOp op;
  std::vector<double> y;
};

/// Truth, operator and measurements for one trial.
TrialData make_trial(OpKind kind, std::size_t n1, std::size_t n2, std::size_t m, std::size_t r,
                     const SpectrumRule& spectrum, double sigma, std::uint64_t seed);

struct RecoverArgs {
  OpKind op_kind = OpKind::gaussian;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t m = 0;
  std::size_t rank = 1;
  SpectrumRule spectrum;
  double sigma = 0.0;
  SolverKind solver = SolverKind::dantzig;
  std::optional<double> reg_value;
  std::uint64_t seed = 0;
  int trial = 0;
  SolverConfig cfg;
};

struct RecoverOutcome {
  RecoveryResult result;
  BenchRecord record;
  Mat truth;
  /// Regularization actually used.
  double reg = 0.0;
};

/// Generates data from derive_seed(seed, {m, rank, trial}) and solves. Solver
/// exceptions are caught and stored in record.error with converged = false.
RecoverOutcome run_recover(const RecoverArgs& args);

struct CellSummary {
  std::size_t m = 0;
  std::size_t rank = 0;
  double sigma = 0.0;
  std::string solver;
  int trials = 0;
  int converged = 0;
  double median_ratio_ideal = 0.0;
  double max_ratio_ideal = 0.0;
  double median_ratio_minimax = 0.0;
  double max_ratio_minimax = 0.0;
  double median_err = 0.0;
};

struct ExperimentReport {
  ExperimentSpec spec;
  /// In spec order: m, rank, sigma, solver, trial.
  std::vector<BenchRecord> records;
  std::vector<CellSummary> summary;

  bool all_converged() const;
};

std::vector<CellSummary> summarize(const std::vector<BenchRecord>& records);

/// Runs the full factorial on `workers` threads (0 = all cores). When `out_dir`
/// is non-empty, each record is appended to out_dir/records.partial.csv as it
/// finishes; on completion records.csv and report.json are written and the
/// partial file is removed.
ExperimentReport run_sweep(const ExperimentSpec& spec, const std::filesystem::path& out_dir = {},
                           unsigned workers = 0);

void to_json(nlohmann::json& j, const ExperimentReport& report);

std::string csv_row(const BenchRecord& rec);
/// Header plus one row per record. Throws IoError naming the path.
void emit_csv(const std::vector<BenchRecord>& records, const std::filesystem::path& path);
/// Inverse of emit_csv. Throws ArgumentError on a malformed header or row.
std::vector<BenchRecord> parse_csv(const std::filesystem::path& path);

/// Numeric CSV column by name; throws ArgumentError for unknown or text columns.
double column_value(const BenchRecord& rec, std::string_view column);
/// Any CSV column rendered as text, for grouping.
std::string column_label(const BenchRecord& rec, std::string_view column);

/// Least-squares slope of log y against log x over points with x, y > 0.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Log-log plot of the per-x median of y_axis, with min/max whiskers, one line
/// per distinct group_by value. Output is a pure function of the inputs.
std::string svg_plot(const std::vector<BenchRecord>& records, std::string_view x_axis,
                     std::string_view y_axis, std::string_view group_by);
void emit_svg_plot(const std::vector<BenchRecord>& records, std::string_view x_axis,
                   std::string_view y_axis, std::string_view group_by,
                   const std::filesystem::path& path);

}  // namespace lrmr
