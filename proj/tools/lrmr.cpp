// lrmr: command-line front end for recovery runs, sweeps and analysis checks.
//
// Every subcommand prints one JSON document whose "args" object echoes each
// flag with its effective value. LRMR_SEED, when set, replaces the master seed
// of every subcommand. Exit status: 0 on success, 2 when some solve did not
// converge, 1 on invalid input or I/O failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "lrmr/analysis.hpp"
#include "lrmr/bench.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/matrix_io.hpp"
#include "lrmr/rng.hpp"

namespace {

using nlohmann::json;

constexpr int kExitPartial = 2;
constexpr int kExitError = 1;

struct OpFlags {
  std::string kind = "gaussian";
  std::size_t n1 = 20;
  std::size_t n2 = 0;
  std::size_t m = 0;
  std::uint64_t seed = 1;
  std::string manifest;
};

struct SolverFlags {
  lrmr::SolverConfig cfg;
  bool no_continuation = false;
};

void add_op_flags(CLI::App* app, OpFlags& f) {
  app->add_option("--op-kind", f.kind, "gaussian, bernoulli, entry_mask or identity");
  app->add_option("--n1", f.n1, "rows of the unknown matrix");
  app->add_option("--n2", f.n2, "columns (default n1)");
  app->add_option("--m", f.m, "number of measurements (default n1*n2 for identity)");
  app->add_option("--op-seed", f.seed, "seed of the random ensemble");
  app->add_option("--op", f.manifest, "operator manifest JSON; overrides the flags above");
}

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--max-iters", f.cfg.max_iters);
  app->add_option("--rel-tol", f.cfg.rel_tol);
  app->add_option("--step-scale", f.cfg.step_scale);
  app->add_option("--admm-rho", f.cfg.admm_rho);
  app->add_flag("--no-continuation", f.no_continuation);
}

lrmr::SolverConfig config_of(const SolverFlags& f) {
  lrmr::SolverConfig cfg = f.cfg;
  cfg.continuation = !f.no_continuation;
  return cfg;
}

lrmr::MeasOp build_op(const OpFlags& f) {
  if (!f.manifest.empty()) return lrmr::read_op_manifest(f.manifest);
  const std::size_t n2 = f.n2 == 0 ? f.n1 : f.n2;
  const auto kind = lrmr::parse_op_kind(f.kind);
  const std::size_t m = f.m == 0 ? f.n1 * n2 : f.m;
  return lrmr::make_ensemble(kind, f.n1, n2, m, f.seed);
}

std::uint64_t seed_override(std::uint64_t seed) {
  if (const char* env = std::getenv("LRMR_SEED"); env != nullptr && *env != '\0') {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw lrmr::ArgumentError(std::string("LRMR_SEED is not an unsigned integer: ") + env);
    }
  }
  return seed;
}

json echo_args(const CLI::App* app) {
  json args = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    const std::string name = opt->get_single_name();
    if (name == "help" || name.empty()) continue;
    if (opt->get_expected_min() == 0) {
      args[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      const auto& res = opt->results();
      args[name] = res.size() == 1 ? json(res.front()) : json(res);
    } else {
      args[name] = opt->get_default_str();
    }
  }
  if (const char* env = std::getenv("LRMR_SEED"); env != nullptr && *env != '\0') {
    args["LRMR_SEED"] = env;
  }
  return args;
}

void emit(const json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2);
  std::cout << text << '\n';
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw lrmr::IoError("cannot open for writing: " + out_path);
    out << text << '\n';
    if (!out) throw lrmr::IoError("write failed: " + out_path);
  }
}

lrmr::SpectrumRule spectrum_of(const std::string& rule, double top, double ratio) {
  lrmr::SpectrumRule s;
  s.top = top;
  s.ratio = ratio;
  if (rule == "geometric") {
    s.kind = lrmr::SpectrumRule::Kind::geometric;
  } else if (rule != "flat") {
    throw lrmr::ArgumentError("--spectrum must be flat or geometric");
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-rank matrix recovery experiments"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  // recover
  auto* recover = app.add_subcommand("recover", "one seeded recovery run");
  lrmr::RecoverArgs ra;
  std::string r_kind = "gaussian", r_solver = "dantzig", r_spectrum = "flat", r_out;
  double r_top = 1.0, r_ratio = 0.5;
  std::optional<double> r_reg;
  SolverFlags r_sf;
  ra.n1 = 30;
  ra.n2 = 0;
  ra.m = 300;
  ra.rank = 2;
  recover->add_option("--op-kind", r_kind);
  recover->add_option("--n1", ra.n1);
  recover->add_option("--n2", ra.n2, "default n1");
  recover->add_option("--m", ra.m);
  recover->add_option("--rank", ra.rank);
  recover->add_option("--spectrum", r_spectrum, "flat or geometric");
  recover->add_option("--spectrum-top", r_top);
  recover->add_option("--spectrum-ratio", r_ratio);
  recover->add_option("--sigma", ra.sigma);
  recover->add_option("--solver", r_solver, "dantzig or lasso");
  recover->add_option("--reg", r_reg, "lambda or mu; default C sqrt(n) sigma");
  recover->add_option("--seed", ra.seed);
  recover->add_option("--trial", ra.trial);
  recover->add_option("--out", r_out, "directory for estimate.csv and record.json");
  add_solver_flags(recover, r_sf);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "factorial experiment from a JSON spec");
  std::string s_spec, s_out;
  unsigned s_workers = 0;
  sweep->add_option("--spec", s_spec)->required();
  sweep->add_option("--out", s_out)->required();
  sweep->add_option("--workers", s_workers, "0 = all cores");

  // rip
  auto* rip = app.add_subcommand("rip", "empirical isometry constant");
  OpFlags rip_op;
  rip_op.m = 400;
  std::size_t rip_rank = 1;
  int rip_trials = 100, rip_ascent = 50;
  std::uint64_t rip_seed = 0;
  unsigned rip_workers = 0;
  std::string rip_out;
  add_op_flags(rip, rip_op);
  rip->add_option("--rank", rip_rank);
  rip->add_option("--trials", rip_trials);
  rip->add_option("--ascent-iters", rip_ascent);
  rip->add_option("--seed", rip_seed);
  rip->add_option("--workers", rip_workers);
  rip->add_option("--out", rip_out, "also write the JSON here");

  // nnq
  auto* nnq = app.add_subcommand("nnq", "empirical NNQ constant");
  OpFlags nnq_op;
  nnq_op.n1 = 16;
  nnq_op.m = 64;
  int nnq_trials = 20;
  std::uint64_t nnq_seed = 0;
  unsigned nnq_workers = 0;
  std::string nnq_out;
  SolverFlags nnq_sf;
  nnq_sf.cfg.max_iters = 20000;
  add_op_flags(nnq, nnq_op);
  nnq->add_option("--trials", nnq_trials);
  nnq->add_option("--seed", nnq_seed);
  nnq->add_option("--workers", nnq_workers);
  nnq->add_option("--out", nnq_out);
  add_solver_flags(nnq, nnq_sf);

  // oracle
  auto* oracle = app.add_subcommand("oracle", "oracle estimator on the true column space");
  OpFlags or_op;
  or_op.n1 = 30;
  or_op.m = 720;
  std::size_t or_rank = 2;
  double or_sigma = 0.1, or_top = 1.0, or_ratio = 0.5;
  std::string or_spectrum = "flat", or_out;
  std::uint64_t or_seed = 0;
  add_op_flags(oracle, or_op);
  oracle->add_option("--rank", or_rank);
  oracle->add_option("--sigma", or_sigma);
  oracle->add_option("--spectrum", or_spectrum);
  oracle->add_option("--spectrum-top", or_top);
  oracle->add_option("--spectrum-ratio", or_ratio);
  oracle->add_option("--seed", or_seed, "seed of the truth and the noise");
  oracle->add_option("--out", or_out);

  // concentration
  auto* conc = app.add_subcommand("concentration", "tail of |‖A(x)‖² − 1| over fresh operators");
  std::string c_kind = "gaussian", c_out;
  std::size_t c_n1 = 10, c_n2 = 0, c_m = 500;
  double c_t = 0.5;
  int c_trials = 2000;
  std::uint64_t c_seed = 0;
  unsigned c_workers = 0;
  conc->add_option("--op-kind", c_kind);
  conc->add_option("--n1", c_n1);
  conc->add_option("--n2", c_n2, "default n1");
  conc->add_option("--m", c_m);
  conc->add_option("--t", c_t);
  conc->add_option("--trials", c_trials);
  conc->add_option("--seed", c_seed);
  conc->add_option("--workers", c_workers);
  conc->add_option("--out", c_out);

  // plot
  auto* plot = app.add_subcommand("plot", "log-log SVG from a records CSV");
  std::string p_csv, p_x = "sigma", p_y = "err_fro_sq", p_group = "solver", p_out;
  plot->add_option("--csv", p_csv)->required();
  plot->add_option("--x", p_x);
  plot->add_option("--y", p_y);
  plot->add_option("--group-by", p_group);
  plot->add_option("--out", p_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (recover->parsed()) {
      ra.op_kind = lrmr::parse_op_kind(r_kind);
      if (ra.n2 == 0) ra.n2 = ra.n1;
      ra.solver = lrmr::parse_solver_kind(r_solver);
      ra.spectrum = spectrum_of(r_spectrum, r_top, r_ratio);
      ra.reg_value = r_reg;
      ra.seed = seed_override(ra.seed);
      ra.cfg = config_of(r_sf);
      const lrmr::RecoverOutcome out = lrmr::run_recover(ra);
      json doc = {{"command", "recover"}, {"args", echo_args(recover)}, {"reg", out.reg},
                  {"record", out.record}};
      if (!r_out.empty() && out.record.error.empty()) {
        std::filesystem::create_directories(r_out);
        doc["result"] = lrmr::result_json(out.result, std::filesystem::path(r_out) / "estimate.csv", r_out);
        emit(doc, (std::filesystem::path(r_out) / "record.json").string());
      } else {
        emit(doc, "");
      }
      return out.record.converged ? 0 : kExitPartial;
    }
    if (sweep->parsed()) {
      lrmr::ExperimentSpec spec = lrmr::read_spec(s_spec);
      spec.master_seed = seed_override(spec.master_seed);
      const lrmr::ExperimentReport report = lrmr::run_sweep(spec, s_out, s_workers);
      json summary = json(report)["summary"];
      emit({{"command", "sweep"},
            {"args", echo_args(sweep)},
            {"records", report.records.size()},
            {"all_converged", report.all_converged()},
            {"summary", summary}},
           "");
      return report.all_converged() ? 0 : kExitPartial;
    }
    if (rip->parsed()) {
      const lrmr::MeasOp op = build_op(rip_op);
      const auto est = lrmr::empirical_delta(op, rip_rank, rip_trials, rip_ascent,
                                             seed_override(rip_seed), rip_workers);
      emit({{"command", "rip"}, {"args", echo_args(rip)}, {"estimate", est}}, rip_out);
      return 0;
    }
    if (nnq->parsed()) {
      const lrmr::MeasOp op = build_op(nnq_op);
      const auto est = lrmr::nnq_alpha(op, nnq_trials, config_of(nnq_sf), seed_override(nnq_seed),
                                       nnq_workers);
      emit({{"command", "nnq"}, {"args", echo_args(nnq)}, {"estimate", est}}, nnq_out);
      return est.excluded.empty() ? 0 : kExitPartial;
    }
    if (oracle->parsed()) {
      const lrmr::MeasOp op = build_op(or_op);
      const std::uint64_t seed = seed_override(or_seed);
      const auto spectrum = spectrum_of(or_spectrum, or_top, or_ratio);
      const lrmr::Mat truth = lrmr::random_low_rank(op.n1(), op.n2(), or_rank,
                                                    spectrum.spectrum(or_rank),
                                                    lrmr::derive_seed(seed, {1}));
      std::vector<double> y = lrmr::apply(op, truth);
      const lrmr::CounterStream noise(lrmr::derive_seed(seed, {3}));
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += or_sigma * noise.normal(i);
      const lrmr::SvdFactors f = lrmr::svd(truth);
      lrmr::Mat u(op.n1(), or_rank);
      for (std::size_t k = 0; k < or_rank; ++k) {
        for (std::size_t i = 0; i < op.n1(); ++i) u(i, k) = f.u(i, k);
      }
      const auto rep = lrmr::oracle_report(op, y, truth, u, or_sigma);
      emit({{"command", "oracle"}, {"args", echo_args(oracle)}, {"report", rep}}, or_out);
      return 0;
    }
    if (conc->parsed()) {
      const std::size_t n2 = c_n2 == 0 ? c_n1 : c_n2;
      const std::uint64_t seed = seed_override(c_seed);
      lrmr::Mat x = lrmr::gaussian_matrix(c_n1, n2, lrmr::derive_seed(seed, {0x78}));
      x *= 1.0 / lrmr::norm(x, lrmr::NormKind::frobenius);
      const auto est = lrmr::concentration_check(lrmr::parse_op_kind(c_kind), c_n1, n2, c_m, x, c_t,
                                                 c_trials, seed, c_workers);
      emit({{"command", "concentration"}, {"args", echo_args(conc)}, {"estimate", est}}, c_out);
      return 0;
    }
    if (plot->parsed()) {
      const auto records = lrmr::parse_csv(p_csv);
      lrmr::emit_svg_plot(records, p_x, p_y, p_group, p_out);
      emit({{"command", "plot"}, {"args", echo_args(plot)}, {"points", records.size()}}, "");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "lrmr: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
