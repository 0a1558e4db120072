#include "lrmr/bench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <tuple>

#include "lrmr/analysis.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/gram.hpp"
#include "lrmr/rng.hpp"
#include "parallel.hpp"

namespace lrmr {

namespace {

std::string_view to_string(SpectrumRule::Kind kind) {
  switch (kind) {
    case SpectrumRule::Kind::flat: return "flat";
    case SpectrumRule::Kind::geometric: return "geometric";
    case SpectrumRule::Kind::explicit_list: return "explicit";
  }
  return "flat";
}

std::string_view to_string(SolverChoice c) {
  switch (c) {
    case SolverChoice::dantzig: return "dantzig";
    case SolverChoice::lasso: return "lasso";
    case SolverChoice::both: return "both";
  }
  return "dantzig";
}

SolverChoice parse_choice(std::string_view s) {
  if (s == "dantzig") return SolverChoice::dantzig;
  if (s == "lasso") return SolverChoice::lasso;
  if (s == "both") return SolverChoice::both;
  throw ArgumentError("spec: solver must be dantzig, lasso or both, got " + std::string(s));
}

std::vector<SolverKind> solvers_of(SolverChoice c) {
  switch (c) {
    case SolverChoice::dantzig: return {SolverKind::dantzig};
    case SolverChoice::lasso: return {SolverKind::lasso};
    case SolverChoice::both: return {SolverKind::dantzig, SolverKind::lasso};
  }
  return {};
}

SpectrumRule parse_spectrum(const nlohmann::json& j) {
  SpectrumRule rule;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "flat") return rule;
    if (name == "geometric") {
      rule.kind = SpectrumRule::Kind::geometric;
      return rule;
    }
    throw ArgumentError("spec: unknown spectrum_rule " + name);
  }
  if (j.is_array()) {
    rule.kind = SpectrumRule::Kind::explicit_list;
    rule.values = j.get<std::vector<double>>();
    return rule;
  }
  if (!j.is_object()) throw ArgumentError("spec: spectrum_rule must be a string, list or object");
  const auto kind = j.value("kind", std::string("flat"));
  if (kind == "flat") {
    rule.kind = SpectrumRule::Kind::flat;
  } else if (kind == "geometric") {
    rule.kind = SpectrumRule::Kind::geometric;
  } else if (kind == "explicit") {
    rule.kind = SpectrumRule::Kind::explicit_list;
  } else {
    throw ArgumentError("spec: unknown spectrum_rule kind " + kind);
  }
  rule.top = j.value("top", rule.top);
  rule.ratio = j.value("ratio", rule.ratio);
  if (j.contains("values")) rule.values = j.at("values").get<std::vector<double>>();
  return rule;
}

nlohmann::json spectrum_json(const SpectrumRule& rule) {
  nlohmann::json j = {{"kind", to_string(rule.kind)}};
  if (rule.kind == SpectrumRule::Kind::explicit_list) {
    j["values"] = rule.values;
  } else {
    j["top"] = rule.top;
    if (rule.kind == SpectrumRule::Kind::geometric) j["ratio"] = rule.ratio;
  }
  return j;
}

template <class T>
std::vector<T> nonempty_list(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) throw ArgumentError(std::string("spec: missing ") + key);
  const auto& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

double max_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : *std::max_element(v.begin(), v.end());
}

BenchRecord base_record(const RecoverArgs& a) {
  BenchRecord rec;
  rec.trial = a.trial;
  rec.n1 = a.n1;
  rec.n2 = a.n2;
  rec.m = a.m;
  rec.rank = a.rank;
  rec.sigma = a.sigma;
  rec.solver = std::string(to_string(a.solver));
  return rec;
}

double regularization(const RecoverArgs& a) {
  return a.reg_value ? *a.reg_value : default_regularization(a.n1, a.n2, a.sigma, a.solver);
}

// Solves one (data, sigma, solver) instance and fills its record.
RecoverOutcome solve_instance(const RecoverArgs& a, const TrialData& data,
                              const GramSpectrum* spectrum) {
  RecoverOutcome out;
  out.record = base_record(a);
  out.truth = data.truth;
  out.reg = regularization(a);
  out.result = a.solver == SolverKind::dantzig
                   ? solve_dantzig(data.op, data.y, out.reg, a.cfg, spectrum)
                   : solve_lasso(data.op, data.y, out.reg, a.cfg);
  BenchRecord& rec = out.record;
  const double err = norm(out.result.estimate - data.truth, NormKind::frobenius);
  rec.err_fro_sq = err * err;
  rec.ideal_risk = ideal_oracle_risk(data.truth, a.sigma, std::max(a.n1, a.n2));
  rec.dual_norm = out.result.dual_norm;
  rec.iterations = out.result.iterations;
  rec.converged = out.result.converged;
  rec.wall_ms = out.result.wall_ms;
  fill_ratios(rec);
  return out;
}

std::uint64_t trial_seed(std::uint64_t master, std::size_t m, std::size_t r, int trial) {
  return derive_seed(master, {m, r, static_cast<std::uint64_t>(trial)});
}

}  // namespace

std::vector<double> SpectrumRule::spectrum(std::size_t r) const {
  std::vector<double> s;
  switch (kind) {
    case Kind::flat:
      s.assign(r, top);
      break;
    case Kind::geometric:
      if (!(ratio > 0.0 && ratio <= 1.0)) throw ArgumentError("spectrum: ratio must lie in (0, 1]");
      for (std::size_t i = 0; i < r; ++i) s.push_back(top * std::pow(ratio, static_cast<double>(i)));
      break;
    case Kind::explicit_list:
      if (values.size() < r) throw ArgumentError("spectrum: explicit list shorter than the rank");
      s.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(r));
      break;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!(s[i] > 0.0) || !std::isfinite(s[i]) || (i > 0 && s[i] > s[i - 1])) {
      throw ArgumentError("spectrum: values must be positive, finite and nonincreasing");
    }
  }
  return s;
}

void ExperimentSpec::validate() const {
  if (n1 == 0 || n2 == 0) throw ArgumentError("spec: n1 and n2 must be positive");
  if (m_values.empty() || rank_values.empty() || sigma_values.empty()) {
    throw ArgumentError("spec: m_values, rank_values and sigma_values must be nonempty");
  }
  if (trials_per_cell < 1) throw ArgumentError("spec: trials_per_cell must be at least 1");
  for (std::size_t m : m_values) {
    if (m == 0) throw ArgumentError("spec: m values must be positive");
  }
  for (std::size_t r : rank_values) {
    if (r == 0 || r > std::min(n1, n2)) throw ArgumentError("spec: ranks must lie in [1, min(n1, n2)]");
    spectrum.spectrum(r);
  }
  for (double s : sigma_values) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ArgumentError("spec: sigma values must be finite and nonnegative");
  }
  if (reg_value && !(*reg_value > 0.0)) throw ArgumentError("spec: reg_rule value must be positive");
  solver_config.validate();
}

ExperimentSpec parse_spec(const nlohmann::json& j) {
  if (!j.is_object()) throw ArgumentError("spec: expected a JSON object");
  try {
    ExperimentSpec s;
    s.name = j.value("name", s.name);
    s.op_kind = parse_op_kind(j.value("op_kind", std::string(to_string(s.op_kind))));
    s.n1 = j.at("n1").get<std::size_t>();
    s.n2 = j.value("n2", s.n1);
    s.m_values = nonempty_list<std::size_t>(j, "m_values");
    s.rank_values = nonempty_list<std::size_t>(j, "rank_values");
    if (j.contains("spectrum_rule")) s.spectrum = parse_spectrum(j.at("spectrum_rule"));
    s.sigma_values = nonempty_list<double>(j, "sigma_values");
    s.solver = parse_choice(j.value("solver", std::string("dantzig")));
    if (j.contains("reg_rule")) {
      const auto& reg = j.at("reg_rule");
      if (reg.is_number()) {
        s.reg_value = reg.get<double>();
      } else if (reg.is_object() && reg.contains("value")) {
        s.reg_value = reg.at("value").get<double>();
      } else if (!(reg.is_string() && reg.get<std::string>() == "auto")) {
        throw ArgumentError("spec: reg_rule must be \"auto\" or a number");
      }
    }
    s.trials_per_cell = j.value("trials_per_cell", s.trials_per_cell);
    s.master_seed = j.value("master_seed", s.master_seed);
    if (j.contains("solver_config")) {
      const auto& c = j.at("solver_config");
      s.solver_config.max_iters = c.value("max_iters", s.solver_config.max_iters);
      s.solver_config.rel_tol = c.value("rel_tol", s.solver_config.rel_tol);
      s.solver_config.step_scale = c.value("step_scale", s.solver_config.step_scale);
      s.solver_config.admm_rho = c.value("admm_rho", s.solver_config.admm_rho);
      s.solver_config.continuation = c.value("continuation", s.solver_config.continuation);
    }
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("spec: ") + e.what());
  }
}

ExperimentSpec read_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError("spec " + path.string() + ": " + e.what());
  }
  return parse_spec(j);
}

void to_json(nlohmann::json& j, const ExperimentSpec& s) {
  const auto& c = s.solver_config;
  j = {{"name", s.name},
       {"op_kind", to_string(s.op_kind)},
       {"n1", s.n1},
       {"n2", s.n2},
       {"m_values", s.m_values},
       {"rank_values", s.rank_values},
       {"spectrum_rule", spectrum_json(s.spectrum)},
       {"sigma_values", s.sigma_values},
       {"solver", to_string(s.solver)},
       {"trials_per_cell", s.trials_per_cell},
       {"master_seed", s.master_seed},
       {"solver_config",
        {{"max_iters", c.max_iters},
         {"rel_tol", c.rel_tol},
         {"step_scale", c.step_scale},
         {"admm_rho", c.admm_rho},
         {"continuation", c.continuation}}}};
  if (s.reg_value) {
    j["reg_rule"] = *s.reg_value;
  } else {
    j["reg_rule"] = "auto";
  }
}

void fill_ratios(BenchRecord& rec) {
  rec.minimax_ref = static_cast<double>(std::max(rec.n1, rec.n2)) * static_cast<double>(rec.rank) *
                    rec.sigma * rec.sigma;
  rec.ratio_ideal = rec.err_fro_sq / rec.ideal_risk;
  rec.ratio_minimax = rec.err_fro_sq / rec.minimax_ref;
}

void to_json(nlohmann::json& j, const BenchRecord& r) {
  j = {{"trial", r.trial},
       {"n1", r.n1},
       {"n2", r.n2},
       {"m", r.m},
       {"rank", r.rank},
       {"sigma", r.sigma},
       {"solver", r.solver},
       {"err_fro_sq", r.err_fro_sq},
       {"ideal_risk", r.ideal_risk},
       {"minimax_ref", r.minimax_ref},
       {"ratio_ideal", r.ratio_ideal},
       {"ratio_minimax", r.ratio_minimax},
       {"dual_norm", r.dual_norm},
       {"iterations", r.iterations},
       {"converged", r.converged},
       {"wall_ms", r.wall_ms}};
  if (!r.error.empty()) j["error"] = r.error;
}

TrialData make_trial(OpKind kind, std::size_t n1, std::size_t n2, std::size_t m, std::size_t r,
                     const SpectrumRule& spectrum, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ArgumentError("make_trial: sigma must be finite and nonnegative");
  const std::vector<double> s = spectrum.spectrum(r);
  TrialData d{random_low_rank(n1, n2, r, s, derive_seed(seed, {1})),
              make_ensemble(kind, n1, n2, m, derive_seed(seed, {2})), {}};
  d.y = apply(d.op, d.truth);
  const CounterStream noise(derive_seed(seed, {3}));
  for (std::size_t i = 0; i < d.y.size(); ++i) d.y[i] += sigma * noise.normal(i);
  return d;
}

RecoverOutcome run_recover(const RecoverArgs& a) {
  try {
    const TrialData data = make_trial(a.op_kind, a.n1, a.n2, a.m, a.rank, a.spectrum, a.sigma,
                                      trial_seed(a.seed, a.m, a.rank, a.trial));
    return solve_instance(a, data, nullptr);
  } catch (const ArgumentError&) {
    throw;
  } catch (const std::exception& e) {
    RecoverOutcome out;
    out.record = base_record(a);
    out.record.error = e.what();
    out.record.converged = false;
    fill_ratios(out.record);
    return out;
  }
}

bool ExperimentReport::all_converged() const {
  return std::all_of(records.begin(), records.end(), [](const BenchRecord& r) { return r.converged; });
}

std::vector<CellSummary> summarize(const std::vector<BenchRecord>& records) {
  using Key = std::tuple<std::size_t, std::size_t, double, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<const BenchRecord*>> cells;
  for (const auto& r : records) {
    Key k{r.m, r.rank, r.sigma, r.solver};
    auto [it, fresh] = cells.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.push_back(&r);
  }
  std::vector<CellSummary> out;
  for (const auto& k : order) {
    const auto& rs = cells.at(k);
    CellSummary c;
    std::tie(c.m, c.rank, c.sigma, c.solver) = k;
    std::vector<double> ri, rm, err;
    for (const auto* r : rs) {
      ++c.trials;
      c.converged += r->converged ? 1 : 0;
      ri.push_back(r->ratio_ideal);
      rm.push_back(r->ratio_minimax);
      err.push_back(r->err_fro_sq);
    }
    c.median_ratio_ideal = median(ri);
    c.max_ratio_ideal = max_of(ri);
    c.median_ratio_minimax = median(rm);
    c.max_ratio_minimax = max_of(rm);
    c.median_err = median(err);
    out.push_back(std::move(c));
  }
  return out;
}

ExperimentReport run_sweep(const ExperimentSpec& spec, const std::filesystem::path& out_dir,
                           unsigned workers) {
  spec.validate();
  const std::vector<SolverKind> kinds = solvers_of(spec.solver);
  const std::size_t ns = spec.sigma_values.size();
  const std::size_t nk = kinds.size();
  const auto trials = static_cast<std::size_t>(spec.trials_per_cell);

  // One task per (m, rank, trial); it solves every sigma and solver on shared data.
  struct Task {
    std::size_t mi, ri;
    int trial;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < spec.m_values.size(); ++mi) {
    for (std::size_t ri = 0; ri < spec.rank_values.size(); ++ri) {
      for (std::size_t t = 0; t < trials; ++t) tasks.push_back({mi, ri, static_cast<int>(t)});
    }
  }
  auto slot = [&](const Task& task, std::size_t si, std::size_t ki) {
    return (((task.mi * spec.rank_values.size() + task.ri) * ns + si) * nk + ki) * trials +
           static_cast<std::size_t>(task.trial);
  };

  std::vector<BenchRecord> records(tasks.size() * ns * nk);
  std::ofstream partial;
  std::mutex partial_mutex;
  std::filesystem::path partial_path;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    partial_path = out_dir / "records.partial.csv";
    partial.open(partial_path);
    if (!partial) throw IoError("cannot open for writing: " + partial_path.string());
    partial << kCsvHeader << '\n' << std::flush;
  }

  detail::parallel_for(tasks.size(), workers, [&](std::size_t ti) {
    const Task& task = tasks[ti];
    RecoverArgs a;
    a.op_kind = spec.op_kind;
    a.n1 = spec.n1;
    a.n2 = spec.n2;
    a.m = spec.m_values[task.mi];
    a.rank = spec.rank_values[task.ri];
    a.spectrum = spec.spectrum;
    a.reg_value = spec.reg_value;
    a.seed = spec.master_seed;
    a.trial = task.trial;
    a.cfg = spec.solver_config;
    const std::uint64_t seed = trial_seed(a.seed, a.m, a.rank, a.trial);

    std::optional<TrialData> base;
    std::optional<GramSpectrum> spectrum;
    std::string setup_error;
    try {
      base = make_trial(a.op_kind, a.n1, a.n2, a.m, a.rank, a.spectrum, 0.0, seed);
      if (std::find(kinds.begin(), kinds.end(), SolverKind::dantzig) != kinds.end()) {
        spectrum.emplace(base->op);
      }
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    const CounterStream noise(derive_seed(seed, {3}));
    for (std::size_t si = 0; si < ns; ++si) {
      a.sigma = spec.sigma_values[si];
      for (std::size_t ki = 0; ki < nk; ++ki) {
        a.solver = kinds[ki];
        BenchRecord rec;
        if (!setup_error.empty()) {
          rec = base_record(a);
          rec.error = setup_error;
          fill_ratios(rec);
        } else {
          try {
            TrialData data = *base;
            for (std::size_t i = 0; i < data.y.size(); ++i) data.y[i] += a.sigma * noise.normal(i);
            rec = solve_instance(a, data, spectrum ? &*spectrum : nullptr).record;
          } catch (const std::exception& e) {
            rec = base_record(a);
            rec.error = e.what();
            fill_ratios(rec);
          }
        }
        if (partial.is_open()) {
          std::lock_guard lock(partial_mutex);
          partial << csv_row(rec) << '\n' << std::flush;
        }
        records[slot(task, si, ki)] = std::move(rec);
      }
    }
  });

  ExperimentReport report{spec, std::move(records), {}};
  report.summary = summarize(report.records);
  if (!out_dir.empty()) {
    partial.close();
    emit_csv(report.records, out_dir / "records.csv");
    const auto json_path = out_dir / "report.json";
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot open for writing: " + json_path.string());
    out << nlohmann::json(report).dump(2) << '\n';
    if (!out) throw IoError("write failed: " + json_path.string());
    out.close();
    std::filesystem::remove(partial_path);
  }
  return report;
}

void to_json(nlohmann::json& j, const ExperimentReport& report) {
  nlohmann::json summary = nlohmann::json::array();
  for (const auto& c : report.summary) {
    summary.push_back({{"m", c.m},
                       {"rank", c.rank},
                       {"sigma", c.sigma},
                       {"solver", c.solver},
                       {"trials", c.trials},
                       {"converged", c.converged},
                       {"median_err_fro_sq", c.median_err},
                       {"median_ratio_ideal", c.median_ratio_ideal},
                       {"max_ratio_ideal", c.max_ratio_ideal},
                       {"median_ratio_minimax", c.median_ratio_minimax},
                       {"max_ratio_minimax", c.max_ratio_minimax}});
  }
  j = {{"spec", report.spec},
       {"records", report.records},
       {"summary", std::move(summary)},
       {"all_converged", report.all_converged()}};
}

}  // namespace lrmr
