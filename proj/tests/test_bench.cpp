#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "lrmr/bench.hpp"
#include "lrmr/errors.hpp"

using namespace lrmr;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
  auto p = fs::temp_directory_path() / ("lrmr_bench_" + std::string(name));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentSpec small_spec() {
  ExperimentSpec s;
  s.name = "small";
  s.n1 = s.n2 = 6;
  s.m_values = {40, 60};
  s.rank_values = {1, 2};
  s.spectrum.top = 10.0;
  s.sigma_values = {0.01, 0.1};
  s.solver = SolverChoice::both;
  s.trials_per_cell = 2;
  s.master_seed = 5;
  return s;
}

// Everything except wall time, which is measured.
void check_same(const BenchRecord& a, const BenchRecord& b) {
  CHECK(csv_row(BenchRecord{a}).substr(0, csv_row(a).rfind(',')) ==
        csv_row(BenchRecord{b}).substr(0, csv_row(b).rfind(',')));
}

BenchRecord sample_record() {
  BenchRecord r;
  r.trial = 3;
  r.n1 = 30;
  r.n2 = 20;
  r.m = 360;
  r.rank = 2;
  r.sigma = 0.1;
  r.solver = "lasso";
  r.err_fro_sq = 0.123456789012345678;
  r.ideal_risk = 1.0 / 3.0;
  fill_ratios(r);
  r.dual_norm = 2.718281828459045;
  r.iterations = 417;
  r.converged = true;
  r.wall_ms = 12.5;
  return r;
}

}  // namespace

TEST_CASE("fill_ratios") {
  const BenchRecord r = sample_record();
  CHECK(r.minimax_ref == doctest::Approx(30 * 2 * 0.01));
  CHECK(r.ratio_minimax == r.err_fro_sq / r.minimax_ref);
  CHECK(r.ratio_ideal == r.err_fro_sq / r.ideal_risk);
}

TEST_CASE("CSV round trip and header") {
  const auto dir = scratch("csv");
  emit_csv({}, dir / "empty.csv");
  CHECK(slurp(dir / "empty.csv") == std::string(kCsvHeader) + "\n");
  CHECK(parse_csv(dir / "empty.csv").empty());

  const BenchRecord r = sample_record();
  BenchRecord failed = r;
  failed.converged = false;
  failed.solver = "dantzig";
  emit_csv({r, failed}, dir / "one.csv");
  const auto back = parse_csv(dir / "one.csv");
  REQUIRE(back.size() == 2);
  for (std::string_view col : {"trial", "n1", "n2", "m", "rank", "sigma", "err_fro_sq", "ideal_risk",
                               "minimax_ref", "ratio_ideal", "ratio_minimax", "dual_norm", "iterations",
                               "wall_ms"}) {
    const double a = column_value(r, col), b = column_value(back[0], col);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
  CHECK(back[0].solver == "lasso");
  CHECK(back[0].converged);
  CHECK_FALSE(back[1].converged);
  CHECK(back[1].solver == "dantzig");

  std::size_t commas = 0;
  for (char c : csv_row(r)) commas += c == ',';
  CHECK(commas == 15);

  std::ofstream(dir / "bad.csv") << "trial,n1\n1,2\n";
  CHECK_THROWS_AS(parse_csv(dir / "bad.csv"), ArgumentError);
  CHECK_THROWS_AS(emit_csv({r}, dir / "empty.csv" / "nested.csv"), IoError);
}

TEST_CASE("column access") {
  const BenchRecord r = sample_record();
  CHECK(column_value(r, "m") == 360);
  CHECK(column_label(r, "solver") == "lasso");
  CHECK(column_label(r, "converged") == "true");
  CHECK_THROWS_AS(column_value(r, "solver"), ArgumentError);
  CHECK_THROWS_AS(column_value(r, "nope"), ArgumentError);
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{1e-3, 1e-2, 1e-1, 1.0};
  std::vector<double> y;
  for (double v : x) y.push_back(7 * v * v);
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0).epsilon(1e-12));
  const std::vector<double> x2{1.0, 2.0, 0.0};
  const std::vector<double> y2{3.0, 3.0, 5.0};
  CHECK(loglog_slope(x2, y2) == doctest::Approx(0.0));
}

TEST_CASE("spectrum rules") {
  SpectrumRule flat;
  flat.top = 2;
  CHECK(flat.spectrum(3) == std::vector<double>{2, 2, 2});
  SpectrumRule geo{SpectrumRule::Kind::geometric, 1.0, 0.5, {}};
  CHECK(geo.spectrum(3) == std::vector<double>{1, 0.5, 0.25});
  SpectrumRule list{SpectrumRule::Kind::explicit_list, 1.0, 0.5, {3, 2, 1}};
  CHECK(list.spectrum(2) == std::vector<double>{3, 2});
  CHECK_THROWS_AS(list.spectrum(4), ArgumentError);
}

TEST_CASE("spec parsing fills defaults and round trips") {
  const auto j = nlohmann::json::parse(R"({
    "name": "t", "n1": 8, "n2": 6, "m_values": [40], "rank_values": [1, 2],
    "sigma_values": [0.1], "spectrum_rule": {"kind": "geometric", "ratio": 0.7},
    "solver": "both", "reg_rule": 0.25, "trials_per_cell": 3, "master_seed": 9
  })");
  const ExperimentSpec s = parse_spec(j);
  CHECK(s.n1 == 8);
  CHECK(s.spectrum.kind == SpectrumRule::Kind::geometric);
  CHECK(s.spectrum.ratio == 0.7);
  CHECK(s.solver == SolverChoice::both);
  CHECK(s.reg_value == 0.25);
  CHECK(s.op_kind == OpKind::gaussian);
  const nlohmann::json out = s;
  CHECK(out.contains("solver_config"));
  CHECK(out["reg_rule"] == 0.25);
  const ExperimentSpec again = parse_spec(out);
  CHECK(nlohmann::json(again) == out);

  auto bad = j;
  bad["m_values"] = nlohmann::json::array();
  CHECK_THROWS_AS(parse_spec(bad), ArgumentError);
  bad = j;
  bad["trials_per_cell"] = 0;
  CHECK_THROWS_AS(parse_spec(bad), ArgumentError);
  CHECK(parse_spec(nlohmann::json::parse(R"({"n1": 4, "n2": 4, "m_values": [10], "rank_values": [1],
    "sigma_values": [0.1], "spectrum_rule": [3, 1]})"))
            .spectrum.values == std::vector<double>{3, 1});
}

TEST_CASE("run_recover is deterministic and handles the trivial regimes") {
  RecoverArgs a;
  a.n1 = a.n2 = 8;
  a.m = 80;
  a.rank = 2;
  a.spectrum.top = 5;
  a.sigma = 0.05;
  a.seed = 11;
  const auto one = run_recover(a);
  const auto two = run_recover(a);
  check_same(one.record, two.record);
  CHECK(one.truth == two.truth);
  CHECK(one.record.ratio_minimax == one.record.err_fro_sq / (8 * 2 * 0.05 * 0.05));

  // Regularization above ||A*(y)|| returns zero: the error is ||M||_F^2.
  a.reg_value = 1e6;
  const auto zero = run_recover(a);
  CHECK(zero.record.err_fro_sq == doctest::Approx(testing::fro(zero.truth) * testing::fro(zero.truth)));

  // Identity operator, full rank, no noise: exact.
  RecoverArgs id;
  id.op_kind = OpKind::identity;
  id.n1 = id.n2 = 4;
  id.m = 16;
  id.rank = 4;
  id.sigma = 0.0;
  const auto exact = run_recover(id);
  CHECK(exact.record.err_fro_sq <= 1e-12);

  RecoverArgs bad = a;
  bad.rank = 9;
  CHECK_THROWS_AS(run_recover(bad), ArgumentError);
}

TEST_CASE("sweep is independent of the worker count and writes its artifacts") {
  const ExperimentSpec spec = small_spec();
  const auto dir = scratch("sweep");
  const auto serial = run_sweep(spec, dir, 1);
  const auto threaded = run_sweep(spec, {}, 3);
  REQUIRE(serial.records.size() == 2 * 2 * 2 * 2 * 2);
  REQUIRE(threaded.records.size() == serial.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) check_same(serial.records[i], threaded.records[i]);
  CHECK(fs::exists(dir / "records.csv"));
  CHECK(fs::exists(dir / "report.json"));
  CHECK_FALSE(fs::exists(dir / "records.partial.csv"));
  const auto parsed = parse_csv(dir / "records.csv");
  REQUIRE(parsed.size() == serial.records.size());
  for (const auto& r : parsed) {
    CHECK(r.ratio_minimax == doctest::Approx(r.err_fro_sq / (6.0 * static_cast<double>(r.rank) * r.sigma * r.sigma)));
  }
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["spec"]["name"] == "small");
  CHECK(report["summary"].size() == serial.summary.size());
  CHECK(serial.summary.size() == 16);

  // Same sigma and solver order: records ordered m, rank, sigma, solver, trial.
  CHECK(serial.records[0].m == 40);
  CHECK(serial.records[0].rank == 1);
  CHECK(serial.records[1].trial == 1);
  CHECK(serial.records[2].solver != serial.records[0].solver);
}

TEST_CASE("deleting a cell changes no other record") {
  ExperimentSpec full = small_spec();
  full.solver = SolverChoice::dantzig;
  ExperimentSpec part = full;
  part.m_values = {60};
  part.sigma_values = {0.1};
  const auto a = run_sweep(full, {}, 1);
  const auto b = run_sweep(part, {}, 1);
  for (const auto& rb : b.records) {
    bool found = false;
    for (const auto& ra : a.records) {
      if (ra.m == rb.m && ra.rank == rb.rank && ra.sigma == rb.sigma && ra.trial == rb.trial) {
        check_same(ra, rb);
        found = true;
      }
    }
    CHECK(found);
  }
}

TEST_CASE("SVG output is deterministic and handles a single point") {
  const auto report = run_sweep(small_spec(), {}, 1);
  const std::string a = svg_plot(report.records, "sigma", "err_fro_sq", "solver");
  const std::string b = svg_plot(report.records, "sigma", "err_fro_sq", "solver");
  CHECK(a == b);
  CHECK(a.rfind("<svg", 0) == 0);
  CHECK(a.find("</svg>") != std::string::npos);
  CHECK(a.find("href") == std::string::npos);

  const std::string single = svg_plot({sample_record()}, "sigma", "err_fro_sq", "solver");
  CHECK(single.find("<circle") != std::string::npos);
  CHECK(single.find("</svg>") != std::string::npos);
  CHECK_THROWS_AS(svg_plot(report.records, "nope", "err_fro_sq", "solver"), ArgumentError);
  CHECK_THROWS_AS(svg_plot(report.records, "sigma", "err_fro_sq", "nope"), ArgumentError);

  const auto dir = scratch("svg");
  emit_svg_plot(report.records, "sigma", "err_fro_sq", "solver", dir / "p.svg");
  CHECK(slurp(dir / "p.svg") == a);
}
