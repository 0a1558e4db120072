#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/matrix_io.hpp"
#include "lrmr/measop.hpp"

using namespace lrmr;
using testing::dot;
using testing::fro;

namespace {

std::vector<MeasOp> sample_ops() {
  return {make_ensemble(OpKind::gaussian, 5, 4, 13, 1),
          make_ensemble(OpKind::bernoulli, 3, 6, 25, 2),
          make_ensemble(OpKind::entry_mask, 6, 5, 17, 3),
          make_ensemble(OpKind::identity, 4, 3, 12, 0),
          make_dense_rows(2, 3, gaussian_matrix(7, 6, 4))};
}

std::filesystem::path scratch_dir(const char* name) {
  auto p = std::filesystem::temp_directory_path() / ("lrmr_test_" + std::string(name));
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("adjoint identity for every operator kind (200 probes each)") {
  for (const MeasOp& op : sample_ops()) {
    for (std::uint64_t t = 0; t < 200; ++t) {
      const Mat x = gaussian_matrix(op.n1(), op.n2(), derive_seed(t, {1}));
      const auto q = testing::gaussian_vector(op.m(), derive_seed(t, {2}));
      const double lhs = dot(apply(op, x), q);
      const double rhs = inner(x, adjoint(op, q));
      CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + std::abs(lhs)));
    }
  }
}

TEST_CASE("apply is linear and zero maps to zero") {
  for (const MeasOp& op : sample_ops()) {
    const Mat x = gaussian_matrix(op.n1(), op.n2(), 5);
    const Mat y = gaussian_matrix(op.n1(), op.n2(), 6);
    const auto lhs = apply(op, 2.0 * x + (-3.0) * y);
    const auto ax = apply(op, x);
    const auto ay = apply(op, y);
    for (std::size_t i = 0; i < op.m(); ++i) CHECK(std::abs(lhs[i] - (2 * ax[i] - 3 * ay[i])) <= 1e-10);
    for (double v : apply(op, Mat(op.n1(), op.n2()))) CHECK(v == 0.0);
    CHECK(fro(adjoint(op, std::vector<double>(op.m(), 0.0))) == 0.0);
  }
}

TEST_CASE("identity operator is vec and unvec") {
  const MeasOp op = make_ensemble(OpKind::identity, 3, 4, 12, 0);
  const Mat x = gaussian_matrix(3, 4, 8);
  const auto y = apply(op, x);
  for (std::size_t i = 0; i < 12; ++i) CHECK(y[i] == x.data()[i]);
  CHECK(adjoint(op, y) == x);
  CHECK(to_dense(op) == Mat::identity(12));
  CHECK(op_spectral_norm(op) == doctest::Approx(1.0));
  CHECK_THROWS_AS(make_ensemble(OpKind::identity, 3, 4, 11, 0), ArgumentError);
}

TEST_CASE("entry mask samples distinct entries and A A* is a 0/1 projection") {
  const MeasOp op = make_ensemble(OpKind::entry_mask, 7, 6, 30, 11);
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& e : op.mask()) seen.insert({e.row, e.col});
  CHECK(seen.size() == 30);
  const Mat d = to_dense(op);
  for (std::size_t i = 0; i < d.rows(); ++i) {
    double ones = 0, total = 0;
    for (std::size_t j = 0; j < d.cols(); ++j) {
      ones += d(i, j) == 1.0 ? 1 : 0;
      total += std::abs(d(i, j));
    }
    CHECK(ones == 1);
    CHECK(total == 1);
  }
  const Mat x = gaussian_matrix(7, 6, 1);
  const Mat p = adjoint(op, apply(op, x));
  for (std::size_t j = 0; j < 6; ++j) {
    for (std::size_t i = 0; i < 7; ++i) {
      CHECK((p(i, j) == 0.0 || p(i, j) == x(i, j)));
      CHECK(seen.count({i, j}) == (p(i, j) != 0.0 ? 1u : 0u));
    }
  }
  const MeasOp single = make_entry_mask(3, 3, {{1, 2}});
  const Mat g = gaussian_matrix(3, 3, 2);
  CHECK(apply(single, g) == std::vector<double>{g(1, 2)});
  CHECK_THROWS_AS(make_entry_mask(3, 3, {{1, 2}, {1, 2}}), ArgumentError);
  CHECK_THROWS_AS(make_ensemble(OpKind::entry_mask, 2, 2, 5, 1), ArgumentError);
}

TEST_CASE("gaussian rows have variance 1/m") {
  const MeasOp op = make_ensemble(OpKind::gaussian, 8, 8, 64, 7);
  const Mat d = to_dense(op);
  double sq = 0;
  for (double v : d.data()) sq += v * v;
  CHECK(std::abs(sq / static_cast<double>(d.size()) - 1.0 / 64) <= 0.1 / 64);
  const MeasOp b = make_ensemble(OpKind::bernoulli, 4, 4, 9, 7);
  const Mat bd = to_dense(b);
  for (double v : bd.data()) CHECK(std::abs(std::abs(v) - 1.0 / 3.0) <= 1e-15);
}

TEST_CASE("gaussian isotropy over fresh operators") {
  Mat x = gaussian_matrix(5, 5, 1);
  x *= 1.0 / fro(x);
  double mean = 0;
  for (std::uint64_t t = 0; t < 2000; ++t) {
    const auto y = apply(make_ensemble(OpKind::gaussian, 5, 5, 40, derive_seed(77, {t})), x);
    mean += dot(y, y);
  }
  mean /= 2000;
  CHECK(mean >= 0.9);
  CHECK(mean <= 1.1);
}

TEST_CASE("seeded operators are reproducible and lazy rows equal cached rows") {
  for (OpKind kind : {OpKind::gaussian, OpKind::bernoulli}) {
    const MeasOp cached = make_ensemble(kind, 6, 5, 40, 123);
    const MeasOp lazy = make_ensemble(kind, 6, 5, 40, 123, OpOptions{.cache_cap = 10});
    CHECK(cached.cached_rows() != nullptr);
    CHECK(lazy.cached_rows() == nullptr);
    const Mat x = gaussian_matrix(6, 5, 9);
    const auto yc = apply(cached, x);
    const auto yl = apply(lazy, x);
    for (std::size_t i = 0; i < yc.size(); ++i) CHECK(std::abs(yc[i] - yl[i]) <= 1e-13 * (1 + std::abs(yc[i])));
    CHECK(apply(make_ensemble(kind, 6, 5, 40, 123), x) == apply(cached, x));
    const auto q = testing::gaussian_vector(40, 3);
    CHECK(fro(adjoint(cached, q) - adjoint(lazy, q)) <= 1e-13 * fro(adjoint(cached, q)));
    CHECK(apply(make_ensemble(kind, 6, 5, 40, 124), x) != apply(cached, x));
  }
}

TEST_CASE("to_dense agrees with apply and respects the cap") {
  for (const MeasOp& op : sample_ops()) {
    const Mat d = to_dense(op);
    const Mat x = gaussian_matrix(op.n1(), op.n2(), 31);
    const auto y = apply(op, x);
    for (std::size_t i = 0; i < op.m(); ++i) {
      double acc = 0;
      for (std::size_t j = 0; j < op.dim(); ++j) acc += d(i, j) * x.data()[j];
      CHECK(std::abs(acc - y[i]) <= 1e-10);
    }
  }
  CHECK_THROWS_AS(to_dense(make_ensemble(OpKind::gaussian, 10, 10, 100, 1), 5000), ResourceError);
}

TEST_CASE("op_spectral_norm matches the dense top singular value") {
  const MeasOp op = make_ensemble(OpKind::gaussian, 5, 5, 10, 17);
  const Mat d = to_dense(op);
  CHECK(std::abs(op_spectral_norm(op) - singular_values(d)[0]) <= 1e-6 * singular_values(d)[0]);
  const MeasOp doubled = make_dense_rows(5, 5, d * 2.0);
  CHECK(op_spectral_norm(doubled) == doctest::Approx(2.0 * op_spectral_norm(op)).epsilon(1e-8));
  const MeasOp zero = make_dense_rows(3, 3, Mat(4, 9));
  CHECK(op_spectral_norm(zero) == 0.0);
}

TEST_CASE("operator manifests round trip") {
  const auto dir = scratch_dir("manifest");
  for (const MeasOp& op : sample_ops()) {
    const auto path = dir / (std::string(to_string(op.kind())) + ".json");
    write_op_manifest(op, path, dir / (std::string(to_string(op.kind())) + "_rows.csv"));
    const MeasOp back = read_op_manifest(path);
    CHECK(back.kind() == op.kind());
    CHECK(back.m() == op.m());
    const Mat x = gaussian_matrix(op.n1(), op.n2(), 2);
    const auto a = apply(op, x);
    const auto b = apply(back, x);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * (1 + std::abs(a[i])));
  }
  CHECK_THROWS_AS(read_op_manifest(dir / "missing.json"), IoError);
}

TEST_CASE("matrix CSV and manifest round trip") {
  const auto dir = scratch_dir("csv");
  const Mat x = gaussian_matrix(4, 3, 5) * 1e-3;
  write_manifest(x, dir / "x.json", dir / "x.csv");
  const Mat back = read_manifest(dir / "x.json");
  CHECK(fro(back - x) <= 1e-12 * fro(x));
  CHECK_THROWS_AS(read_csv(dir / "nope.csv"), IoError);
}

TEST_CASE("shape errors") {
  const MeasOp op = make_ensemble(OpKind::gaussian, 3, 3, 5, 1);
  CHECK_THROWS_AS(apply(op, Mat(3, 4)), ArgumentError);
  CHECK_THROWS_AS(adjoint(op, std::vector<double>(4)), ArgumentError);
  CHECK_THROWS_AS(make_ensemble(OpKind::gaussian, 3, 3, 0, 1), ArgumentError);
  CHECK_THROWS_AS(parse_op_kind("fourier"), ArgumentError);
}
