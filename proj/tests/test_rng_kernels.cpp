#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/kernels.hpp"
#include "lrmr/rng.hpp"

using namespace lrmr;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("derive_seed is order sensitive and deterministic") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  std::set<std::uint64_t> seen;
  for (std::uint64_t t = 0; t < 1000; ++t) seen.insert(derive_seed(42, {t}));
  CHECK(seen.size() == 1000);
}

TEST_CASE("counter stream is random access and matches the sequential generator") {
  const CounterStream s(99);
  const double a = s.normal(12345);
  CHECK(CounterStream(99).normal(12345) == a);
  Rng rng(99);
  for (int i = 0; i < 10; ++i) CHECK(rng.normal() == s.normal(static_cast<std::uint64_t>(i)));
}

TEST_CASE("normal and uniform sample moments") {
  const CounterStream s(7);
  const int n = 200000;
  double m1 = 0, m2 = 0, u1 = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal(static_cast<std::uint64_t>(i));
    m1 += z;
    m2 += z * z;
    const double u = s.uniform(static_cast<std::uint64_t>(i));
    CHECK_FALSE((u <= 0.0 || u >= 1.0));
    u1 += u;
  }
  CHECK(std::abs(m1 / n) < 0.01);
  CHECK(std::abs(m2 / n - 1.0) < 0.01);
  CHECK(std::abs(u1 / n - 0.5) < 0.005);
}

TEST_CASE("Rng::below is in range and roughly uniform") {
  Rng rng(3);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = rng.below(7);
    REQUIRE(v < 7);
    ++hist[v];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);
}

namespace {

std::vector<double> seq(std::size_t n, std::uint64_t seed) { return testing::gaussian_vector(n, seed); }

}  // namespace

TEST_CASE("SIMD kernels agree with the scalar reference") {
  if (!kernels::isa_supported(kernels::Isa::avx2)) {
    MESSAGE("AVX2 not available; only the scalar table is exercised");
    return;
  }
  const auto& sc = kernels::table(kernels::Isa::scalar);
  const auto& vx = kernels::table(kernels::Isa::avx2);
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 17u, 33u, 100u, 1001u}) {
    const auto a = seq(n, 1 + n);
    const auto b = seq(n, 1000 + n);
    const double scale = 1.0 + testing::dot(a, a) + testing::dot(b, b);
    CHECK(std::abs(sc.dot(a.data(), b.data(), n) - vx.dot(a.data(), b.data(), n)) <= 1e-13 * scale);
    CHECK(std::abs(sc.sum_sq(a.data(), n) - vx.sum_sq(a.data(), n)) <= 1e-13 * scale);

    auto y1 = b, y2 = b;
    sc.axpy(0.7, a.data(), y1.data(), n);
    vx.axpy(0.7, a.data(), y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14 * (1 + std::abs(y1[i])));
    y1 = b;
    y2 = b;
    sc.axpby(-1.3, a.data(), 0.25, y1.data(), n);
    vx.axpby(-1.3, a.data(), 0.25, y2.data(), n);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-14 * (1 + std::abs(y1[i])));
  }
  for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{1, 1}, {5, 3}, {7, 17}, {33, 9}, {64, 100}}) {
    const auto a = seq(rows * cols, rows * 31 + cols);
    const auto x = seq(cols, 5 + cols);
    const auto q = seq(rows, 6 + rows);
    std::vector<double> y1(rows), y2(rows), o1(cols), o2(cols);
    sc.gemv_rows(a.data(), rows, cols, x.data(), y1.data());
    vx.gemv_rows(a.data(), rows, cols, x.data(), y2.data());
    for (std::size_t i = 0; i < rows; ++i) CHECK(std::abs(y1[i] - y2[i]) <= 1e-12 * (1 + std::abs(y1[i])));
    o2.assign(cols, 123.0);
    sc.gemv_rows_t(a.data(), rows, cols, q.data(), o1.data());
    vx.gemv_rows_t(a.data(), rows, cols, q.data(), o2.data());
    for (std::size_t j = 0; j < cols; ++j) CHECK(std::abs(o1[j] - o2[j]) <= 1e-12 * (1 + std::abs(o1[j])));
  }
}

TEST_CASE("forced ISA selection") {
  const auto before = kernels::active_isa();
  kernels::force_isa(kernels::Isa::scalar);
  CHECK(kernels::active_isa() == kernels::Isa::scalar);
  CHECK(kernels::isa_name(kernels::Isa::scalar) == "scalar");
  if (kernels::isa_supported(kernels::Isa::avx2)) kernels::force_isa(before);
}
