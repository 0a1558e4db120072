#pragma once

// Dense double-precision inner loops used by the measurement operators, the
// Gram operator and the solvers. Every kernel has a portable scalar reference
// implementation; an AVX2+FMA variant is compiled into a separate translation
// unit and selected at runtime when the CPU supports it.
//
// The scalar and SIMD variants agree to rounding (they sum in different
// orders), never bitwise. Within one process the selection is fixed, so
// results are reproducible run to run on the same machine.
//
// LRMR_ISA=scalar in the environment pins the scalar variant at startup.

#include <cstddef>
#include <span>
#include <string_view>

namespace lrmr::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  double (*dot)(const double* a, const double* b, std::size_t n);
  double (*sum_sq)(const double* x, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = alpha * x + beta * y
  void (*axpby)(double alpha, const double* x, double beta, double* y, std::size_t n);
  // y[i] = <row_i, x> for a row-major rows x cols block
  void (*gemv_rows)(const double* a, std::size_t rows, std::size_t cols, const double* x,
                    double* y);
  // out = sum_i q[i] * row_i, out has length cols and is overwritten
  void (*gemv_rows_t)(const double* a, std::size_t rows, std::size_t cols, const double* q,
                      double* out);
};

const KernelTable& scalar_table();
bool isa_supported(Isa isa);
const KernelTable& table(Isa isa);

Isa active_isa();
/// Throws ArgumentError when the CPU cannot run `isa`.
void force_isa(Isa isa);
std::string_view isa_name(Isa isa);

namespace detail {
const KernelTable& active_table();
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  return detail::active_table().dot(a.data(), b.data(), a.size());
}
inline double sum_sq(std::span<const double> x) {
  return detail::active_table().sum_sq(x.data(), x.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  detail::active_table().axpy(alpha, x.data(), y.data(), x.size());
}
inline void axpby(double alpha, std::span<const double> x, double beta, std::span<double> y) {
  detail::active_table().axpby(alpha, x.data(), beta, y.data(), x.size());
}
inline void gemv_rows(const double* a, std::size_t rows, std::size_t cols,
                      std::span<const double> x, std::span<double> y) {
  detail::active_table().gemv_rows(a, rows, cols, x.data(), y.data());
}
inline void gemv_rows_t(const double* a, std::size_t rows, std::size_t cols,
                        std::span<const double> q, std::span<double> out) {
  detail::active_table().gemv_rows_t(a, rows, cols, q.data(), out.data());
}

}  // namespace lrmr::kernels
