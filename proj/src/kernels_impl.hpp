#pragma once

// Per-ISA kernel entry points. Only kernels_dispatch.cpp should include this.

#include <cstddef>

namespace lrmr::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpby(double alpha, const double* x, double beta, double* y, std::size_t n);
void gemv_rows(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gemv_rows_t(const double* a, std::size_t rows, std::size_t cols, const double* q,
                 double* out);
}  // namespace scalar

#ifdef LRMR_HAVE_AVX2
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
double sum_sq(const double* x, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpby(double alpha, const double* x, double beta, double* y, std::size_t n);
void gemv_rows(const double* a, std::size_t rows, std::size_t cols, const double* x, double* y);
void gemv_rows_t(const double* a, std::size_t rows, std::size_t cols, const double* q,
                 double* out);
}  // namespace avx2
#endif

}  // namespace lrmr::kernels
