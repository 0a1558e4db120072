#pragma once

// Dense real matrices and the spectral kernels every other module builds on.
//
// Storage layout: column-major. Entry (i, j) of an n1 x n2 matrix lives at
// data()[i + j * n1], so data() is exactly vec(X), the column-stacking used
// to write a measurement operator as an m x (n1 n2) matrix. Every module
// (operator rows, CSV fixtures, Gram matrices) inherits this convention.
//
// Values are immutable in spirit: operations return new matrices and never
// alias their inputs, so a Mat can be shared freely across threads.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <vector>

namespace lrmr {

class Mat {
 public:
  /// Empty 0 x 0 placeholder. Not a valid operand for the numeric routines.
  Mat() = default;
  /// Zero matrix. Both dimensions must be positive.
  Mat(std::size_t rows, std::size_t cols);

  /// Takes ownership of column-major data; rejects non-finite entries.
  static Mat from_column_major(std::size_t rows, std::size_t cols, std::vector<double> data);
  /// Row-wise literal, e.g. Mat::from_rows({{1, 2}, {3, 4}}).
  static Mat from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Mat identity(std::size_t n);
  /// rows x cols matrix with `diag` on the main diagonal.
  static Mat diagonal(std::span<const double> diag, std::size_t rows, std::size_t cols);
  static Mat diagonal(std::initializer_list<double> diag);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i + j * rows_]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i + j * rows_]; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }
  std::span<const double> col(std::size_t j) const {
    return std::span<const double>(data_).subspan(j * rows_, rows_);
  }

  Mat transpose() const;
  bool all_finite() const;

  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);
  /// this += alpha * other
  Mat& add_scaled(double alpha, const Mat& other);

  friend bool operator==(const Mat&, const Mat&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(Mat a, double s);
Mat operator*(double s, Mat a);
Mat matmul(const Mat& a, const Mat& b);
/// a^T b without forming the transpose.
Mat matmul_tn(const Mat& a, const Mat& b);

/// Trace inner product <A, B> = trace(A^T B).
double inner(const Mat& a, const Mat& b);

struct SvdFactors {
  Mat u;                 // rows x k, orthonormal columns
  std::vector<double> s;  // k = min(rows, cols), nonincreasing, >= 0
  Mat v;                 // cols x k, orthonormal columns
};

/// Thin SVD with singular values in descending order. Singular vector signs
/// are unconstrained. Throws NumericError if the backend fails to converge.
SvdFactors svd(const Mat& x);
/// Singular values only.
std::vector<double> singular_values(const Mat& x);
/// u * diag(s) * v^T using the first `k` triplets (all when k exceeds s.size()).
Mat reconstruct(const SvdFactors& f, std::size_t k = static_cast<std::size_t>(-1));

enum class NormKind { nuclear, operator_norm, frobenius };
double norm(const Mat& x, NormKind kind);

/// Singular value soft-thresholding: sum_i max(s_i - tau, 0) u_i v_i^T.
Mat svt(const Mat& x, double tau);

/// svt plus by-products the solvers need.
struct SvtResult {
  Mat value;
  double nuclear = 0.0;  // nuclear norm of value
  std::size_t rank = 0;  // number of singular values strictly above tau
};
SvtResult svt_detail(const Mat& x, double tau);

/// Euclidean projection onto {Z : ||Z|| <= radius}: singular values clipped at radius.
Mat clip_singular_values(const Mat& x, double radius);

/// Truncated SVD keeping the top r triplets.
Mat best_rank_r(const Mat& x, std::size_t r);

/// Orthonormal basis for the column space of a full-column-rank matrix (Householder QR).
Mat orthonormalize(const Mat& x);

/// n1 x n2 Gaussian matrix, entries N(0, 1), drawn from `seed`.
Mat gaussian_matrix(std::size_t n1, std::size_t n2, std::uint64_t seed);

/// U diag(spectrum) V^T with Haar-like orthonormal U (n1 x r), V (n2 x r).
/// `spectrum` must be positive and nonincreasing with length r.
Mat random_low_rank(std::size_t n1, std::size_t n2, std::size_t r,
                    std::span<const double> spectrum, std::uint64_t seed);

/// Dimension of the manifold of n1 x n2 rank-r matrices: r (n1 + n2 - r).
std::int64_t degrees_of_freedom(std::int64_t n1, std::int64_t n2, std::int64_t r);

}  // namespace lrmr
