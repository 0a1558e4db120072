#include "lrmr/mat.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eigen_bridge.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/kernels.hpp"
#include "lrmr/rng.hpp"

namespace lrmr {

namespace {

void require_same_shape(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ArgumentError(std::string(what) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                        std::to_string(b.cols()));
  }
}

void require_nonempty(const Mat& x, const char* what) {
  if (x.empty()) throw ArgumentError(std::string(what) + ": empty matrix");
}

// Triplets with s_i > tau, descending. When tau is not tiny relative to s_1 the
// eigendecomposition of the smaller Gram matrix is several times cheaper than
// a full SVD and loses nothing: a singular value above tau >= 1e-4 s_1 comes
// out with absolute error around eps s_1^2 / tau <= 1e-12 s_1.
SvdFactors triplets_above(const Mat& x, double tau) {
  require_nonempty(x, "svd");
  const bool tall = x.rows() >= x.cols();
  const auto xv = detail::view(x);
  const Eigen::MatrixXd gram = tall ? Eigen::MatrixXd(xv.transpose() * xv)
                                    : Eigen::MatrixXd(xv * xv.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double top = es.info() == Eigen::Success ? std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0)) : 0.0;
  if (es.info() != Eigen::Success || !(tau >= 1e-4 * top)) {
    SvdFactors f = svd(x);
    std::size_t k = 0;
    while (k < f.s.size() && f.s[k] > tau) ++k;
    SvdFactors out{Mat(), {f.s.begin(), f.s.begin() + static_cast<std::ptrdiff_t>(k)}, Mat()};
    if (k > 0) {
      out.u = Mat(x.rows(), k);
      out.v = Mat(x.cols(), k);
      detail::view(out.u) = detail::view(f.u).leftCols(static_cast<Eigen::Index>(k));
      detail::view(out.v) = detail::view(f.v).leftCols(static_cast<Eigen::Index>(k));
    }
    return out;
  }
  const auto& ev = es.eigenvalues();
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = ev.size() - 1; i >= 0; --i) {
    const double sv = std::sqrt(std::max(ev[i], 0.0));
    if (sv > tau) keep.push_back(i);
  }
  SvdFactors out;
  if (keep.empty()) return out;
  const std::size_t k = keep.size();
  out.u = Mat(x.rows(), k);
  out.v = Mat(x.cols(), k);
  auto u = detail::view(out.u);
  auto v = detail::view(out.v);
  for (std::size_t t = 0; t < k; ++t) {
    const Eigen::Index i = keep[t];
    const double sv = std::sqrt(ev[i]);
    out.s.push_back(sv);
    const auto t_idx = static_cast<Eigen::Index>(t);
    if (tall) {
      v.col(t_idx) = es.eigenvectors().col(i);
      u.col(t_idx) = xv * v.col(t_idx) / sv;
    } else {
      u.col(t_idx) = es.eigenvectors().col(i);
      v.col(t_idx) = xv.transpose() * u.col(t_idx) / sv;
    }
  }
  return out;
}

}  // namespace

Mat::Mat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {
  if (rows == 0 || cols == 0) throw ArgumentError("Mat: dimensions must be positive");
}

Mat Mat::from_column_major(std::size_t rows, std::size_t cols, std::vector<double> data) {
  if (rows == 0 || cols == 0) throw ArgumentError("Mat: dimensions must be positive");
  if (data.size() != rows * cols) {
    throw ArgumentError("Mat: data length " + std::to_string(data.size()) + " != rows*cols " +
                        std::to_string(rows * cols));
  }
  Mat m;
  m.rows_ = rows;
  m.cols_ = cols;
  m.data_ = std::move(data);
  if (!m.all_finite()) throw ArgumentError("Mat: non-finite entry");
  return m;
}

Mat Mat::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  Mat m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ArgumentError("Mat::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  if (!m.all_finite()) throw ArgumentError("Mat: non-finite entry");
  return m;
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diagonal(std::span<const double> diag, std::size_t rows, std::size_t cols) {
  if (diag.size() > std::min(rows, cols)) throw ArgumentError("Mat::diagonal: too many entries");
  Mat m(rows, cols);
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  if (!m.all_finite()) throw ArgumentError("Mat: non-finite entry");
  return m;
}

Mat Mat::diagonal(std::initializer_list<double> diag) {
  return diagonal(std::span<const double>(diag.begin(), diag.size()), diag.size(), diag.size());
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t j = 0; j < cols_; ++j)
    for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
  return t;
}

bool Mat::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Mat& Mat::operator+=(const Mat& other) { return add_scaled(1.0, other); }
Mat& Mat::operator-=(const Mat& other) { return add_scaled(-1.0, other); }

Mat& Mat::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Mat& Mat::add_scaled(double alpha, const Mat& other) {
  require_same_shape(*this, other, "Mat::add_scaled");
  kernels::axpy(alpha, other.data(), data());
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(Mat a, double s) { return a *= s; }
Mat operator*(double s, Mat a) { return a *= s; }

Mat matmul(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw ArgumentError("matmul: inner dimensions differ");
  Mat c(a.rows(), b.cols());
  // column j of c = sum_k b(k, j) * column k of a
  for (std::size_t j = 0; j < b.cols(); ++j) {
    std::span<double> cj = c.data().subspan(j * c.rows(), c.rows());
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double bkj = b(k, j);
      if (bkj != 0.0) kernels::axpy(bkj, a.col(k), cj);
    }
  }
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) throw ArgumentError("matmul_tn: row counts differ");
  Mat c(a.cols(), b.cols());
  for (std::size_t j = 0; j < b.cols(); ++j)
    for (std::size_t i = 0; i < a.cols(); ++i) c(i, j) = kernels::dot(a.col(i), b.col(j));
  return c;
}

double inner(const Mat& a, const Mat& b) {
  require_same_shape(a, b, "inner");
  return kernels::dot(a.data(), b.data());
}

SvdFactors svd(const Mat& x) {
  require_nonempty(x, "svd");
  if (!x.all_finite()) throw ArgumentError("svd: non-finite input");
  Eigen::BDCSVD<Eigen::MatrixXd> solver(detail::view(x), Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (solver.info() != Eigen::Success) {
    throw NumericError("svd: backend did not converge on a " + std::to_string(x.rows()) + "x" +
                       std::to_string(x.cols()) + " matrix");
  }
  SvdFactors f;
  f.u = detail::from_eigen(solver.matrixU());
  f.v = detail::from_eigen(solver.matrixV());
  const auto& sv = solver.singularValues();
  f.s.assign(sv.data(), sv.data() + sv.size());
  return f;
}

std::vector<double> singular_values(const Mat& x) {
  require_nonempty(x, "singular_values");
  if (!x.all_finite()) throw ArgumentError("singular_values: non-finite input");
  Eigen::BDCSVD<Eigen::MatrixXd> solver(detail::view(x));
  if (solver.info() != Eigen::Success) throw NumericError("singular_values: no convergence");
  const auto& sv = solver.singularValues();
  return {sv.data(), sv.data() + sv.size()};
}

Mat reconstruct(const SvdFactors& f, std::size_t k) {
  k = std::min(k, f.s.size());
  Mat out(f.u.rows(), f.v.rows());
  for (std::size_t t = 0; t < k; ++t) {
    if (f.s[t] == 0.0) continue;
    std::span<const double> ut = f.u.col(t);
    std::span<const double> vt = f.v.col(t);
    for (std::size_t j = 0; j < out.cols(); ++j) {
      const double w = f.s[t] * vt[j];
      if (w != 0.0) kernels::axpy(w, ut, out.data().subspan(j * out.rows(), out.rows()));
    }
  }
  return out;
}

double norm(const Mat& x, NormKind kind) {
  require_nonempty(x, "norm");
  switch (kind) {
    case NormKind::frobenius:
      return std::sqrt(kernels::sum_sq(x.data()));
    case NormKind::operator_norm: {
      // Largest eigenvalue of the smaller Gram matrix: relative accuracy ~ eps.
      const auto xv = detail::view(x);
      const Eigen::MatrixXd gram = x.rows() >= x.cols() ? Eigen::MatrixXd(xv.transpose() * xv)
                                                        : Eigen::MatrixXd(xv * xv.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
      if (es.info() != Eigen::Success) throw NumericError("norm: eigensolver failed");
      return std::sqrt(std::max(es.eigenvalues().maxCoeff(), 0.0));
    }
    case NormKind::nuclear: {
      double total = 0.0;
      for (double v : singular_values(x)) total += v;
      return total;
    }
  }
  return 0.0;
}

SvtResult svt_detail(const Mat& x, double tau) {
  if (!(tau >= 0.0)) throw ArgumentError("svt: tau must be nonnegative");
  if (x.empty()) throw ArgumentError("svt: empty matrix");
  SvdFactors f = triplets_above(x, tau);
  SvtResult out;
  if (f.s.empty()) {
    out.value = Mat(x.rows(), x.cols());
    return out;
  }
  for (double& s : f.s) {
    s = std::max(s - tau, 0.0);
    if (s > 0.0) {
      out.nuclear += s;
      ++out.rank;
    }
  }
  out.value = reconstruct(f, out.rank);
  return out;
}

Mat svt(const Mat& x, double tau) {
  if (tau == 0.0) {
    require_nonempty(x, "svt");
    return x;
  }
  return svt_detail(x, tau).value;
}

Mat clip_singular_values(const Mat& x, double radius) {
  if (!(radius >= 0.0)) throw ArgumentError("clip_singular_values: radius must be nonnegative");
  SvdFactors f = triplets_above(x, radius);
  if (f.s.empty()) return x;
  // x - sum (s_i - radius)_+ u_i v_i^T touches only the few clipped triplets.
  Mat out = x;
  for (std::size_t t = 0; t < f.s.size() && f.s[t] > radius; ++t) {
    const double excess = f.s[t] - radius;
    std::span<const double> ut = f.u.col(t);
    for (std::size_t j = 0; j < out.cols(); ++j) {
      kernels::axpy(-excess * f.v(j, t), ut, out.data().subspan(j * out.rows(), out.rows()));
    }
  }
  return out;
}

Mat best_rank_r(const Mat& x, std::size_t r) {
  require_nonempty(x, "best_rank_r");
  if (r > std::min(x.rows(), x.cols())) throw ArgumentError("best_rank_r: r exceeds min dimension");
  if (r == std::min(x.rows(), x.cols())) return x;
  if (r == 0) return Mat(x.rows(), x.cols());
  return reconstruct(svd(x), r);
}

Mat orthonormalize(const Mat& x) {
  require_nonempty(x, "orthonormalize");
  if (x.cols() > x.rows()) throw ArgumentError("orthonormalize: more columns than rows");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(detail::view(x));
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(x.rows(), x.cols());
  return detail::from_eigen(q);
}

Mat gaussian_matrix(std::size_t n1, std::size_t n2, std::uint64_t seed) {
  Mat g(n1, n2);
  Rng rng(seed);
  for (double& v : g.data()) v = rng.normal();
  return g;
}

Mat random_low_rank(std::size_t n1, std::size_t n2, std::size_t r,
                    std::span<const double> spectrum, std::uint64_t seed) {
  if (n1 == 0 || n2 == 0 || r == 0 || r > std::min(n1, n2)) {
    throw ArgumentError("random_low_rank: need 1 <= r <= min(n1, n2)");
  }
  if (spectrum.size() != r) throw ArgumentError("random_low_rank: spectrum length must equal r");
  for (std::size_t i = 0; i < r; ++i) {
    if (!(spectrum[i] > 0.0) || !std::isfinite(spectrum[i])) {
      throw ArgumentError("random_low_rank: spectrum must be positive and finite");
    }
    if (i > 0 && spectrum[i] > spectrum[i - 1]) {
      throw ArgumentError("random_low_rank: spectrum must be nonincreasing");
    }
  }
  const Mat u = orthonormalize(gaussian_matrix(n1, r, derive_seed(seed, {1})));
  const Mat v = orthonormalize(gaussian_matrix(n2, r, derive_seed(seed, {2})));
  SvdFactors f{u, std::vector<double>(spectrum.begin(), spectrum.end()), v};
  return reconstruct(f);
}

std::int64_t degrees_of_freedom(std::int64_t n1, std::int64_t n2, std::int64_t r) {
  if (n1 <= 0 || n2 <= 0) throw ArgumentError("degrees_of_freedom: dimensions must be positive");
  if (r < 0 || r > std::min(n1, n2)) throw ArgumentError("degrees_of_freedom: need 0 <= r <= min");
  return r * (n1 + n2 - r);
}

}  // namespace lrmr
