#include "lrmr/gram.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>

#include "eigen_bridge.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/kernels.hpp"

namespace lrmr {

namespace {

constexpr double kZeroEig = 1e-12;

using Vec = Eigen::VectorXd;
using VecMap = Eigen::Map<const Eigen::VectorXd>;

VecMap vec_view(const Mat& x) {
  return VecMap(x.data().data(), static_cast<Eigen::Index>(x.size()));
}

VecMap vec_view(std::span<const double> x) {
  return VecMap(x.data(), static_cast<Eigen::Index>(x.size()));
}

// Matrix-vector products on column-major Eigen storage routed through the
// dispatched kernels: a column-major r x c block is a row-major c x r block.
Vec mul_t(const Eigen::MatrixXd& a, const Vec& v) {  // a^T v
  Vec out(a.cols());
  kernels::gemv_rows(a.data(), static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(a.rows()),
                     std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                     std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Vec mul(const Eigen::MatrixXd& a, const Vec& v) {  // a v
  Vec out(a.rows());
  kernels::gemv_rows_t(a.data(), static_cast<std::size_t>(a.cols()), static_cast<std::size_t>(a.rows()),
                       std::span<const double>(v.data(), static_cast<std::size_t>(v.size())),
                       std::span<double>(out.data(), static_cast<std::size_t>(out.size())));
  return out;
}

Mat unvec(const MeasOp& op, const Vec& v) {
  Mat out(op.n1(), op.n2());
  std::copy(v.data(), v.data() + v.size(), out.data().begin());
  return out;
}

// Conjugate gradients for an SPD (or consistent PSD) system given as a callback.
Vec conjugate_gradient(const std::function<Vec(const Vec&)>& apply, const Vec& b) {
  Vec x = Vec::Zero(b.size());
  const double bnorm = b.norm();
  if (bnorm == 0.0) return x;
  Vec r = b;
  Vec p = r;
  double rr = r.squaredNorm();
  const Eigen::Index cap = std::max<Eigen::Index>(50, 10 * b.size());
  for (Eigen::Index it = 0; it < cap && std::sqrt(rr) > 1e-13 * bnorm; ++it) {
    const Vec ap = apply(p);
    const double pap = p.dot(ap);
    if (!(pap > 0.0)) break;
    const double alpha = rr / pap;
    x += alpha * p;
    r -= alpha * ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

}  // namespace

struct GramSpectrum::Impl {
  MeasOp op;
  Form form = Form::identity;
  double lambda_max = 1.0;
  std::size_t rank = 0;
  Eigen::MatrixXd rt;      // A^T as N x m (dual form)
  Eigen::MatrixXd b;       // A^T A (primal form)
  Eigen::MatrixXd basis;   // eigenvectors of B (primal) or G (dual)
  Vec eig;                 // matching eigenvalues
  Vec eig_pinv;            // 1/eig above the zero threshold, else 0
  std::vector<double> mask_diag;  // diagonal of B (mask form)

  explicit Impl(MeasOp o) : op(std::move(o)) {}

  Vec apply_a(const Vec& v) const {  // A v for vec'd v
    if (form == Form::dual) return mul_t(rt, v);
    const auto y = apply(op, unvec(op, v));
    return vec_view(std::span<const double>(y));
  }
  Vec apply_at(const Vec& q) const {
    if (form == Form::dual) return mul(rt, q);
    const Mat z = adjoint(op, std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
    return vec_view(z);
  }
  Vec apply_b(const Vec& v) const {
    switch (form) {
      case Form::identity: return v;
      case Form::mask: {
        Vec out = v;
        for (Eigen::Index j = 0; j < v.size(); ++j) out[j] *= mask_diag[j];
        return out;
      }
      case Form::primal: return mul_t(b, v);
      case Form::dual: return mul(rt, mul_t(rt, v));
      case Form::iterative: return apply_at(apply_a(v));
    }
    return v;
  }

  void factor(const Eigen::MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    if (es.info() != Eigen::Success) throw NumericError("GramSpectrum: eigensolver failed");
    basis = es.eigenvectors();
    eig = es.eigenvalues().cwiseMax(0.0);
    lambda_max = eig.size() > 0 ? eig.maxCoeff() : 0.0;
    const double floor = kZeroEig * lambda_max;
    eig_pinv = Vec::Zero(eig.size());
    rank = 0;
    for (Eigen::Index k = 0; k < eig.size(); ++k) {
      if (eig[k] > floor && lambda_max > 0.0) {
        eig_pinv[k] = 1.0 / eig[k];
        ++rank;
      }
    }
  }
};

GramSpectrum::GramSpectrum(const MeasOp& op, std::size_t cap) {
  auto impl = std::make_shared<Impl>(op);
  const std::size_t n = op.dim();
  const std::size_t m = op.m();
  if (op.kind() == OpKind::identity) {
    impl->form = Form::identity;
    impl->lambda_max = 1.0;
    impl->rank = n;
  } else if (op.kind() == OpKind::entry_mask) {
    impl->form = Form::mask;
    impl->mask_diag.assign(n, 0.0);
    for (const auto& e : op.mask()) impl->mask_diag[e.row + e.col * op.n1()] = 1.0;
    impl->lambda_max = 1.0;
    impl->rank = m;
  } else {
    const std::size_t side = std::min(n, m);
    const bool fits = m <= cap / n && side <= cap / side;
    if (!fits) {
      impl->form = Form::iterative;
      const double nrm = op_spectral_norm(op);
      impl->lambda_max = nrm * nrm;
    } else {
      const Mat dense = to_dense(op, cap);
      const Eigen::MatrixXd rt = detail::view(dense).transpose();
      if (n <= m) {
        impl->form = Form::primal;
        impl->b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        impl->b.selfadjointView<Eigen::Lower>().rankUpdate(rt);
        impl->b = impl->b.selfadjointView<Eigen::Lower>();
        impl->factor(impl->b);
      } else {
        impl->form = Form::dual;
        impl->rt = rt;
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m),
                                                  static_cast<Eigen::Index>(m));
        g.selfadjointView<Eigen::Lower>().rankUpdate(rt.transpose());
        g = g.selfadjointView<Eigen::Lower>();
        impl->factor(g);
      }
    }
  }
  impl_ = std::move(impl);
}

GramSpectrum::Form GramSpectrum::form() const { return impl_->form; }
const MeasOp& GramSpectrum::op() const { return impl_->op; }
double GramSpectrum::lambda_max() const { return impl_->lambda_max; }
std::size_t GramSpectrum::rank() const { return impl_->rank; }

Mat GramSpectrum::gram(const Mat& z) const {
  const Impl& s = *impl_;
  if (z.rows() != s.op.n1() || z.cols() != s.op.n2()) throw ArgumentError("gram: shape mismatch");
  return unvec(s.op, s.apply_b(vec_view(z)));
}

Mat GramSpectrum::resolve_shifted_square(const Mat& r, double c) const {
  const Impl& s = *impl_;
  if (r.rows() != s.op.n1() || r.cols() != s.op.n2()) {
    throw ArgumentError("resolve_shifted_square: shape mismatch");
  }
  if (!(c >= 0.0)) throw ArgumentError("resolve_shifted_square: c must be nonnegative");
  const VecMap v = vec_view(r);
  switch (s.form) {
    case Form::identity:
      return r * (1.0 / (1.0 + c));
    case Form::mask: {
      Mat out = r;
      auto d = out.data();
      for (std::size_t j = 0; j < d.size(); ++j) d[j] /= 1.0 + c * s.mask_diag[j];
      return out;
    }
    case Form::primal: {
      Vec t = mul_t(s.basis, v);
      t.array() /= 1.0 + c * s.eig.array().square();
      return unvec(s.op, mul(s.basis, t));
    }
    case Form::dual: {
      // Woodbury: nonzero eigenpairs of B are (lambda_k, A^T q_k / sqrt(lambda_k)).
      Vec t = mul_t(s.basis, mul_t(s.rt, v));
      t.array() *= c * s.eig.array() / (1.0 + c * s.eig.array().square());
      return unvec(s.op, v - mul(s.rt, mul(s.basis, t)));
    }
    case Form::iterative: {
      auto op = [&](const Vec& p) { return Vec(p + c * s.apply_b(s.apply_b(p))); };
      return unvec(s.op, conjugate_gradient(op, v));
    }
  }
  return r;
}

Mat GramSpectrum::pseudo_solve(std::span<const double> x) const {
  const Impl& s = *impl_;
  if (x.size() != s.op.m()) throw ArgumentError("pseudo_solve: length mismatch");
  switch (s.form) {
    case Form::identity:
    case Form::mask:
      return adjoint(s.op, x);
    case Form::primal: {
      const Vec atx = s.apply_at(vec_view(x));
      Vec t = mul_t(s.basis, atx);
      t.array() *= s.eig_pinv.array();
      return unvec(s.op, mul(s.basis, t));
    }
    case Form::dual: {
      Vec t = mul_t(s.basis, vec_view(x));
      t.array() *= s.eig_pinv.array();
      return unvec(s.op, mul(s.rt, mul(s.basis, t)));
    }
    case Form::iterative: {
      auto g = [&](const Vec& p) { return s.apply_a(s.apply_at(p)); };
      return unvec(s.op, s.apply_at(conjugate_gradient(g, vec_view(x))));
    }
  }
  return adjoint(s.op, x);
}

Mat GramSpectrum::project_affine(const Mat& z, std::span<const double> x) const {
  const Impl& s = *impl_;
  if (x.size() != s.op.m()) throw ArgumentError("project_affine: length mismatch");
  if (s.form == Form::mask) {
    Mat out = z;
    const auto mask = s.op.mask();
    for (std::size_t i = 0; i < mask.size(); ++i) out(mask[i].row, mask[i].col) = x[i];
    return out;
  }
  if (s.form == Form::primal) {
    // Z - B^+ (B Z - A* x) avoids forming A Z in the tall case.
    const Vec rhs = mul_t(s.b, vec_view(z)) - s.apply_at(vec_view(x));
    Vec t = mul_t(s.basis, rhs);
    t.array() *= s.eig_pinv.array();
    return z - unvec(s.op, mul(s.basis, t));
  }
  std::vector<double> resid = apply(s.op, z);
  for (std::size_t i = 0; i < resid.size(); ++i) resid[i] -= x[i];
  return z - pseudo_solve(resid);
}

}  // namespace lrmr
