#include "lrmr/measop.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include "lrmr/errors.hpp"
#include "lrmr/kernels.hpp"
#include "lrmr/matrix_io.hpp"
#include "lrmr/rng.hpp"

namespace lrmr {

namespace fs = std::filesystem;

struct MeasOp::State {
  OpKind kind = OpKind::identity;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream_key = 0;
  double scale = 1.0;             // 1/sqrt(m) for random ensembles
  std::vector<double> rows;       // row-major m x dim when cached
  std::vector<EntryIndex> mask;   // entry_mask only

  std::size_t dim() const { return n1 * n2; }
};

namespace {

constexpr std::uint64_t kind_tag(OpKind kind) {
  switch (kind) {
    case OpKind::dense_rows: return 0x6465;
    case OpKind::gaussian: return 0x6761;
    case OpKind::bernoulli: return 0x6265;
    case OpKind::entry_mask: return 0x656d;
    case OpKind::identity: return 0x6964;
  }
  return 0;
}

void generate_row(const MeasOp::State& s, std::size_t i, std::span<double> out) {
  const CounterStream stream(s.stream_key);
  const std::uint64_t base = static_cast<std::uint64_t>(i) * s.dim();
  if (s.kind == OpKind::gaussian) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = s.scale * stream.normal(base + j);
  } else {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = s.scale * stream.sign(base + j);
  }
}

void check_x(const MeasOp& op, const Mat& x, const char* what) {
  if (x.rows() != op.n1() || x.cols() != op.n2()) {
    throw ArgumentError(std::string(what) + ": expected " + std::to_string(op.n1()) + "x" +
                        std::to_string(op.n2()) + " matrix, got " + std::to_string(x.rows()) +
                        "x" + std::to_string(x.cols()));
  }
}

void check_shape(std::size_t n1, std::size_t n2, std::size_t m) {
  if (n1 == 0 || n2 == 0 || m == 0) throw ArgumentError("operator: n1, n2 and m must be positive");
}

}  // namespace

std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::dense_rows: return "dense_rows";
    case OpKind::gaussian: return "gaussian";
    case OpKind::bernoulli: return "bernoulli";
    case OpKind::entry_mask: return "entry_mask";
    case OpKind::identity: return "identity";
  }
  return "unknown";
}

OpKind parse_op_kind(std::string_view name) {
  for (OpKind k : {OpKind::dense_rows, OpKind::gaussian, OpKind::bernoulli, OpKind::entry_mask,
                   OpKind::identity}) {
    if (to_string(k) == name) return k;
  }
  throw ArgumentError("unknown operator kind: " + std::string(name));
}

OpKind MeasOp::kind() const { return state_->kind; }
std::size_t MeasOp::n1() const { return state_->n1; }
std::size_t MeasOp::n2() const { return state_->n2; }
std::size_t MeasOp::m() const { return state_->m; }
std::size_t MeasOp::dim() const { return state_->dim(); }
std::uint64_t MeasOp::seed() const { return state_->seed; }
std::span<const EntryIndex> MeasOp::mask() const { return state_->mask; }

const double* MeasOp::cached_rows() const {
  return state_->rows.empty() ? nullptr : state_->rows.data();
}

void MeasOp::row(std::size_t i, std::span<double> out) const {
  const State& s = *state_;
  if (i >= s.m) throw ArgumentError("MeasOp::row: index out of range");
  if (out.size() != s.dim()) throw ArgumentError("MeasOp::row: output length must be n1*n2");
  if (!s.rows.empty()) {
    std::copy_n(s.rows.data() + i * s.dim(), s.dim(), out.begin());
    return;
  }
  switch (s.kind) {
    case OpKind::gaussian:
    case OpKind::bernoulli:
      generate_row(s, i, out);
      return;
    case OpKind::entry_mask:
      std::fill(out.begin(), out.end(), 0.0);
      out[s.mask[i].row + s.mask[i].col * s.n1] = 1.0;
      return;
    case OpKind::identity:
      std::fill(out.begin(), out.end(), 0.0);
      out[i] = 1.0;
      return;
    case OpKind::dense_rows:
      break;
  }
  throw ArgumentError("MeasOp::row: dense operator without rows");
}

MeasOp make_ensemble(OpKind kind, std::size_t n1, std::size_t n2, std::size_t m,
                     std::uint64_t seed, OpOptions options) {
  check_shape(n1, n2, m);
  auto s = std::make_shared<MeasOp::State>();
  s->kind = kind;
  s->n1 = n1;
  s->n2 = n2;
  s->m = m;
  s->seed = seed;
  s->stream_key = derive_seed(seed, {kind_tag(kind), n1, n2, m});
  const std::size_t dim = n1 * n2;
  switch (kind) {
    case OpKind::gaussian:
    case OpKind::bernoulli: {
      s->scale = 1.0 / std::sqrt(static_cast<double>(m));
      if (m <= options.cache_cap / dim) {
        s->rows.resize(m * dim);
        for (std::size_t i = 0; i < m; ++i) {
          generate_row(*s, i, std::span<double>(s->rows).subspan(i * dim, dim));
        }
      }
      break;
    }
    case OpKind::entry_mask: {
      if (m > dim) throw ArgumentError("entry_mask: m exceeds n1*n2 distinct entries");
      // Partial Fisher-Yates over the virtual array [0, dim); only touched slots are stored.
      Rng rng(s->stream_key);
      std::unordered_map<std::size_t, std::size_t> moved;
      auto value_at = [&](std::size_t k) {
        auto it = moved.find(k);
        return it == moved.end() ? k : it->second;
      };
      s->mask.reserve(m);
      for (std::size_t t = 0; t < m; ++t) {
        const std::size_t j = t + static_cast<std::size_t>(rng.below(dim - t));
        const std::size_t vj = value_at(j);
        moved[j] = value_at(t);
        s->mask.push_back({vj % n1, vj / n1});
      }
      s->seed = seed;
      break;
    }
    case OpKind::identity:
      if (m != dim) throw ArgumentError("identity operator requires m = n1*n2");
      s->seed = 0;
      break;
    case OpKind::dense_rows:
      throw ArgumentError("make_ensemble: dense_rows operators are built with make_dense_rows");
  }
  return MeasOp(std::move(s));
}

MeasOp make_dense_rows(std::size_t n1, std::size_t n2, const Mat& rows) {
  check_shape(n1, n2, rows.empty() ? 0 : rows.rows());
  if (rows.cols() != n1 * n2) throw ArgumentError("dense_rows: row length must be n1*n2");
  if (!rows.all_finite()) throw ArgumentError("dense_rows: non-finite entry");
  auto s = std::make_shared<MeasOp::State>();
  s->kind = OpKind::dense_rows;
  s->n1 = n1;
  s->n2 = n2;
  s->m = rows.rows();
  s->rows.resize(rows.size());
  const std::size_t dim = n1 * n2;
  for (std::size_t i = 0; i < s->m; ++i)
    for (std::size_t j = 0; j < dim; ++j) s->rows[i * dim + j] = rows(i, j);
  return MeasOp(std::move(s));
}

MeasOp make_entry_mask(std::size_t n1, std::size_t n2, std::vector<EntryIndex> entries) {
  check_shape(n1, n2, entries.size());
  std::unordered_set<std::size_t> seen;
  for (const auto& e : entries) {
    if (e.row >= n1 || e.col >= n2) throw ArgumentError("entry_mask: position out of range");
    if (!seen.insert(e.row + e.col * n1).second) {
      throw ArgumentError("entry_mask: duplicate position");
    }
  }
  auto s = std::make_shared<MeasOp::State>();
  s->kind = OpKind::entry_mask;
  s->n1 = n1;
  s->n2 = n2;
  s->m = entries.size();
  s->mask = std::move(entries);
  return MeasOp(std::move(s));
}

std::vector<double> apply(const MeasOp& op, const Mat& x) {
  check_x(op, x, "apply");
  const std::size_t m = op.m();
  const std::size_t dim = op.dim();
  std::vector<double> y(m, 0.0);
  switch (op.kind()) {
    case OpKind::identity:
      std::copy(x.data().begin(), x.data().end(), y.begin());
      return y;
    case OpKind::entry_mask: {
      const auto mask = op.mask();
      for (std::size_t i = 0; i < m; ++i) y[i] = x(mask[i].row, mask[i].col);
      return y;
    }
    default:
      break;
  }
  if (const double* rows = op.cached_rows()) {
    kernels::gemv_rows(rows, m, dim, x.data(), y);
    return y;
  }
  std::vector<double> buf(dim);
  for (std::size_t i = 0; i < m; ++i) {
    op.row(i, buf);
    y[i] = kernels::dot(buf, x.data());
  }
  return y;
}

Mat adjoint(const MeasOp& op, std::span<const double> q) {
  if (q.size() != op.m()) {
    throw ArgumentError("adjoint: expected vector of length " + std::to_string(op.m()) + ", got " +
                        std::to_string(q.size()));
  }
  Mat out(op.n1(), op.n2());
  const std::size_t dim = op.dim();
  switch (op.kind()) {
    case OpKind::identity:
      std::copy(q.begin(), q.end(), out.data().begin());
      return out;
    case OpKind::entry_mask: {
      const auto mask = op.mask();
      for (std::size_t i = 0; i < q.size(); ++i) out(mask[i].row, mask[i].col) += q[i];
      return out;
    }
    default:
      break;
  }
  if (const double* rows = op.cached_rows()) {
    kernels::gemv_rows_t(rows, op.m(), dim, q, out.data());
    return out;
  }
  std::vector<double> buf(dim);
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    op.row(i, buf);
    kernels::axpy(q[i], buf, out.data());
  }
  return out;
}

Mat to_dense(const MeasOp& op, std::size_t cap) {
  if (op.m() > cap / op.dim()) {
    throw ResourceError("to_dense: " + std::to_string(op.m()) + " x " + std::to_string(op.dim()) +
                        " exceeds the cap of " + std::to_string(cap) + " reals");
  }
  Mat out(op.m(), op.dim());
  std::vector<double> buf(op.dim());
  for (std::size_t i = 0; i < op.m(); ++i) {
    op.row(i, buf);
    for (std::size_t j = 0; j < buf.size(); ++j) out(i, j) = buf[j];
  }
  return out;
}

double op_spectral_norm(const MeasOp& op, double tol, int max_iter) {
  if (!(tol > 0.0)) throw ArgumentError("op_spectral_norm: tol must be positive");
  if (op.kind() == OpKind::identity) return 1.0;
  if (op.kind() == OpKind::entry_mask) return 1.0;  // A A* = I for distinct entries
  Mat x = gaussian_matrix(op.n1(), op.n2(), derive_seed(0x706f776572ull, {op.n1(), op.n2(), op.m()}));
  x *= 1.0 / norm(x, NormKind::frobenius);
  double estimate = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Mat z = adjoint(op, apply(op, x));
    const double rayleigh = inner(x, z);
    const double znorm = norm(z, NormKind::frobenius);
    if (znorm == 0.0) return 0.0;
    if (it > 0 && std::abs(rayleigh - estimate) <= tol * rayleigh) return std::sqrt(rayleigh);
    estimate = rayleigh;
    x = std::move(z);
    x *= 1.0 / znorm;
  }
  throw NumericError("op_spectral_norm: no convergence after " + std::to_string(max_iter) +
                         " iterations",
                     std::sqrt(std::max(estimate, 0.0)));
}

nlohmann::json op_manifest(const MeasOp& op, const fs::path& rows_path) {
  nlohmann::json j{{"kind", to_string(op.kind())}, {"n1", op.n1()}, {"n2", op.n2()}, {"m", op.m()}};
  switch (op.kind()) {
    case OpKind::gaussian:
    case OpKind::bernoulli:
      j["seed"] = op.seed();
      break;
    case OpKind::entry_mask: {
      nlohmann::json pairs = nlohmann::json::array();
      for (const auto& e : op.mask()) pairs.push_back({e.row, e.col});
      j["mask_pairs"] = std::move(pairs);
      break;
    }
    case OpKind::dense_rows:
      j["rows_path"] = rows_path.generic_string();
      break;
    case OpKind::identity:
      break;
  }
  return j;
}

void write_op_manifest(const MeasOp& op, const fs::path& manifest_path,
                       const fs::path& rows_csv_path) {
  fs::path stored;
  if (op.kind() == OpKind::dense_rows) {
    if (rows_csv_path.empty()) throw ArgumentError("write_op_manifest: dense_rows needs a CSV path");
    write_csv(to_dense(op), rows_csv_path);
    const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : ".";
    std::error_code ec;
    stored = fs::relative(rows_csv_path, base, ec);
    if (ec || stored.empty()) stored = rows_csv_path;
  }
  if (manifest_path.has_parent_path()) fs::create_directories(manifest_path.parent_path());
  std::ofstream out(manifest_path);
  if (!out) throw IoError("cannot open for writing: " + manifest_path.string());
  out << op_manifest(op, stored).dump(2) << '\n';
}

MeasOp load_op_manifest(const nlohmann::json& j, const fs::path& base_dir, OpOptions options) {
  try {
    const OpKind kind = parse_op_kind(j.at("kind").get<std::string>());
    const auto n1 = j.at("n1").get<std::size_t>();
    const auto n2 = j.at("n2").get<std::size_t>();
    const auto m = j.at("m").get<std::size_t>();
    switch (kind) {
      case OpKind::gaussian:
      case OpKind::bernoulli:
        return make_ensemble(kind, n1, n2, m, j.at("seed").get<std::uint64_t>(), options);
      case OpKind::identity:
        return make_ensemble(kind, n1, n2, m, 0, options);
      case OpKind::entry_mask: {
        if (j.contains("mask_pairs")) {
          std::vector<EntryIndex> entries;
          for (const auto& p : j.at("mask_pairs")) {
            entries.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
          }
          if (entries.size() != m) throw ArgumentError("operator manifest: mask_pairs length != m");
          return make_entry_mask(n1, n2, std::move(entries));
        }
        return make_ensemble(kind, n1, n2, m, j.at("seed").get<std::uint64_t>(), options);
      }
      case OpKind::dense_rows: {
        fs::path p = j.at("rows_path").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        const Mat rows = read_csv(p);
        if (rows.rows() != m) throw ArgumentError(p.string() + ": row count != m");
        return make_dense_rows(n1, n2, rows);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("operator manifest: ") + e.what());
  }
  throw ArgumentError("operator manifest: unsupported kind");
}

MeasOp read_op_manifest(const fs::path& manifest_path, OpOptions options) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open for reading: " + manifest_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(manifest_path.string() + ": " + e.what());
  }
  const fs::path base = manifest_path.has_parent_path() ? manifest_path.parent_path() : ".";
  return load_op_manifest(j, base, options);
}

}  // namespace lrmr
