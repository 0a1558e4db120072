#pragma once

// Linear sampling operators A : R^{n1 x n2} -> R^m, [A(X)]_i = <A_i, X>.
//
// A MeasOp is an immutable value with shared internal storage; copies are
// cheap and every method is safe to call concurrently. Row i is handled as
// vec(A_i), a length n1*n2 vector in the column-major layout of Mat.
//
// Random ensembles are regenerated from a Philox stream keyed by
// (seed, kind, n1, n2, m): entry (i, j) of the stacked m x (n1 n2) matrix is
// draw number i*n1*n2 + j. Ensembles whose m*n1*n2 fits the cache cap are
// materialized once at construction; larger ones regenerate rows on every
// call. Both paths produce identical numbers.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lrmr/mat.hpp"

namespace lrmr {

enum class OpKind { dense_rows, gaussian, bernoulli, entry_mask, identity };

std::string_view to_string(OpKind kind);
/// Throws ArgumentError for unknown names.
OpKind parse_op_kind(std::string_view name);

/// Position of a sampled entry of X.
struct EntryIndex {
  std::size_t row = 0;
  std::size_t col = 0;
  friend bool operator==(const EntryIndex&, const EntryIndex&) = default;
};

/// Default cap on reals held by one cached operator, Gram matrix or dense copy.
inline constexpr std::size_t kDefaultMemoryCap = 100'000'000;

struct OpOptions {
  std::size_t cache_cap = kDefaultMemoryCap;
};

class MeasOp {
 public:
  struct State;

  OpKind kind() const;
  std::size_t n1() const;
  std::size_t n2() const;
  std::size_t m() const;
  /// n1 * n2
  std::size_t dim() const;
  /// Seed for gaussian, bernoulli and entry_mask kinds; 0 otherwise.
  std::uint64_t seed() const;
  /// Sampled positions, in measurement order (entry_mask only).
  std::span<const EntryIndex> mask() const;
  /// Row-major m x dim block of stacked rows when held in memory, else nullptr.
  const double* cached_rows() const;

  /// vec(A_i) written into `out` (length dim()).
  void row(std::size_t i, std::span<double> out) const;

 private:
  explicit MeasOp(std::shared_ptr<const State> state) : state_(std::move(state)) {}
  friend MeasOp make_ensemble(OpKind, std::size_t, std::size_t, std::size_t, std::uint64_t,
                              OpOptions);
  friend MeasOp make_dense_rows(std::size_t, std::size_t, const Mat&);
  friend MeasOp make_entry_mask(std::size_t, std::size_t, std::vector<EntryIndex>);

  std::shared_ptr<const State> state_;
};

/// Seeded ensembles: gaussian (i.i.d. N(0, 1/m) entries), bernoulli (+-1/sqrt(m)),
/// entry_mask (m distinct entries chosen uniformly without replacement by a
/// seeded Fisher-Yates pass) or identity (requires m = n1 n2; seed unused).
MeasOp make_ensemble(OpKind kind, std::size_t n1, std::size_t n2, std::size_t m,
                     std::uint64_t seed, OpOptions options = {});
/// Explicit rows: `rows` is m x (n1 n2), row i = vec(A_i)^T.
MeasOp make_dense_rows(std::size_t n1, std::size_t n2, const Mat& rows);
/// Explicit sampled entries; positions must be distinct and in range.
MeasOp make_entry_mask(std::size_t n1, std::size_t n2, std::vector<EntryIndex> entries);

/// A(X), length m.
std::vector<double> apply(const MeasOp& op, const Mat& x);
/// A*(q) = sum_i q_i A_i.
Mat adjoint(const MeasOp& op, std::span<const double> q);
/// m x (n1 n2) matrix whose row i is vec(A_i)^T. Throws ResourceError past `cap` reals.
Mat to_dense(const MeasOp& op, std::size_t cap = kDefaultMemoryCap);

/// ||A|| = sqrt(lambda_max(A* A)) by power iteration, stopping when successive
/// Rayleigh quotients agree to relative `tol`. Throws NumericError carrying the
/// best estimate when `max_iter` is exhausted.
double op_spectral_norm(const MeasOp& op, double tol = 1e-10, int max_iter = 5000);

// Operator manifest: {"kind", "n1", "n2", "m", and one of "seed", "mask_pairs"
// ([[row, col], ...]) or "rows_path" (CSV of the stacked m x n1n2 matrix)}.
nlohmann::json op_manifest(const MeasOp& op, const std::filesystem::path& rows_path = {});
/// Writes the manifest, plus the rows CSV for dense_rows operators.
void write_op_manifest(const MeasOp& op, const std::filesystem::path& manifest_path,
                       const std::filesystem::path& rows_csv_path = {});
MeasOp load_op_manifest(const nlohmann::json& manifest, const std::filesystem::path& base_dir,
                        OpOptions options = {});
MeasOp read_op_manifest(const std::filesystem::path& manifest_path, OpOptions options = {});

}  // namespace lrmr
