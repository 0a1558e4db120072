#include <atomic>
#include <cstdlib>
#include <string>

#include "kernels_impl.hpp"
#include "lrmr/errors.hpp"
#include "lrmr/kernels.hpp"

namespace lrmr::kernels {

namespace {

constexpr KernelTable kScalar{scalar::dot,   scalar::sum_sq,    scalar::axpy,
                              scalar::axpby, scalar::gemv_rows, scalar::gemv_rows_t};

#ifdef LRMR_HAVE_AVX2
constexpr KernelTable kAvx2{avx2::dot,   avx2::sum_sq,    avx2::axpy,
                            avx2::axpby, avx2::gemv_rows, avx2::gemv_rows_t};
#endif

bool cpu_has_avx2() {
#if defined(LRMR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa initial_isa() {
  if (const char* env = std::getenv("LRMR_ISA"); env != nullptr && std::string(env) == "scalar") {
    return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<const KernelTable*> g_active{nullptr};
std::atomic<Isa> g_isa{Isa::scalar};

void install(Isa isa) {
  g_isa.store(isa);
  g_active.store(&table(isa));
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

bool isa_supported(Isa isa) {
  if (isa == Isa::scalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2;
}

const KernelTable& table(Isa isa) {
  if (!isa_supported(isa)) {
    throw ArgumentError("kernel ISA not supported on this CPU: " + std::string(isa_name(isa)));
  }
#ifdef LRMR_HAVE_AVX2
  if (isa == Isa::avx2) return kAvx2;
#endif
  return kScalar;
}

Isa active_isa() {
  (void)detail::active_table();
  return g_isa.load();
}

void force_isa(Isa isa) { install(isa); }

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

namespace detail {
const KernelTable& active_table() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    install(initial_isa());
    t = g_active.load(std::memory_order_acquire);
  }
  return *t;
}
}  // namespace detail

}  // namespace lrmr::kernels
