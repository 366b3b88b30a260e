#include <cstdlib>
#include <stdexcept>
#include <string>

#include "kmsq/simd/kernels.hpp"

namespace kmsq::simd {
namespace {

constexpr KernelTable kScalarTable{scalar::dot, scalar::axpy, scalar::trig_synthesis,
                                   scalar::squared_distance};
#if defined(KMSQ_HAVE_AVX2)
constexpr KernelTable kAvx2Table{avx2::dot, avx2::axpy, avx2::trig_synthesis,
                                 avx2::squared_distance};
#endif
#if defined(KMSQ_HAVE_NEON)
constexpr KernelTable kNeonTable{neon::dot, neon::axpy, neon::trig_synthesis,
                                 neon::squared_distance};
#endif

Isa select_isa() {
  if (const char* forced = std::getenv("KMSQ_SIMD"); forced && std::string(forced) == "scalar") {
    return Isa::Scalar;
  }
  if (isa_available(Isa::Avx2)) return Isa::Avx2;
  if (isa_available(Isa::Neon)) return Isa::Neon;
  return Isa::Scalar;
}

}  // namespace

std::string_view to_string(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return "scalar";
    case Isa::Avx2: return "avx2";
    case Isa::Neon: return "neon";
  }
  return "unknown";
}

bool isa_available(Isa isa) {
  switch (isa) {
    case Isa::Scalar: return true;
    case Isa::Avx2:
#if defined(KMSQ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Isa::Neon:
#if defined(KMSQ_HAVE_NEON)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Isa active_isa() {
  static const Isa isa = select_isa();
  return isa;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_available(isa)) {
    throw std::invalid_argument("SIMD variant not available: " + std::string(to_string(isa)));
  }
  switch (isa) {
#if defined(KMSQ_HAVE_AVX2)
    case Isa::Avx2: return kAvx2Table;
#endif
#if defined(KMSQ_HAVE_NEON)
    case Isa::Neon: return kNeonTable;
#endif
    default: return kScalarTable;
  }
}

const KernelTable& kernels() {
  static const KernelTable& table = kernels_for(active_isa());
  return table;
}

}  // namespace kmsq::simd
