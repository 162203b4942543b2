#include "rsweep/error.hpp"
#include "rsweep/kernels.hpp"

namespace rsweep::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

namespace {

const KernelSet kScalar{&reparam_cost_scalar, &combined_cost_scalar, "scalar"};

#if defined(__x86_64__) || defined(_M_X64)
const KernelSet kAvx2{&reparam_cost_avx2, &combined_cost_avx2, "avx2"};
#endif

}  // namespace

const KernelSet& select(Isa isa) {
#if defined(__x86_64__) || defined(_M_X64)
  const bool avx2_ok = cpu_has_avx2();
  switch (isa) {
    case Isa::Scalar: return kScalar;
    case Isa::Avx2: return avx2_ok ? kAvx2 : kScalar;
    case Isa::Auto: return avx2_ok ? kAvx2 : kScalar;
  }
#else
  (void)isa;
#endif
  return kScalar;
}

Isa parse_isa(const std::string& name) {
  if (name == "auto") return Isa::Auto;
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  throw Error(ErrorCode::ConfigError, "unknown kernel '" + name + "'");
}

}  // namespace rsweep::kernels
