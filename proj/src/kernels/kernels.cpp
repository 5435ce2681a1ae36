#include "slr/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace slr::kernels {
namespace {

const Ops& choose() {
  const char* force = std::getenv("SLR_KERNELS");
  if (force != nullptr) {
    std::string want(force);
    if (want == "scalar") return scalar_ops();
    if (want == "avx2") {
      if (const Ops* ops = avx2_ops()) return *ops;
      throw std::runtime_error("SLR_KERNELS=avx2 but AVX2 is unavailable");
    }
    if (want == "neon") {
      if (const Ops* ops = neon_ops()) return *ops;
      throw std::runtime_error("SLR_KERNELS=neon but NEON is unavailable");
    }
    throw std::runtime_error("unknown SLR_KERNELS value: " + want);
  }
  if (const Ops* ops = avx2_ops()) return *ops;
  if (const Ops* ops = neon_ops()) return *ops;
  return scalar_ops();
}

}  // namespace

const Ops& active() {
  static const Ops& chosen = choose();
  return chosen;
}

std::string active_name() { return active().name; }

}  // namespace slr::kernels
