#include "tgic/tensor.h"

#include <cmath>

namespace tgic {

bool Tensor::all_finite() const {
  if (!defined()) return true;
  const double* p = data();
  const size_t n = size();
  for (size_t i = 0; i < n; ++i)
    if (!std::isfinite(p[i])) return false;
  return true;
}

}  // namespace tgic
