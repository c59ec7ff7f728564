#ifndef TGIC_RNG_H_
#define TGIC_RNG_H_

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "tgic/tensor.h"

namespace tgic {

// Deterministic random source. mt19937_64 has a standardized sequence, and
// the float conversions below are our own, so draws are identical across
// platforms and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  size_t index(size_t n) { return static_cast<size_t>(uniform() * static_cast<double>(n)) % n; }

  // Box-Muller; one value per call, deterministic draw order.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  void fill_uniform(Tensor& t, double lo, double hi) {
    for (size_t i = 0; i < t.size(); ++i) t[i] = uniform(lo, hi);
  }
  void fill_normal(Tensor& t, double mean, double stddev) {
    for (size_t i = 0; i < t.size(); ++i) t[i] = mean + stddev * normal();
  }

  // Serializable state for training resume.
  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }
  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace tgic

#endif  // TGIC_RNG_H_
