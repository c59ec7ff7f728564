#ifndef TGIC_RANGE_CODER_H_
#define TGIC_RANGE_CODER_H_

#include <cstdint>
#include <vector>

#include "tgic/entropy_model.h"
#include "tgic/tensor.h"

namespace tgic {
namespace coder {

// Quantized CDF with 16-bit total frequency over a contiguous integer
// alphabet [offset, offset + size).
struct CDFTable {
  int offset = 0;
  std::vector<uint32_t> cum;  // size + 1 entries; cum[0] = 0, cum[size] = 65536
  int size() const { return static_cast<int>(cum.size()) - 1; }
  bool contains(int value) const { return value >= offset && value < offset + size(); }
  uint32_t freq(int index) const { return cum[static_cast<size_t>(index) + 1] - cum[static_cast<size_t>(index)]; }
  // information content of a symbol under the quantized table, in bits
  double bits(int value) const;
};

// Quantizes a probability vector to 16-bit counts. Every symbol keeps mass
// >= 1; rounding surplus/deficit is absorbed by the largest-mass symbols.
CDFTable build_cdf_table(const std::vector<double>& probs, int offset = 0);

// Arithmetic coder over 32-bit interval state with bit renormalization and
// pending-bit carry handling. Worst-case excess over the quantized entropy is
// under 1e-4 bits per symbol plus a < 10-bit flush.
class RangeEncoder {
 public:
  void encode(int value, const CDFTable& table);
  std::vector<uint8_t> finish();

 private:
  void put_bit(int b);
  void emit(int b);
  uint32_t low_ = 0;
  uint32_t high_ = 0xFFFFFFFFu;
  uint64_t pending_ = 0;
  std::vector<uint8_t> bytes_;
  uint8_t cur_ = 0;
  int nbits_ = 0;
  bool finished_ = false;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(const std::vector<uint8_t>& payload);
  int decode(const CDFTable& table);

 private:
  int next_bit();
  const std::vector<uint8_t>* data_;
  size_t byte_pos_ = 0;
  int bit_pos_ = 0;
  uint32_t low_ = 0;
  uint32_t high_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
  // bits consumed past the end of the payload; a valid stream never needs
  // more than the 32-bit register priming minus the flush, so a large
  // overrun means the payload was truncated
  size_t overrun_ = 0;
};

// One table per symbol position.
std::vector<uint8_t> encode_symbols(const std::vector<int>& symbols,
                                    const std::vector<const CDFTable*>& tables);
std::vector<int> decode_symbols(const std::vector<uint8_t>& payload,
                                const std::vector<const CDFTable*>& tables, size_t n);

// --- model-derived tables ----------------------------------------------------

// 64-entry log-spaced scale grid on [0.01, 64]; sigma snaps to the nearest
// grid point in log domain so sender and receiver build identical tables.
const std::vector<double>& scale_grid();
int snap_scale_index(double sigma);
double snapped_scale(double sigma);

// Conditional Gaussian table for one latent element: alphabet
// [mu - (9*sigma + 2), mu + (9*sigma + 2)] clamped to [-255, 255].
CDFTable gaussian_cdf_table(double mu, double sigma);

// Static per-channel tables for the hyper-latent over the full clamp range.
std::vector<CDFTable> prior_cdf_tables(const entropy::FactorizedPrior& prior);

}  // namespace coder
}  // namespace tgic

#endif  // TGIC_RANGE_CODER_H_
