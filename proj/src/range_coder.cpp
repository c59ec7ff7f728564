#include "tgic/range_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tgic/common.h"

namespace tgic {
namespace coder {

namespace {

constexpr uint32_t kHalf = 0x80000000u;
constexpr uint32_t kQuarter = 0x40000000u;
constexpr uint32_t kThreeQuarters = 0xC0000000u;
constexpr uint32_t kTotal = 65536;
constexpr size_t kMaxOverrunBits = 64;
constexpr int kLatentBound = 255;

double gaussian_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

}  // namespace

double CDFTable::bits(int value) const {
  TGIC_CHECK_INPUT(contains(value), "value outside table alphabet");
  return -std::log2(static_cast<double>(freq(value - offset)) / kTotal);
}

CDFTable build_cdf_table(const std::vector<double>& probs, int offset) {
  const size_t k = probs.size();
  TGIC_CHECK_INPUT(k >= 1, "cdf table needs at least one symbol");
  TGIC_CHECK_INPUT(k <= kTotal, "alphabet larger than 2^16 not representable at 16-bit precision");
  double sum = 0.0;
  for (double p : probs) {
    TGIC_CHECK_INPUT(std::isfinite(p) && p >= 0.0, "probabilities must be finite and non-negative");
    sum += p;
  }
  TGIC_CHECK_INPUT(sum > 0.0, "probabilities must not all be zero");

  std::vector<int64_t> counts(k);
  int64_t total = 0;
  for (size_t i = 0; i < k; ++i) {
    counts[i] = std::max<int64_t>(1, std::llround(probs[i] / sum * kTotal));
    total += counts[i];
  }
  if (total < kTotal) {
    // give the whole deficit to the largest mass (ties -> smallest index)
    size_t top = static_cast<size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    counts[top] += kTotal - total;
  } else if (total > kTotal) {
    // shave the surplus off the largest masses, never below one count
    int64_t surplus = total - kTotal;
    while (surplus > 0) {
      size_t top = static_cast<size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      int64_t take = std::min(surplus, counts[top] - 1);
      TGIC_CHECK(take > 0, "cdf quantization cannot satisfy the per-symbol minimum");
      counts[top] -= take;
      surplus -= take;
    }
  }

  CDFTable table;
  table.offset = offset;
  table.cum.resize(k + 1);
  table.cum[0] = 0;
  for (size_t i = 0; i < k; ++i) table.cum[i + 1] = table.cum[i] + static_cast<uint32_t>(counts[i]);
  TGIC_CHECK(table.cum[k] == kTotal, "cdf table does not sum to 2^16");
  return table;
}

void RangeEncoder::put_bit(int b) {
  cur_ = static_cast<uint8_t>((cur_ << 1) | b);
  if (++nbits_ == 8) {
    bytes_.push_back(cur_);
    cur_ = 0;
    nbits_ = 0;
  }
}

void RangeEncoder::emit(int b) {
  put_bit(b);
  while (pending_ > 0) {
    put_bit(b ^ 1);
    --pending_;
  }
}

void RangeEncoder::encode(int value, const CDFTable& table) {
  TGIC_CHECK(!finished_, "encoder already finished");
  TGIC_CHECK_INPUT(table.contains(value), "symbol outside table alphabet");
  const size_t idx = static_cast<size_t>(value - table.offset);
  const uint64_t cum = table.cum[idx];
  const uint64_t top = table.cum[idx + 1];
  TGIC_CHECK(top > cum, "zero-frequency symbol in cdf table");

  const uint64_t span = static_cast<uint64_t>(high_) - low_ + 1;
  high_ = low_ + static_cast<uint32_t>((span * top) >> 16) - 1;
  low_ = low_ + static_cast<uint32_t>((span * cum) >> 16);
  for (;;) {
    if (high_ < kHalf) {
      emit(0);
    } else if (low_ >= kHalf) {
      emit(1);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
  }
}

std::vector<uint8_t> RangeEncoder::finish() {
  TGIC_CHECK(!finished_, "encoder already finished");
  finished_ = true;
  // two more bits pin a point inside [low, high]; the decoder zero-pads
  ++pending_;
  emit(low_ >= kQuarter ? 1 : 0);
  if (nbits_ > 0) {
    cur_ = static_cast<uint8_t>(cur_ << (8 - nbits_));
    bytes_.push_back(cur_);
    cur_ = 0;
    nbits_ = 0;
  }
  return std::move(bytes_);
}

RangeDecoder::RangeDecoder(const std::vector<uint8_t>& payload) : data_(&payload) {
  for (int i = 0; i < 32; ++i) code_ = (code_ << 1) | static_cast<uint32_t>(next_bit());
}

int RangeDecoder::next_bit() {
  if (byte_pos_ < data_->size()) {
    const int b = ((*data_)[byte_pos_] >> (7 - bit_pos_)) & 1;
    if (++bit_pos_ == 8) {
      bit_pos_ = 0;
      ++byte_pos_;
    }
    return b;
  }
  if (++overrun_ > kMaxOverrunBits) throw FormatError("range decoder: truncated payload");
  return 0;
}

int RangeDecoder::decode(const CDFTable& table) {
  const uint64_t span = static_cast<uint64_t>(high_) - low_ + 1;
  const uint64_t off = code_ - low_;
  const uint32_t target =
      static_cast<uint32_t>(std::min<uint64_t>(kTotal - 1, ((off + 1) * kTotal - 1) / span));
  const auto it = std::upper_bound(table.cum.begin(), table.cum.end(), target);
  TGIC_CHECK(it != table.cum.begin() && it != table.cum.end(), "range decoder: target outside table");
  const size_t idx = static_cast<size_t>(it - table.cum.begin()) - 1;
  const uint64_t cum = table.cum[idx];
  const uint64_t top = table.cum[idx + 1];

  high_ = low_ + static_cast<uint32_t>((span * top) >> 16) - 1;
  low_ = low_ + static_cast<uint32_t>((span * cum) >> 16);
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      code_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < kThreeQuarters) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      code_ -= kQuarter;
    } else {
      break;
    }
    low_ <<= 1;
    high_ = (high_ << 1) | 1;
    code_ = (code_ << 1) | static_cast<uint32_t>(next_bit());
  }
  return static_cast<int>(idx) + table.offset;
}

std::vector<uint8_t> encode_symbols(const std::vector<int>& symbols,
                                    const std::vector<const CDFTable*>& tables) {
  TGIC_CHECK_INPUT(symbols.size() == tables.size(), "one cdf table required per symbol");
  RangeEncoder enc;
  for (size_t i = 0; i < symbols.size(); ++i) {
    TGIC_CHECK(tables[i] != nullptr, "null cdf table");
    if (!tables[i]->contains(symbols[i])) {
      throw InputError("symbol at position " + std::to_string(i) + " (value " +
                       std::to_string(symbols[i]) + ") is outside its table alphabet");
    }
    enc.encode(symbols[i], *tables[i]);
  }
  return enc.finish();
}

std::vector<int> decode_symbols(const std::vector<uint8_t>& payload,
                                const std::vector<const CDFTable*>& tables, size_t n) {
  TGIC_CHECK_INPUT(tables.size() == n, "one cdf table required per symbol");
  RangeDecoder dec(payload);
  std::vector<int> out(n);
  for (size_t i = 0; i < n; ++i) {
    TGIC_CHECK(tables[i] != nullptr, "null cdf table");
    out[i] = dec.decode(*tables[i]);
  }
  return out;
}

const std::vector<double>& scale_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g(64);
    const double lo = std::log(0.01);
    const double hi = std::log(64.0);
    for (int i = 0; i < 64; ++i) g[static_cast<size_t>(i)] = std::exp(lo + (hi - lo) * i / 63.0);
    return g;
  }();
  return grid;
}

int snap_scale_index(double sigma) {
  TGIC_CHECK_INPUT(std::isfinite(sigma) && sigma > 0.0, "scale must be finite and positive");
  const double lo = std::log(0.01);
  const double hi = std::log(64.0);
  const double step = (hi - lo) / 63.0;
  const long idx = std::lround((std::log(sigma) - lo) / step);
  return static_cast<int>(std::clamp(idx, 0l, 63l));
}

double snapped_scale(double sigma) { return scale_grid()[static_cast<size_t>(snap_scale_index(sigma))]; }

CDFTable gaussian_cdf_table(double mu, double sigma) {
  TGIC_CHECK_INPUT(std::isfinite(mu), "gaussian mean must be finite");
  const double s = snapped_scale(sigma);
  const double reach = 9.0 * s + 2.0;
  const int lo = static_cast<int>(std::clamp(std::floor(mu - reach), -255.0, 255.0));
  const int hi = static_cast<int>(std::clamp(std::ceil(mu + reach), -255.0, 255.0));
  std::vector<double> probs(static_cast<size_t>(hi - lo) + 1);
  for (int v = lo; v <= hi; ++v) {
    const double mass = gaussian_cdf(v + 0.5, mu, s) - gaussian_cdf(v - 0.5, mu, s);
    probs[static_cast<size_t>(v - lo)] = std::max(mass, std::pow(2.0, -30));
  }
  return build_cdf_table(probs, lo);
}

std::vector<CDFTable> prior_cdf_tables(const entropy::FactorizedPrior& prior) {
  const int c = prior.channels();
  const int k = 2 * kLatentBound + 1;
  Tensor upper_in({c, k});
  Tensor lower_in({c, k});
  for (int ch = 0; ch < c; ++ch) {
    for (int v = -kLatentBound; v <= kLatentBound; ++v) {
      const size_t at = static_cast<size_t>(ch) * k + static_cast<size_t>(v + kLatentBound);
      upper_in.data()[at] = v + 0.5;
      lower_in.data()[at] = v - 0.5;
    }
  }
  Tensor upper = prior.cdf_values(upper_in);
  Tensor lower = prior.cdf_values(lower_in);
  std::vector<CDFTable> tables;
  tables.reserve(static_cast<size_t>(c));
  for (int ch = 0; ch < c; ++ch) {
    std::vector<double> probs(static_cast<size_t>(k));
    for (int i = 0; i < k; ++i) {
      const size_t at = static_cast<size_t>(ch) * k + static_cast<size_t>(i);
      probs[static_cast<size_t>(i)] = std::max(upper.data()[at] - lower.data()[at], std::pow(2.0, -30));
    }
    tables.push_back(build_cdf_table(probs, -kLatentBound));
  }
  return tables;
}

}  // namespace coder
}  // namespace tgic
