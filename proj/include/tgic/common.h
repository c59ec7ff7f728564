#ifndef TGIC_COMMON_H_
#define TGIC_COMMON_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace tgic {

// Error taxonomy, mapped to CLI exit codes in tools/tgic_main.cpp.
struct InputError : std::runtime_error {
  explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};
struct InternalError : std::runtime_error {
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

#define TGIC_CHECK_INPUT(cond, msg) \
  do { if (!(cond)) throw ::tgic::InputError(msg); } while (0)
#define TGIC_CHECK_CONFIG(cond, msg) \
  do { if (!(cond)) throw ::tgic::ConfigError(msg); } while (0)
#define TGIC_CHECK_FORMAT(cond, msg) \
  do { if (!(cond)) throw ::tgic::FormatError(msg); } while (0)
#define TGIC_CHECK(cond, msg) \
  do { if (!(cond)) throw ::tgic::InternalError(msg); } while (0)

// FNV-1a, used for model/vocabulary identity.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace tgic

#endif  // TGIC_COMMON_H_
