#ifndef TGIC_CONTAINER_H_
#define TGIC_CONTAINER_H_

#include <cstdint>
#include <string>
#include <vector>

namespace tgic {
namespace codec {

// One compressed image. Serialized big-endian as
//   "TGIC" | u8 version | u16 height | u16 width | u8 c_y | u8 c_z |
//   u32 model_hash | u16 caption_len + utf-8 bytes |
//   u32 z_len + z payload | u32 y_len + y payload
struct Container {
  int height = 0;
  int width = 0;
  int c_y = 0;
  int c_z = 0;
  uint32_t model_hash = 0;
  std::string caption;  // raw UTF-8, may be empty
  std::vector<uint8_t> z_payload;
  std::vector<uint8_t> y_payload;
};

constexpr uint8_t kContainerVersion = 1;
constexpr size_t kContainerHeaderBytes = 15;

std::vector<uint8_t> pack_container(const Container& c);
Container unpack_container(const std::vector<uint8_t>& bytes);

// Binary file helpers shared by the container and checkpoint formats.
std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes);

}  // namespace codec
}  // namespace tgic

#endif  // TGIC_CONTAINER_H_
