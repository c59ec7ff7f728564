#include "tgic/container.h"

#include <cstring>
#include <fstream>

#include "tgic/common.h"

namespace tgic {
namespace codec {

namespace {

void put_u16(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

struct Reader {
  const std::vector<uint8_t>* bytes;
  size_t pos = 0;
  uint8_t u8() {
    if (pos + 1 > bytes->size()) throw FormatError("container truncated");
    return (*bytes)[pos++];
  }
  uint32_t u16() {
    uint32_t hi = u8();
    return (hi << 8) | u8();
  }
  uint32_t u32() {
    uint32_t hi = u16();
    return (hi << 16) | u16();
  }
  void raw(void* dst, size_t n) {
    if (pos + n > bytes->size()) throw FormatError("container truncated");
    std::memcpy(dst, bytes->data() + pos, n);
    pos += n;
  }
};

}  // namespace

std::vector<uint8_t> pack_container(const Container& c) {
  TGIC_CHECK_INPUT(c.height >= 1 && c.height <= 65535, "container height out of range");
  TGIC_CHECK_INPUT(c.width >= 1 && c.width <= 65535, "container width out of range");
  TGIC_CHECK_INPUT(c.c_y >= 1 && c.c_y <= 255, "container c_y out of range");
  TGIC_CHECK_INPUT(c.c_z >= 1 && c.c_z <= 255, "container c_z out of range");
  TGIC_CHECK_INPUT(c.caption.size() <= 65535, "caption does not fit a 16-bit length");
  TGIC_CHECK_INPUT(c.z_payload.size() <= 0xFFFFFFFFull, "z payload too large");
  TGIC_CHECK_INPUT(c.y_payload.size() <= 0xFFFFFFFFull, "y payload too large");

  std::vector<uint8_t> out;
  out.reserve(kContainerHeaderBytes + 2 + c.caption.size() + 8 + c.z_payload.size() +
              c.y_payload.size());
  for (char m : {'T', 'G', 'I', 'C'}) out.push_back(static_cast<uint8_t>(m));
  out.push_back(kContainerVersion);
  put_u16(out, static_cast<uint32_t>(c.height));
  put_u16(out, static_cast<uint32_t>(c.width));
  out.push_back(static_cast<uint8_t>(c.c_y));
  out.push_back(static_cast<uint8_t>(c.c_z));
  put_u32(out, c.model_hash);
  put_u16(out, static_cast<uint32_t>(c.caption.size()));
  out.insert(out.end(), c.caption.begin(), c.caption.end());
  put_u32(out, static_cast<uint32_t>(c.z_payload.size()));
  out.insert(out.end(), c.z_payload.begin(), c.z_payload.end());
  put_u32(out, static_cast<uint32_t>(c.y_payload.size()));
  out.insert(out.end(), c.y_payload.begin(), c.y_payload.end());
  return out;
}

Container unpack_container(const std::vector<uint8_t>& bytes) {
  Reader r{&bytes};
  char magic[4];
  r.raw(magic, 4);
  if (std::string(magic, 4) != "TGIC") throw FormatError("not a tgic container (bad magic)");
  const uint8_t version = r.u8();
  if (version != kContainerVersion)
    throw FormatError("unsupported container version " + std::to_string(version));

  Container c;
  c.height = static_cast<int>(r.u16());
  c.width = static_cast<int>(r.u16());
  c.c_y = static_cast<int>(r.u8());
  c.c_z = static_cast<int>(r.u8());
  if (c.height < 1 || c.width < 1 || c.c_y < 1 || c.c_z < 1)
    throw FormatError("container header has zero dimensions");
  c.model_hash = r.u32();

  const size_t cap_len = r.u16();
  c.caption.resize(cap_len);
  if (cap_len > 0) r.raw(c.caption.data(), cap_len);

  const size_t z_len = r.u32();
  c.z_payload.resize(z_len);
  if (z_len > 0) r.raw(c.z_payload.data(), z_len);

  const size_t y_len = r.u32();
  c.y_payload.resize(y_len);
  if (y_len > 0) r.raw(c.y_payload.data(), y_len);

  if (r.pos != bytes.size()) throw FormatError("container has trailing bytes");
  return c;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw InputError("read failure: " + path);
  return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open file for writing: " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  if (!out) throw InputError("write failure: " + path);
}

}  // namespace codec
}  // namespace tgic
