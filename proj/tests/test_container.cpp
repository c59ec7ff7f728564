#include <cstdint>
#include <string>
#include <vector>

#include "doctest.h"
#include "tgic/common.h"
#include "tgic/container.h"

using namespace tgic;
using codec::Container;

namespace {

Container sample() {
  Container c;
  c.height = 258;  // 0x0102
  c.width = 772;   // 0x0304
  c.c_y = 96;
  c.c_z = 64;
  c.model_hash = 0xDEADBEEFu;
  c.caption = "a red car";
  c.z_payload = {0x10, 0x20, 0x30};
  c.y_payload = {0xAA, 0xBB};
  return c;
}

}  // namespace

TEST_CASE("container bytes follow the big-endian layout exactly") {
  const std::vector<uint8_t> bytes = codec::pack_container(sample());
  const std::vector<uint8_t> expected = {
      'T', 'G', 'I', 'C',      // magic
      1,                       // version
      0x01, 0x02,              // height 258
      0x03, 0x04,              // width 772
      96,   64,                // c_y, c_z
      0xDE, 0xAD, 0xBE, 0xEF,  // model hash
      0x00, 0x09,              // caption length 9
      'a', ' ', 'r', 'e', 'd', ' ', 'c', 'a', 'r',
      0x00, 0x00, 0x00, 0x03,  // z length
      0x10, 0x20, 0x30,
      0x00, 0x00, 0x00, 0x02,  // y length
      0xAA, 0xBB,
  };
  CHECK(bytes == expected);
  CHECK(codec::kContainerHeaderBytes == 15);
}

TEST_CASE("container round-trips every field") {
  Container c = sample();
  SUBCASE("plain") {}
  SUBCASE("empty caption and payloads") {
    c.caption.clear();
    c.z_payload.clear();
    c.y_payload.clear();
  }
  SUBCASE("extreme dimensions") {
    c.height = 65535;
    c.width = 1;
    c.c_y = 255;
    c.c_z = 1;
  }
  SUBCASE("utf-8 caption") { c.caption = "ein gr\xC3\xBCnes Auto"; }
  SUBCASE("large payloads") {
    c.z_payload.assign(20000, 0x5C);
    c.y_payload.assign(123457, 0xA3);
  }
  const std::vector<uint8_t> bytes = codec::pack_container(c);
  const Container d = codec::unpack_container(bytes);
  CHECK(d.height == c.height);
  CHECK(d.width == c.width);
  CHECK(d.c_y == c.c_y);
  CHECK(d.c_z == c.c_z);
  CHECK(d.model_hash == c.model_hash);
  CHECK(d.caption == c.caption);
  CHECK(d.z_payload == c.z_payload);
  CHECK(d.y_payload == c.y_payload);
}

TEST_CASE("an empty caption contributes exactly its two length bytes") {
  Container c = sample();
  c.caption.clear();
  const std::vector<uint8_t> bytes = codec::pack_container(c);
  CHECK(bytes.size() == codec::kContainerHeaderBytes + 2 + 4 + c.z_payload.size() + 4 + c.y_payload.size());
  // length field is zero and the z length prefix follows immediately
  CHECK(bytes[15] == 0);
  CHECK(bytes[16] == 0);
  CHECK(bytes[20] == 0x03);
}

TEST_CASE("unpack rejects bad magic and version") {
  std::vector<uint8_t> bytes = codec::pack_container(sample());
  SUBCASE("magic") { bytes[0] = 'X'; }
  SUBCASE("version") { bytes[4] = 9; }
  CHECK_THROWS_AS(codec::unpack_container(bytes), FormatError);
}

TEST_CASE("every possible truncation is detected") {
  const std::vector<uint8_t> bytes = codec::pack_container(sample());
  for (size_t len = 0; len < bytes.size(); ++len) {
    const std::vector<uint8_t> cut(bytes.begin(), bytes.begin() + static_cast<long>(len));
    CHECK_THROWS_AS(codec::unpack_container(cut), FormatError);
  }
}

TEST_CASE("trailing bytes are rejected") {
  std::vector<uint8_t> bytes = codec::pack_container(sample());
  bytes.push_back(0);
  CHECK_THROWS_AS(codec::unpack_container(bytes), FormatError);
}

TEST_CASE("zeroed header dimensions are rejected") {
  Container c = sample();
  std::vector<uint8_t> bytes = codec::pack_container(c);
  SUBCASE("height") { bytes[5] = bytes[6] = 0; }
  SUBCASE("c_y") { bytes[9] = 0; }
  CHECK_THROWS_AS(codec::unpack_container(bytes), FormatError);
}

TEST_CASE("pack validates its inputs") {
  Container c = sample();
  SUBCASE("height") { c.height = 0; }
  SUBCASE("width") { c.width = 70000; }
  SUBCASE("c_y") { c.c_y = 300; }
  SUBCASE("caption") { c.caption.assign(70000, 'x'); }
  CHECK_THROWS_AS(codec::pack_container(c), InputError);
}

TEST_CASE("file helpers round-trip binary data") {
  const std::vector<uint8_t> bytes = codec::pack_container(sample());
  const std::string path = "test_container_io.tgic";
  codec::write_file_bytes(path, bytes);
  CHECK(codec::read_file_bytes(path) == bytes);
  CHECK_THROWS_AS(codec::read_file_bytes("does_not_exist.tgic"), InputError);
  std::remove(path.c_str());
}
