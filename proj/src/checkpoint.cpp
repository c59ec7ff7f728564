#include "tgic/checkpoint.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <unordered_set>

#include "json.hpp"
#include "tgic/common.h"
#include "tgic/container.h"

namespace tgic {
namespace ckpt {

namespace {

using nlohmann::json;

constexpr uint8_t kCheckpointVersion = 1;
constexpr const char* kAdamM = "adam.m:";
constexpr const char* kAdamV = "adam.v:";

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_f64_block(std::vector<uint8_t>& out, const Tensor& t) {
  for (size_t i = 0; i < t.size(); ++i) {
    const uint64_t u = std::bit_cast<uint64_t>(t.data()[i]);
    for (int shift = 56; shift >= 0; shift -= 8) out.push_back(static_cast<uint8_t>(u >> shift));
  }
}

void read_f64_block(const std::vector<uint8_t>& bytes, size_t at, Tensor& t) {
  for (size_t i = 0; i < t.size(); ++i) {
    uint64_t u = 0;
    for (int b = 0; b < 8; ++b) u = (u << 8) | bytes[at + i * 8 + static_cast<size_t>(b)];
    t.data()[i] = std::bit_cast<double>(u);
  }
}

std::string hex64(uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

uint64_t parse_hex64(const std::string& s) {
  TGIC_CHECK_FORMAT(!s.empty() && s.size() <= 16, "bad hash string in checkpoint");
  size_t used = 0;
  const uint64_t v = std::stoull(s, &used, 16);
  TGIC_CHECK_FORMAT(used == s.size(), "bad hash string in checkpoint");
  return v;
}

size_t shape_count(const std::vector<int>& shape) {
  size_t n = 1;
  for (int d : shape) {
    TGIC_CHECK_FORMAT(d >= 1, "checkpoint tensor has a non-positive dimension");
    n *= static_cast<size_t>(d);
  }
  return n;
}

struct ParsedFile {
  CheckpointMeta meta;
  size_t blob_offset = 0;  // first tensor byte
};

ParsedFile parse_file(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 9 || std::string(bytes.begin(), bytes.begin() + 4) != "TGCK")
    throw FormatError("not a tgic checkpoint (bad magic)");
  if (bytes[4] != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(bytes[4]));
  const size_t json_len = (static_cast<size_t>(bytes[5]) << 24) | (static_cast<size_t>(bytes[6]) << 16) |
                          (static_cast<size_t>(bytes[7]) << 8) | bytes[8];
  if (9 + json_len > bytes.size()) throw FormatError("checkpoint truncated in metadata");

  const json j = json::parse(bytes.begin() + 9, bytes.begin() + 9 + static_cast<long>(json_len),
                             nullptr, false);
  if (j.is_discarded()) throw FormatError("checkpoint metadata is not valid JSON");

  ParsedFile out;
  try {
    CheckpointMeta& m = out.meta;
    m.kind = j.at("kind").get<std::string>();
    if (m.kind != "codec" && m.kind != "train")
      throw FormatError("unknown checkpoint kind: " + m.kind);
    m.config = parse_train_config(j.at("config").get<std::string>());
    m.vocab_tokens = j.at("vocab").get<std::vector<std::string>>();
    m.vocab_hash = parse_hex64(j.at("vocab_hash").get<std::string>());
    m.model_hash = static_cast<uint32_t>(parse_hex64(j.at("model_hash").get<std::string>()));
    m.step = j.value("step", 0l);
    m.adam_t_gen = j.value("adam_t_gen", 0l);
    m.adam_t_disc = j.value("adam_t_disc", 0l);
    m.rng_state = j.value("rng_state", std::string());
    for (const auto& entry : j.at("tensors")) {
      m.manifest.emplace_back(entry.at("name").get<std::string>(),
                              entry.at("shape").get<std::vector<int>>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint metadata: ") + e.what());
  }

  size_t total = 0;
  for (const auto& [name, shape] : out.meta.manifest) total += shape_count(shape);
  out.blob_offset = 9 + json_len;
  if (out.blob_offset + total * 8 != bytes.size())
    throw FormatError("checkpoint tensor data length mismatch");
  return out;
}

}  // namespace

const std::vector<std::string>& codec_prefixes() {
  static const std::vector<std::string> prefixes = {"enc.", "dec.", "he.", "hd.", "pz.", "ft."};
  return prefixes;
}

uint32_t compute_model_hash(const nn::ParamSet& ps, const ArchConfig& arch, uint64_t vocab_hash) {
  std::string tag = "arch:" + std::to_string(arch.c1) + "," + std::to_string(arch.c2) + "," +
                    std::to_string(arch.c3) + "," + std::to_string(arch.c_y) + "," +
                    std::to_string(arch.c_z) + "," + std::to_string(arch.res_per_module) + "," +
                    std::to_string(arch.d_text) + "," + std::to_string(arch.embed_dim) + "," +
                    std::to_string(arch.max_words) + "," + std::to_string(arch.use_tgfr) + "," +
                    std::to_string(arch.use_tgir) + "," + std::to_string(arch.use_tgat) + "," +
                    std::to_string(arch.use_irc);
  uint64_t h = fnv1a64(tag.data(), tag.size());
  h = fnv1a64(&vocab_hash, sizeof(vocab_hash), h);
  for (const auto& prefix : codec_prefixes()) {
    const uint64_t ph = ps.value_hash(prefix);
    h = fnv1a64(&ph, sizeof(ph), h);
  }
  return static_cast<uint32_t>(h ^ (h >> 32));
}

void save_checkpoint(const std::string& path, nn::ParamSet& ps, const CheckpointMeta& meta) {
  TGIC_CHECK_INPUT(meta.kind == "codec" || meta.kind == "train",
                   "checkpoint kind must be codec or train");
  std::vector<const nn::Param*> selected;
  if (meta.kind == "codec") {
    for (const auto& prefix : codec_prefixes())
      for (const nn::Param* p : ps.with_prefix(prefix)) selected.push_back(p);
  } else {
    for (const nn::Param* p : ps.all()) selected.push_back(p);
  }
  TGIC_CHECK_INPUT(!selected.empty(), "checkpoint has no tensors to save");

  const uint64_t vocab_hash = semantic::vocabulary_from_tokens(meta.vocab_tokens).hash();
  const uint32_t model_hash = compute_model_hash(ps, meta.config.arch, vocab_hash);

  json tensors = json::array();
  std::vector<uint8_t> blob;
  auto append = [&](const std::string& name, const Tensor& t) {
    tensors.push_back({{"name", name}, {"shape", t.shape()}});
    put_f64_block(blob, t);
  };
  for (const nn::Param* p : selected) append(p->name, p->value);
  if (meta.kind == "train") {
    for (const nn::Param* p : selected) {
      if (!p->trainable) continue;
      // moments may be unsized before the first optimizer step
      Tensor m = p->m.size() == p->value.size() ? p->m : Tensor(p->value.shape());
      Tensor v = p->v.size() == p->value.size() ? p->v : Tensor(p->value.shape());
      append(kAdamM + p->name, m);
      append(kAdamV + p->name, v);
    }
  }

  json j;
  j["kind"] = meta.kind;
  j["config"] = serialize_train_config(meta.config);
  j["vocab"] = meta.vocab_tokens;
  j["vocab_hash"] = hex64(vocab_hash);
  j["model_hash"] = hex64(model_hash);
  j["step"] = meta.step;
  j["adam_t_gen"] = meta.adam_t_gen;
  j["adam_t_disc"] = meta.adam_t_disc;
  j["rng_state"] = meta.rng_state;
  j["tensors"] = tensors;
  const std::string text = j.dump();

  std::vector<uint8_t> bytes;
  bytes.reserve(9 + text.size() + blob.size());
  for (char m : {'T', 'G', 'C', 'K'}) bytes.push_back(static_cast<uint8_t>(m));
  bytes.push_back(kCheckpointVersion);
  put_u32(bytes, static_cast<uint32_t>(text.size()));
  bytes.insert(bytes.end(), text.begin(), text.end());
  bytes.insert(bytes.end(), blob.begin(), blob.end());
  codec::write_file_bytes(path, bytes);
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  return parse_file(codec::read_file_bytes(path)).meta;
}

void load_checkpoint_params(const std::string& path, nn::ParamSet& ps, bool restore_adam) {
  const std::vector<uint8_t> bytes = codec::read_file_bytes(path);
  const ParsedFile file = parse_file(bytes);

  std::unordered_set<std::string> filled;
  std::unordered_set<std::string> adam_filled;
  size_t at = file.blob_offset;
  for (const auto& [name, shape] : file.meta.manifest) {
    const size_t count = shape_count(shape);
    const bool is_m = name.rfind(kAdamM, 0) == 0;
    const bool is_v = name.rfind(kAdamV, 0) == 0;
    if (is_m || is_v) {
      if (restore_adam) {
        const std::string base = name.substr(7);
        if (nn::Param* p = ps.find(base)) {
          if (p->value.shape() != shape)
            throw FormatError("checkpoint moment shape mismatch for " + base);
          Tensor& dst = is_m ? p->m : p->v;
          if (dst.size() != count) dst = Tensor(shape);
          read_f64_block(bytes, at, dst);
          adam_filled.insert(name);
        }
      }
    } else if (nn::Param* p = ps.find(name)) {
      if (p->value.shape() != shape)
        throw FormatError("checkpoint tensor shape mismatch for " + name + ": expected " +
                          std::to_string(p->value.size()) + " values");
      read_f64_block(bytes, at, p->value);
      filled.insert(name);
    }
    at += count * 8;
  }

  for (const nn::Param* p : ps.all()) {
    if (!filled.count(p->name))
      throw FormatError("checkpoint is missing tensor " + p->name +
                        " (kind \"" + file.meta.kind + "\")");
    if (restore_adam && p->trainable &&
        (!adam_filled.count(kAdamM + p->name) || !adam_filled.count(kAdamV + p->name)))
      throw FormatError("checkpoint is missing optimizer state for " + p->name);
  }
}

}  // namespace ckpt
}  // namespace tgic
