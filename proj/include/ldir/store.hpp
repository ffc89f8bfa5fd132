#pragma once

// Vector-store persistence.
//
// JSON-lines interchange: one object per line {"id": "...", "text": "...",
// "vector": [f, ...]}; the first record fixes the dimension. An optional last
// line {"_anchor_meta": {...}} carries anchor-set metadata through round trips.
//
// Compact binary layout: magic "LDIR", u8 version=1, u32 LE dim, u64 LE record
// count, then per record u32 LE id byte-length, id bytes, dim f32 LE values.
// Anchor-set files append a u32 LE length-prefixed JSON metadata block.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"
#include "ldir/vector.hpp"

namespace ldir {

inline constexpr char kStoreMagic[4] = {'L', 'D', 'I', 'R'};
inline constexpr std::uint8_t kStoreVersion = 1;

struct VectorStore {
  std::vector<std::string> ids;
  std::vector<std::string> texts;  // empty strings when the source had none
  std::size_t dim = 0;
  std::vector<float> values;  // row-major, ids.size() x dim
  nlohmann::json meta;        // null unless the file carried a metadata block

  std::size_t count() const { return ids.size(); }
  const float* row(std::size_t i) const { return values.data() + i * dim; }
};

namespace detail {

inline void put_u32le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

inline void put_u64le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32le(std::string& out, float v) {
  put_u32le(out, std::bit_cast<std::uint32_t>(v));
}

class ByteReader {
 public:
  ByteReader(const std::string& bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }

  std::uint32_t u32le() {
    const char* p = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
    return v;
  }

  std::uint64_t u64le() {
    const char* p = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<std::uint8_t>(p[i]);
    return v;
  }

  float f32le() { return std::bit_cast<float>(u32le()); }

  std::string bytes(std::size_t n) { return std::string(take(n), n); }

  std::size_t offset() const { return offset_; }
  bool at_end() const { return offset_ == bytes_.size(); }

  void expect_end() {
    if (!at_end()) {
      throw ParseError(source_ + ": trailing bytes at offset " +
                       std::to_string(offset_));
    }
  }

 private:
  const char* take(std::size_t n) {
    if (offset_ + n > bytes_.size()) {
      throw ParseError(source_ + ": truncated at offset " + std::to_string(offset_));
    }
    const char* p = bytes_.data() + offset_;
    offset_ += n;
    return p;
  }

  const std::string& bytes_;
  std::string source_;
  std::size_t offset_ = 0;
};

inline std::string read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for read: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

inline void write_file_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for write: " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace detail

// ---- binary format

inline std::string serialize_binary_store(const VectorStore& store) {
  std::string out;
  out.append(kStoreMagic, 4);
  out.push_back(static_cast<char>(kStoreVersion));
  detail::put_u32le(out, static_cast<std::uint32_t>(store.dim));
  detail::put_u64le(out, static_cast<std::uint64_t>(store.count()));
  for (std::size_t i = 0; i < store.count(); ++i) {
    detail::put_u32le(out, static_cast<std::uint32_t>(store.ids[i].size()));
    out.append(store.ids[i]);
    for (std::size_t j = 0; j < store.dim; ++j) {
      detail::put_f32le(out, store.row(i)[j]);
    }
  }
  // The binary layout has no text column; non-empty texts ride in the
  // metadata block and are lifted back out by the parser.
  nlohmann::json meta = store.meta;
  const bool has_texts =
      std::any_of(store.texts.begin(), store.texts.end(),
                  [](const std::string& t) { return !t.empty(); });
  if (has_texts) {
    if (meta.is_null()) meta = nlohmann::json::object();
    meta["texts"] = store.texts;
  }
  if (!meta.is_null()) {
    const std::string bytes = meta.dump();
    detail::put_u32le(out, static_cast<std::uint32_t>(bytes.size()));
    out.append(bytes);
  }
  return out;
}

inline VectorStore parse_binary_store(const std::string& bytes, const std::string& source) {
  detail::ByteReader r(bytes, source);
  if (r.bytes(4) != std::string(kStoreMagic, 4)) {
    throw ParseError(source + ": bad magic");
  }
  const std::uint8_t version = r.u8();
  if (version != kStoreVersion) {
    throw VersionMismatch(source + ": version " + std::to_string(version));
  }
  VectorStore store;
  store.dim = r.u32le();
  const std::uint64_t count = r.u64le();
  // A lying header must fail as truncation, not as an allocation error:
  // every record takes at least 4 + 4*dim bytes, so cap the reserves by what
  // the file could actually hold.
  const std::uint64_t plausible = bytes.size() / (4 + 4 * store.dim);
  store.ids.reserve(std::min(count, plausible));
  store.values.reserve(std::min(count, plausible) * store.dim);
  std::unordered_map<std::string, std::size_t> seen;
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t id_len = r.u32le();
    std::string id = r.bytes(id_len);
    if (!seen.emplace(id, i).second) throw DuplicateId(source + ": " + id);
    store.ids.push_back(std::move(id));
    for (std::size_t j = 0; j < store.dim; ++j) store.values.push_back(r.f32le());
  }
  store.texts.assign(store.count(), std::string());
  if (!r.at_end()) {
    const std::uint32_t meta_len = r.u32le();
    const std::string meta_bytes = r.bytes(meta_len);
    r.expect_end();
    try {
      store.meta = nlohmann::json::parse(meta_bytes);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ": metadata block: " + e.what());
    }
    if (store.meta.is_object() && store.meta.contains("texts")) {
      const auto& texts = store.meta.at("texts");
      if (!texts.is_array() || texts.size() != store.count()) {
        throw ParseError(source + ": metadata texts do not match record count");
      }
      for (std::size_t i = 0; i < store.count(); ++i) {
        store.texts[i] = texts.at(i).get<std::string>();
      }
      store.meta.erase("texts");
      if (store.meta.empty()) store.meta = nlohmann::json();
    }
  }
  return store;
}

inline VectorStore read_binary_store(const std::string& path) {
  return parse_binary_store(detail::read_file_bytes(path), path);
}

inline void write_binary_store(const std::string& path, const VectorStore& store) {
  detail::write_file_bytes(path, serialize_binary_store(store));
}

// ---- JSON-lines format

inline VectorStore parse_jsonl_store(const std::string& bytes, const std::string& source) {
  VectorStore store;
  std::unordered_map<std::string, std::size_t> seen;
  std::istringstream in(bytes);
  std::string line;
  std::size_t lineno = 0;
  bool saw_meta = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": blank line");
    }
    if (saw_meta) {
      throw ParseError(source + ":" + std::to_string(lineno) +
                       ": records after _anchor_meta trailer");
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (obj.contains("_anchor_meta")) {
      store.meta = obj.at("_anchor_meta");
      saw_meta = true;
      continue;
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("vector")) {
      throw ParseError(source + ":" + std::to_string(lineno) +
                       ": expected object with id and vector");
    }
    std::string id = obj.at("id").get<std::string>();
    const auto& vec = obj.at("vector");
    if (!vec.is_array()) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": vector must be an array");
    }
    if (store.count() == 0) {
      store.dim = vec.size();  // first record fixes dim
      if (store.dim == 0) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": empty vector");
      }
    } else if (vec.size() != store.dim) {
      throw ParseError(source + ":" + std::to_string(lineno) + ": record '" + id +
                       "' has width " + std::to_string(vec.size()) + ", expected " +
                       std::to_string(store.dim));
    }
    if (!seen.emplace(id, store.count()).second) {
      throw DuplicateId(source + ":" + std::to_string(lineno) + ": " + id);
    }
    store.ids.push_back(std::move(id));
    store.texts.push_back(obj.value("text", std::string()));
    for (const auto& v : vec) {
      if (!v.is_number()) {
        throw ParseError(source + ":" + std::to_string(lineno) + ": non-numeric value");
      }
      store.values.push_back(static_cast<float>(v.get<double>()));
    }
  }
  return store;
}

inline VectorStore read_jsonl_store(const std::string& path) {
  return parse_jsonl_store(detail::read_file_bytes(path), path);
}

inline std::string serialize_jsonl_store(const VectorStore& store) {
  std::string out;
  for (std::size_t i = 0; i < store.count(); ++i) {
    nlohmann::json obj;
    obj["id"] = store.ids[i];
    obj["text"] = store.texts[i];
    nlohmann::json vec = nlohmann::json::array();
    for (std::size_t j = 0; j < store.dim; ++j) {
      vec.push_back(static_cast<double>(store.row(i)[j]));
    }
    obj["vector"] = std::move(vec);
    out += obj.dump();
    out += '\n';
  }
  if (!store.meta.is_null()) {
    nlohmann::json trailer;
    trailer["_anchor_meta"] = store.meta;
    out += trailer.dump();
    out += '\n';
  }
  return out;
}

inline void write_jsonl_store(const std::string& path, const VectorStore& store) {
  detail::write_file_bytes(path, serialize_jsonl_store(store));
}

inline bool looks_like_binary_store(const std::string& bytes) {
  return bytes.size() >= 4 && std::memcmp(bytes.data(), kStoreMagic, 4) == 0;
}

// Reads either format, sniffing the binary magic.
inline VectorStore read_vector_store(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  return looks_like_binary_store(bytes) ? parse_binary_store(bytes, path)
                                        : parse_jsonl_store(bytes, path);
}

// ---- corpus ingestion

// Accepts JSON-lines objects carrying "id" and "text" (extra keys ignored) or
// a binary store whose metadata block carries texts (an anchor-set file).
inline Corpus load_corpus(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  Corpus corpus;
  if (looks_like_binary_store(bytes)) {
    const VectorStore store = parse_binary_store(bytes, path);
    for (std::size_t i = 0; i < store.count(); ++i) {
      corpus.push_back({store.ids[i], store.texts[i]});
    }
  } else {
    std::istringstream in(bytes);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": blank line");
      }
      nlohmann::json obj;
      try {
        obj = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
      if (obj.contains("_anchor_meta")) continue;
      if (!obj.is_object() || !obj.contains("id") || !obj.contains("text")) {
        throw ParseError(path + ":" + std::to_string(lineno) +
                         ": expected object with id and text");
      }
      corpus.push_back({obj.at("id").get<std::string>(), obj.at("text").get<std::string>()});
    }
  }
  validate_corpus(corpus);
  return corpus;
}

// ---- embedding dumps (id + scores). Values are quantized to f32 so the two
// dump formats carry identical information.

inline void write_embedding_dump_jsonl(const std::string& path,
                                       const std::vector<std::string>& ids,
                                       const Matrix& scores) {
  std::string out;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    nlohmann::json obj;
    obj["id"] = ids[i];
    nlohmann::json vec = nlohmann::json::array();
    for (double v : scores.row(i)) {
      vec.push_back(static_cast<double>(static_cast<float>(v)));
    }
    obj["scores"] = std::move(vec);
    out += obj.dump();
    out += '\n';
  }
  detail::write_file_bytes(path, out);
}

inline void write_embedding_dump_binary(const std::string& path,
                                        const std::vector<std::string>& ids,
                                        const Matrix& scores) {
  VectorStore store;
  store.ids = ids;
  store.texts.assign(ids.size(), std::string());
  store.dim = scores.cols();
  store.values.reserve(scores.rows() * scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (double v : scores.row(i)) store.values.push_back(static_cast<float>(v));
  }
  write_binary_store(path, store);
}

// ---- precomputed provider

// Embeds by looking records up in a loaded store: first by record id, then by
// exact text when the store carries texts. The store contents define the
// encoder, so the descriptor fingerprint hashes them.
class PrecomputedStore final : public EmbeddingProvider {
 public:
  explicit PrecomputedStore(const std::string& path, std::string name = "") {
    store_ = read_vector_store(path);
    for (std::size_t i = 0; i < store_.count(); ++i) {
      for (std::size_t j = 0; j < store_.dim; ++j) {
        if (!std::isfinite(store_.row(i)[j])) {
          throw ParseError(path + ": record '" + store_.ids[i] + "' has a non-finite value");
        }
      }
    }
    desc_.kind = EncoderDescriptor::Kind::precomputed;
    desc_.name = name.empty() ? "precomputed" : std::move(name);
    desc_.dim = store_.dim;
    desc_.params["content_fnv"] = content_fingerprint(store_);
    for (std::size_t i = 0; i < store_.count(); ++i) {
      by_id_.emplace(store_.ids[i], i);
      if (!store_.texts[i].empty()) by_text_.emplace(store_.texts[i], i);
    }
  }

  std::size_t size() const { return store_.count(); }

  const EncoderDescriptor& descriptor() const override { return desc_; }

  EmbeddingBatch embed_batch(const std::vector<TextRecord>& texts) const override {
    require_non_empty(texts);
    EmbeddingBatch batch;
    batch.ids.reserve(texts.size());
    batch.vectors = Matrix(texts.size(), store_.dim);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      std::optional<std::size_t> idx;
      if (auto it = by_id_.find(texts[i].id); it != by_id_.end()) {
        idx = it->second;
      } else if (!texts[i].text.empty()) {
        if (auto jt = by_text_.find(texts[i].text); jt != by_text_.end()) idx = jt->second;
      }
      if (!idx) {
        throw MissingText("store has no record for id '" + texts[i].id + "'");
      }
      const float* src = store_.row(*idx);
      auto dst = batch.vectors.row(i);
      for (std::size_t j = 0; j < store_.dim; ++j) dst[j] = static_cast<double>(src[j]);
      batch.ids.push_back(texts[i].id);
    }
    return batch;
  }

 private:
  static std::string content_fingerprint(const VectorStore& store) {
    std::string buf;
    for (std::size_t i = 0; i < store.count(); ++i) {
      buf += store.ids[i];
      buf.push_back('\x1f');
      for (std::size_t j = 0; j < store.dim; ++j) detail::put_f32le(buf, store.row(i)[j]);
      buf.push_back('\x1e');
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(buf)));
    return std::string(hex);
  }

  VectorStore store_;
  EncoderDescriptor desc_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_text_;
};

inline std::unique_ptr<PrecomputedStore> load_precomputed_store(const std::string& path) {
  return std::make_unique<PrecomputedStore>(path);
}

}  // namespace ldir
