#pragma once

// Pluggable embedding providers. An encoder is a black-box text -> vector
// function attached through one of three provider kinds: a precomputed vector
// store, an HTTP embedding service, or the deterministic hashed encoder used
// for hermetic tests.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ldir/errors.hpp"
#include "ldir/rng.hpp"
#include "ldir/vector.hpp"

namespace ldir {

struct TextRecord {
  std::string id;    // non-empty, no tab or newline, unique within a corpus
  std::string text;  // UTF-8

  friend bool operator==(const TextRecord& a, const TextRecord& b) {
    return a.id == b.id && a.text == b.text;
  }
};

using Corpus = std::vector<TextRecord>;

inline void validate_corpus(const Corpus& corpus) {
  std::unordered_set<std::string_view> seen;
  for (const TextRecord& r : corpus) {
    if (r.id.empty()) throw ConfigError("corpus record with empty id");
    if (r.id.find('\t') != std::string::npos || r.id.find('\n') != std::string::npos) {
      throw ConfigError("corpus id contains tab or newline: " + r.id);
    }
    if (!seen.insert(r.id).second) throw DuplicateId("corpus id: " + r.id);
  }
}

struct EncoderDescriptor {
  enum class Kind { precomputed, http, hashed };

  Kind kind = Kind::hashed;
  std::string name;
  std::size_t dim = 0;
  std::map<std::string, std::string> params;

  // Identity of the embedding function. Transport knobs (batch size,
  // concurrency, timeouts) are excluded; anything that changes the vectors a
  // provider emits is included.
  std::string fingerprint() const {
    std::string fp = kind_name(kind);
    fp += '/';
    fp += name;
    fp += "/d";
    fp += std::to_string(dim);
    for (const char* key : {"seed", "endpoint", "content_fnv"}) {
      auto it = params.find(key);
      if (it != params.end()) {
        fp += '/';
        fp += key;
        fp += '=';
        fp += it->second;
      }
    }
    return fp;
  }

  static const char* kind_name(Kind k) {
    switch (k) {
      case Kind::precomputed:
        return "precomputed";
      case Kind::http:
        return "http";
      case Kind::hashed:
        return "hashed";
    }
    return "unknown";
  }

  static Kind kind_from_name(std::string_view s) {
    if (s == "precomputed") return Kind::precomputed;
    if (s == "http") return Kind::http;
    if (s == "hashed") return Kind::hashed;
    throw ConfigError("unknown provider kind: " + std::string(s));
  }
};

struct EmbeddingBatch {
  std::vector<std::string> ids;  // row order matches ids order
  Matrix vectors;
};

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual const EncoderDescriptor& descriptor() const = 0;

  // One vector per input, in input order, each of width descriptor().dim.
  // Providers are read-only after construction; concurrent calls are safe.
  virtual EmbeddingBatch embed_batch(const std::vector<TextRecord>& texts) const = 0;

 protected:
  static void require_non_empty(const std::vector<TextRecord>& texts) {
    if (texts.empty()) throw EmptyInput("embed_batch: no texts");
  }
};

// Deterministic signed feature-hashing encoder: lowercase whitespace tokens,
// seeded 64-bit hash per token, bucket = hash % dim, sign from the hash's
// high bit, accumulated and L2-normalized. Texts with no tokens map to the
// unit basis vector e_0.
inline Vector hashed_encode(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 8) throw ConfigError("hashed_encode requires dim >= 8");
  std::vector<double> acc(dim, 0.0);
  bool any = false;
  for (const std::string& token : lower_tokens(text)) {
    any = true;
    const std::uint64_t h = splitmix64(fnv1a64(token) ^ seed);
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  }
  if (!any) {
    acc[0] = 1.0;
    return Vector(std::move(acc));
  }
  double norm = 0.0;
  for (double v : acc) norm += v * v;
  if (norm == 0.0) {
    // Signs cancelled in every bucket; fall back to the empty-text vector.
    std::fill(acc.begin(), acc.end(), 0.0);
    acc[0] = 1.0;
    return Vector(std::move(acc));
  }
  norm = std::sqrt(norm);
  for (double& v : acc) v /= norm;
  return Vector(std::move(acc));
}

class HashedEncoder final : public EmbeddingProvider {
 public:
  HashedEncoder(std::size_t dim, std::uint64_t seed, std::string name = "hashed") {
    if (dim < 8) throw ConfigError("hashed encoder requires dim >= 8");
    desc_.kind = EncoderDescriptor::Kind::hashed;
    desc_.name = std::move(name);
    desc_.dim = dim;
    desc_.params["seed"] = std::to_string(seed);
    seed_ = seed;
  }

  const EncoderDescriptor& descriptor() const override { return desc_; }

  EmbeddingBatch embed_batch(const std::vector<TextRecord>& texts) const override {
    require_non_empty(texts);
    EmbeddingBatch batch;
    batch.ids.reserve(texts.size());
    batch.vectors = Matrix(texts.size(), desc_.dim);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      batch.ids.push_back(texts[i].id);
      const Vector v = hashed_encode(texts[i].text, desc_.dim, seed_);
      std::copy(v.span().begin(), v.span().end(), batch.vectors.row(i).begin());
    }
    return batch;
  }

 private:
  EncoderDescriptor desc_;
  std::uint64_t seed_ = 0;
};

}  // namespace ldir
