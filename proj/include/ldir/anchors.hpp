#pragma once

// Anchor-text selection. Farthest point sampling spreads anchors across the
// embedding space by greedy max-min selection; uniform and k-means sampling
// are provided for comparison. Anchor sets persist as a compact binary store
// with a trailing JSON metadata block carrying full provenance.

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"
#include "ldir/kmeans.hpp"
#include "ldir/rng.hpp"
#include "ldir/store.hpp"
#include "ldir/vector.hpp"

namespace ldir {

enum class SampleMethod { fps, uniform, kmeans };

inline const char* to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::fps:
      return "fps";
    case SampleMethod::uniform:
      return "uniform";
    case SampleMethod::kmeans:
      return "kmeans";
  }
  return "unknown";
}

inline SampleMethod parse_sample_method(std::string_view s) {
  if (s == "fps") return SampleMethod::fps;
  if (s == "uniform") return SampleMethod::uniform;
  if (s == "kmeans") return SampleMethod::kmeans;
  throw ConfigError("unknown sampling method: " + std::string(s));
}

enum class LengthBucket { Short, Medium, Long, All };

inline const char* to_string(LengthBucket b) {
  switch (b) {
    case LengthBucket::Short:
      return "short";
    case LengthBucket::Medium:
      return "medium";
    case LengthBucket::Long:
      return "long";
    case LengthBucket::All:
      return "all";
  }
  return "unknown";
}

inline LengthBucket parse_length_bucket(std::string_view s) {
  if (s == "short") return LengthBucket::Short;
  if (s == "medium") return LengthBucket::Medium;
  if (s == "long") return LengthBucket::Long;
  if (s == "all") return LengthBucket::All;
  throw ConfigError("unknown length bucket: " + std::string(s));
}

// short: fewer than 20 whitespace tokens; medium: 20..100 inclusive;
// long: more than 100. `all` is the identity. Stable order.
inline Corpus filter_by_length(const Corpus& corpus, LengthBucket bucket) {
  if (bucket == LengthBucket::All) return corpus;
  Corpus out;
  for (const TextRecord& r : corpus) {
    const std::size_t tokens = count_tokens(r.text);
    const bool keep = (bucket == LengthBucket::Short && tokens < 20) ||
                      (bucket == LengthBucket::Medium && tokens >= 20 && tokens <= 100) ||
                      (bucket == LengthBucket::Long && tokens > 100);
    if (keep) out.push_back(r);
  }
  return out;
}

struct FpsStart {
  enum class Rule { centroid_farthest, seeded };

  Rule rule = Rule::centroid_farthest;
  std::uint64_t seed = 0;

  static FpsStart centroid_farthest() { return {}; }
  static FpsStart seeded(std::uint64_t seed) { return {Rule::seeded, seed}; }
};

namespace detail {

// Rows scaled to unit L2 norm; all-zero rows pass through unchanged.
inline Matrix normalized_rows(const Matrix& rows) {
  Matrix out(rows.rows(), rows.cols());
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    auto src = rows.row(i);
    auto dst = out.row(i);
    const double norm = l2_norm(src);
    if (norm == 0.0) {
      std::copy(src.begin(), src.end(), dst.begin());
    } else {
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] / norm;
    }
  }
  return out;
}

}  // namespace detail

// Greedy max-min selection: each step adds the row maximizing the minimum
// Euclidean distance to everything already selected, ties to the lower index.
// Distances are taken on L2-normalized rows unless `normalize` is false.
// Returns indices in selection order.
inline std::vector<std::size_t> farthest_point_sampling(
    const Matrix& rows, std::size_t n, FpsStart start = FpsStart::centroid_farthest(),
    bool normalize = true) {
  const std::size_t count = rows.rows();
  if (count == 0) throw EmptyInput("farthest_point_sampling: no rows");
  if (n < 1 || n > count) {
    throw InvalidN("farthest_point_sampling: n=" + std::to_string(n) + " with " +
                   std::to_string(count) + " rows");
  }
  const Matrix pts = normalize ? detail::normalized_rows(rows) : rows;

  std::size_t first = 0;
  if (start.rule == FpsStart::Rule::centroid_farthest) {
    std::vector<double> mean(pts.cols(), 0.0);
    for (std::size_t i = 0; i < count; ++i) {
      auto row = pts.row(i);
      for (std::size_t j = 0; j < row.size(); ++j) mean[j] += row[j];
    }
    for (double& m : mean) m /= static_cast<double>(count);
    double best = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
      const double d = detail::dist2(pts.row(i), mean);
      if (d > best) {
        best = d;
        first = i;
      }
    }
  } else {
    std::mt19937_64 gen(start.seed);
    first = static_cast<std::size_t>(uniform_below(gen, count));
  }

  std::vector<std::size_t> selected;
  selected.reserve(n);
  selected.push_back(first);
  std::vector<bool> taken(count, false);
  taken[first] = true;
  std::vector<double> min_d2(count);
  for (std::size_t i = 0; i < count; ++i) {
    min_d2[i] = detail::dist2(pts.row(i), pts.row(first));
  }
  while (selected.size() < n) {
    std::size_t next = count;
    double best = -1.0;
    for (std::size_t i = 0; i < count; ++i) {
      if (!taken[i] && min_d2[i] > best) {
        best = min_d2[i];
        next = i;
      }
    }
    taken[next] = true;
    selected.push_back(next);
    for (std::size_t i = 0; i < count; ++i) {
      if (!taken[i]) {
        min_d2[i] = std::min(min_d2[i], detail::dist2(pts.row(i), pts.row(next)));
      }
    }
  }
  return selected;
}

// n distinct indices without replacement from a seeded PRNG, in draw order.
inline std::vector<std::size_t> uniform_sample(std::size_t count, std::size_t n,
                                               std::uint64_t seed) {
  if (count == 0) throw EmptyInput("uniform_sample: count is zero");
  if (n < 1 || n > count) {
    throw InvalidN("uniform_sample: n=" + std::to_string(n) + " with " +
                   std::to_string(count) + " rows");
  }
  std::mt19937_64 gen(seed);
  return sample_without_replacement(count, n, gen);
}

// k-means with k=n on L2-normalized rows; each centroid claims its nearest
// row, duplicates falling through to the next-nearest unclaimed row.
inline std::vector<std::size_t> kmeans_sample(const Matrix& rows, std::size_t n,
                                              std::uint64_t seed) {
  const std::size_t count = rows.rows();
  if (count == 0) throw EmptyInput("kmeans_sample: no rows");
  if (n < 1 || n > count) {
    throw InvalidN("kmeans_sample: n=" + std::to_string(n) + " with " +
                   std::to_string(count) + " rows");
  }
  const Matrix pts = detail::normalized_rows(rows);
  const KmeansResult km = kmeans(pts, n, seed, /*restarts=*/2, /*max_iters=*/100);

  std::vector<std::size_t> picks;
  picks.reserve(n);
  std::vector<bool> claimed(count, false);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t best_idx = count;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      if (claimed[i]) continue;
      const double d = detail::dist2(pts.row(i), km.centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best_idx = i;
      }
    }
    claimed[best_idx] = true;
    picks.push_back(best_idx);
  }
  return picks;
}

struct AnchorSet {
  std::vector<TextRecord> records;
  Matrix vectors;  // provider outputs, row i belongs to records[i]
  SampleMethod method = SampleMethod::fps;
  LengthBucket bucket = LengthBucket::All;
  EncoderDescriptor encoder;
  std::uint64_t seed = 0;
  bool normalized_sampling = true;
  std::string fps_start;  // "centroid_farthest" or "seeded"; empty for non-fps
  std::string id;         // provenance hash; set by build/load/deserialize

  std::size_t n() const { return records.size(); }
  std::size_t dim() const { return vectors.cols(); }
};

inline nlohmann::json anchor_meta_json(const AnchorSet& set) {
  nlohmann::json meta;
  meta["method"] = to_string(set.method);
  meta["bucket"] = to_string(set.bucket);
  meta["seed"] = set.seed;
  meta["normalized"] = set.normalized_sampling;
  if (!set.fps_start.empty()) meta["fps_start"] = set.fps_start;
  nlohmann::json enc;
  enc["kind"] = EncoderDescriptor::kind_name(set.encoder.kind);
  enc["name"] = set.encoder.name;
  enc["dim"] = set.encoder.dim;
  enc["params"] = set.encoder.params;
  meta["encoder"] = std::move(enc);
  return meta;
}

inline std::string serialize_anchor_set(const AnchorSet& set) {
  VectorStore store;
  store.dim = set.dim();
  store.ids.reserve(set.n());
  store.texts.reserve(set.n());
  store.values.reserve(set.n() * set.dim());
  for (std::size_t i = 0; i < set.n(); ++i) {
    store.ids.push_back(set.records[i].id);
    store.texts.push_back(set.records[i].text);
    for (double v : set.vectors.row(i)) store.values.push_back(static_cast<float>(v));
  }
  store.meta = anchor_meta_json(set);
  return serialize_binary_store(store);
}

inline std::string anchor_set_hash(const std::string& bytes) {
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return std::string(hex);
}

inline AnchorSet anchor_set_from_store(const VectorStore& store, const std::string& source) {
  if (!store.meta.is_object() || !store.meta.contains("method") ||
      !store.meta.contains("encoder")) {
    throw ParseError(source + ": not an anchor-set file (missing metadata)");
  }
  if (store.count() == 0) throw ParseError(source + ": anchor set has no anchors");
  AnchorSet set;
  try {
    set.method = parse_sample_method(store.meta.at("method").get<std::string>());
    set.bucket = parse_length_bucket(store.meta.value("bucket", "all"));
    set.seed = store.meta.value("seed", std::uint64_t{0});
    set.normalized_sampling = store.meta.value("normalized", true);
    set.fps_start = store.meta.value("fps_start", std::string());
    const auto& enc = store.meta.at("encoder");
    set.encoder.kind = EncoderDescriptor::kind_from_name(enc.at("kind").get<std::string>());
    set.encoder.name = enc.at("name").get<std::string>();
    set.encoder.dim = enc.at("dim").get<std::size_t>();
    if (enc.contains("params")) {
      set.encoder.params =
          enc.at("params").get<std::map<std::string, std::string>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": anchor metadata: " + e.what());
  } catch (const ConfigError& e) {
    // Unknown enum strings in a stored file are corruption, not user input.
    throw ParseError(source + ": anchor metadata: " + e.what());
  }
  set.records.reserve(store.count());
  set.vectors = Matrix(store.count(), store.dim);
  for (std::size_t i = 0; i < store.count(); ++i) {
    set.records.push_back({store.ids[i], store.texts[i]});
    auto dst = set.vectors.row(i);
    const float* src = store.row(i);
    for (std::size_t j = 0; j < store.dim; ++j) dst[j] = static_cast<double>(src[j]);
  }
  return set;
}

inline void save_anchor_set(const AnchorSet& set, const std::string& path) {
  detail::write_file_bytes(path, serialize_anchor_set(set));
}

inline AnchorSet load_anchor_set(const std::string& path) {
  const std::string bytes = detail::read_file_bytes(path);
  const VectorStore store = looks_like_binary_store(bytes)
                                ? parse_binary_store(bytes, path)
                                : parse_jsonl_store(bytes, path);
  AnchorSet set = anchor_set_from_store(store, path);
  set.id = anchor_set_hash(serialize_anchor_set(set));
  return set;
}

// Filters the corpus to the requested length bucket, embeds it, runs the
// chosen sampler, and assembles the anchor set with full provenance.
inline AnchorSet build_anchor_set(const Corpus& corpus, const EmbeddingProvider& provider,
                                  SampleMethod method, std::size_t n, std::uint64_t seed,
                                  LengthBucket bucket = LengthBucket::All,
                                  bool normalize = true,
                                  FpsStart::Rule fps_rule = FpsStart::Rule::centroid_farthest) {
  validate_corpus(corpus);
  const Corpus filtered = filter_by_length(corpus, bucket);
  if (n < 1) throw InvalidN("build_anchor_set: n must be >= 1");
  if (filtered.size() < n) {
    throw CorpusTooSmall("bucket '" + std::string(to_string(bucket)) + "' has " +
                         std::to_string(filtered.size()) + " texts, need " +
                         std::to_string(n));
  }
  const EmbeddingBatch batch = provider.embed_batch(filtered);

  std::vector<std::size_t> picks;
  switch (method) {
    case SampleMethod::fps: {
      const FpsStart start = fps_rule == FpsStart::Rule::centroid_farthest
                                 ? FpsStart::centroid_farthest()
                                 : FpsStart::seeded(seed);
      picks = farthest_point_sampling(batch.vectors, n, start, normalize);
      break;
    }
    case SampleMethod::uniform:
      picks = uniform_sample(filtered.size(), n, seed);
      break;
    case SampleMethod::kmeans:
      picks = kmeans_sample(batch.vectors, n, seed);
      break;
  }

  AnchorSet set;
  set.records.reserve(n);
  set.vectors = Matrix(n, provider.descriptor().dim);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    set.records.push_back(filtered[picks[i]]);
    auto src = batch.vectors.row(picks[i]);
    std::copy(src.begin(), src.end(), set.vectors.row(i).begin());
  }
  set.method = method;
  set.bucket = bucket;
  set.encoder = provider.descriptor();
  set.seed = seed;
  set.normalized_sampling = normalize;
  if (method == SampleMethod::fps) {
    set.fps_start = fps_rule == FpsStart::Rule::centroid_farthest ? "centroid_farthest"
                                                                  : "seeded";
  }
  set.id = anchor_set_hash(serialize_anchor_set(set));
  return set;
}

}  // namespace ldir
