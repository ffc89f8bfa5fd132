#pragma once

// Relative embeddings: dimension j of the output is the relatedness of the
// input text to anchor text j. Cosine over encoder vectors is the default
// relatedness; raw dense distances, set dissimilarities over top-k binarized
// encoder vectors, and surface distances over the texts are also offered.
// Concatenating segments produced under several encoders yields the
// fine-grained variant.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ldir/anchors.hpp"
#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"
#include "ldir/vector.hpp"

namespace ldir {

enum class RelKind {
  cosine,
  euclidean,
  manhattan,
  chebyshev,
  hamming,
  jaccard,
  dice,
  sokalsneath,
  edit,
  token_jaccard,
};

inline const char* to_string(RelKind kind) {
  switch (kind) {
    case RelKind::cosine:
      return "cosine";
    case RelKind::euclidean:
      return "euclidean";
    case RelKind::manhattan:
      return "manhattan";
    case RelKind::chebyshev:
      return "chebyshev";
    case RelKind::hamming:
      return "hamming";
    case RelKind::jaccard:
      return "jaccard";
    case RelKind::dice:
      return "dice";
    case RelKind::sokalsneath:
      return "sokalsneath";
    case RelKind::edit:
      return "edit";
    case RelKind::token_jaccard:
      return "token_jaccard";
  }
  return "unknown";
}

inline RelKind parse_rel_kind(std::string_view s) {
  for (RelKind kind :
       {RelKind::cosine, RelKind::euclidean, RelKind::manhattan, RelKind::chebyshev,
        RelKind::hamming, RelKind::jaccard, RelKind::dice, RelKind::sokalsneath,
        RelKind::edit, RelKind::token_jaccard}) {
    if (s == to_string(kind)) return kind;
  }
  throw ConfigError("unknown relatedness metric: " + std::string(s));
}

// Relatedness metric between an anchor and a text. All offered metrics are
// symmetric. Cosine is a similarity; every other kind is a distance, which
// matters for ordering (see most_related_first).
struct Relatedness {
  RelKind kind = RelKind::cosine;
  std::size_t binarize_k = 25;  // used by the binary kinds only

  bool is_surface() const {
    return kind == RelKind::edit || kind == RelKind::token_jaccard;
  }
  bool is_binary() const {
    return kind == RelKind::hamming || kind == RelKind::jaccard ||
           kind == RelKind::dice || kind == RelKind::sokalsneath;
  }
  bool is_similarity() const { return kind == RelKind::cosine; }
};

// True when a given score should rank before another under this metric's
// "most related" ordering.
inline bool most_related_first(const Relatedness& metric, double a, double b) {
  return metric.is_similarity() ? a > b : a < b;
}

struct RelativeEmbedding {
  Vector scores;
  std::string anchor_set_id;
  std::string metric;
};

namespace detail {

inline void require_provider_match(const AnchorSet& set, const EmbeddingProvider& provider) {
  const std::string expected = set.encoder.fingerprint();
  const std::string actual = provider.descriptor().fingerprint();
  if (expected != actual) {
    throw EncoderMismatch("anchor set was built with '" + expected +
                          "', provider is '" + actual + "'");
  }
}

}  // namespace detail

// Scores for a batch of texts against every anchor; row i holds the scores of
// texts[i]. A single text is exactly the one-row case of this computation.
inline Matrix embed_corpus_relative(const std::vector<TextRecord>& texts,
                                    const AnchorSet& set, const EmbeddingProvider& provider,
                                    const Relatedness& metric = {}) {
  if (texts.empty()) throw EmptyInput("embed_corpus_relative: no texts");
  const std::size_t n = set.n();
  Matrix scores(texts.size(), n);

  if (metric.is_surface()) {
    const SurfaceMetric surface = metric.kind == RelKind::edit
                                      ? SurfaceMetric::edit
                                      : SurfaceMetric::token_jaccard;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto row = scores.row(i);
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = surface_distance(surface, set.records[j].text, texts[i].text);
      }
    }
    return scores;
  }

  detail::require_provider_match(set, provider);
  const EmbeddingBatch batch = provider.embed_batch(texts);
  if (batch.vectors.cols() != set.dim()) {
    throw DimensionMismatch("provider width " + std::to_string(batch.vectors.cols()) +
                            " vs anchor width " + std::to_string(set.dim()));
  }

  switch (metric.kind) {
    case RelKind::cosine: {
      // One normalization pass per side, then plain dot products.
      Matrix anchors_hat(n, set.dim());
      for (std::size_t j = 0; j < n; ++j) {
        auto src = set.vectors.row(j);
        const double norm = detail::l2_norm(src);
        if (norm == 0.0) throw ZeroVector("anchor '" + set.records[j].id + "'");
        auto dst = anchors_hat.row(j);
        for (std::size_t t = 0; t < src.size(); ++t) dst[t] = src[t] / norm;
      }
      for (std::size_t i = 0; i < texts.size(); ++i) {
        auto src = batch.vectors.row(i);
        const double norm = detail::l2_norm(src);
        if (norm == 0.0) throw ZeroVector("text '" + texts[i].id + "'");
        std::vector<double> text_hat(src.size());
        for (std::size_t t = 0; t < src.size(); ++t) text_hat[t] = src[t] / norm;
        auto row = scores.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          row[j] = std::clamp(detail::dot(anchors_hat.row(j), text_hat), -1.0, 1.0);
        }
      }
      return scores;
    }
    case RelKind::euclidean:
    case RelKind::manhattan:
    case RelKind::chebyshev: {
      const DenseMetric dense = metric.kind == RelKind::euclidean ? DenseMetric::euclidean
                                : metric.kind == RelKind::manhattan
                                    ? DenseMetric::manhattan
                                    : DenseMetric::chebyshev;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        auto row = scores.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          row[j] = dense_distance(dense, set.vectors.row(j), batch.vectors.row(i));
        }
      }
      return scores;
    }
    default: {
      const BinaryMetric binary = metric.kind == RelKind::hamming ? BinaryMetric::hamming
                                  : metric.kind == RelKind::jaccard
                                      ? BinaryMetric::jaccard
                                      : metric.kind == RelKind::dice ? BinaryMetric::dice
                                                                     : BinaryMetric::sokalsneath;
      std::vector<BinaryVector> anchor_bits;
      anchor_bits.reserve(n);
      for (std::size_t j = 0; j < n; ++j) {
        anchor_bits.push_back(binarize_top_k(set.vectors.row(j), metric.binarize_k));
      }
      for (std::size_t i = 0; i < texts.size(); ++i) {
        const BinaryVector text_bits =
            binarize_top_k(batch.vectors.row(i), metric.binarize_k);
        auto row = scores.row(i);
        for (std::size_t j = 0; j < n; ++j) {
          row[j] = binary_distance(binary, anchor_bits[j], text_bits);
        }
      }
      return scores;
    }
  }
}

inline RelativeEmbedding embed_relative(const TextRecord& text, const AnchorSet& set,
                                        const EmbeddingProvider& provider,
                                        const Relatedness& metric = {}) {
  const Matrix scores = embed_corpus_relative({text}, set, provider, metric);
  return RelativeEmbedding{scores.row_vector(0), set.id, to_string(metric.kind)};
}

// ---- fine-grained concatenation

struct FineGrainedPart {
  const AnchorSet* anchors = nullptr;
  const EmbeddingProvider* provider = nullptr;
};

// Concatenates per-provider relative embeddings in part order; segment values
// are preserved exactly (no renormalization across segments).
inline Matrix embed_corpus_fine_grained(const std::vector<TextRecord>& texts,
                                        std::span<const FineGrainedPart> parts,
                                        const Relatedness& metric = {}) {
  if (parts.empty()) throw EmptyInput("embed_corpus_fine_grained: no parts");
  std::size_t total = 0;
  for (const FineGrainedPart& part : parts) total += part.anchors->n();
  Matrix out(texts.size(), total);
  std::size_t offset = 0;
  for (const FineGrainedPart& part : parts) {
    const Matrix segment = embed_corpus_relative(texts, *part.anchors, *part.provider, metric);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto src = segment.row(i);
      auto dst = out.row(i);
      std::copy(src.begin(), src.end(), dst.begin() + offset);
    }
    offset += part.anchors->n();
  }
  return out;
}

inline RelativeEmbedding embed_fine_grained(const TextRecord& text,
                                            std::span<const FineGrainedPart> parts,
                                            const Relatedness& metric = {}) {
  const Matrix scores = embed_corpus_fine_grained({text}, parts, metric);
  std::string set_id;
  for (const FineGrainedPart& part : parts) {
    if (!set_id.empty()) set_id += '+';
    set_id += part.anchors->id;
  }
  return RelativeEmbedding{scores.row_vector(0), std::move(set_id), to_string(metric.kind)};
}

// ---- cognitive load

// Interpretability proxy: binarize both sides of each pair to their top-k
// dimensions and count the shared active dimensions. Lower means fewer
// anchors to inspect when comparing two embeddings.
struct CognitiveLoad {
  double mean = 0.0;
  long long rounded = 0;
};

inline CognitiveLoad cognitive_load_rows(const Matrix& left, const Matrix& right,
                                         std::size_t k) {
  if (left.rows() != right.rows()) {
    throw LengthMismatch("cognitive load: " + std::to_string(left.rows()) + " vs " +
                         std::to_string(right.rows()) + " rows");
  }
  if (left.rows() == 0) throw EmptyInput("cognitive load: no pairs");
  if (left.cols() != right.cols()) {
    throw DimensionMismatch("cognitive load: " + std::to_string(left.cols()) + " vs " +
                            std::to_string(right.cols()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < left.rows(); ++i) {
    const BinaryVector a = binarize_top_k(left.row(i), k);
    const BinaryVector b = binarize_top_k(right.row(i), k);
    total += static_cast<double>(binary_inner_product(a, b));
  }
  CognitiveLoad load;
  load.mean = total / static_cast<double>(left.rows());
  load.rounded = std::llround(load.mean);
  return load;
}

inline CognitiveLoad cognitive_load_pairs(
    const std::vector<std::pair<RelativeEmbedding, RelativeEmbedding>>& pairs,
    std::size_t k) {
  if (pairs.empty()) throw EmptyInput("cognitive load: no pairs");
  const std::size_t dim = pairs.front().first.scores.dim();
  Matrix left(pairs.size(), dim);
  Matrix right(pairs.size(), dim);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first.scores.dim() != dim || pairs[i].second.scores.dim() != dim) {
      throw DimensionMismatch("cognitive load: pair " + std::to_string(i));
    }
    auto a = pairs[i].first.scores.span();
    auto b = pairs[i].second.scores.span();
    std::copy(a.begin(), a.end(), left.row(i).begin());
    std::copy(b.begin(), b.end(), right.row(i).begin());
  }
  return cognitive_load_rows(left, right, k);
}

// Same inner product applied to the raw dense scores, reported for parity
// with the binarized figure. Advisory: the measure is defined for binary
// embeddings, not dense ones.
inline double cognitive_load_dense_rows(const Matrix& left, const Matrix& right) {
  if (left.rows() != right.rows()) {
    throw LengthMismatch("cognitive load: " + std::to_string(left.rows()) + " vs " +
                         std::to_string(right.rows()) + " rows");
  }
  if (left.rows() == 0) throw EmptyInput("cognitive load: no pairs");
  if (left.cols() != right.cols()) {
    throw DimensionMismatch("cognitive load: " + std::to_string(left.cols()) + " vs " +
                            std::to_string(right.cols()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < left.rows(); ++i) {
    total += detail::dot(left.row(i), right.row(i));
  }
  return total / static_cast<double>(left.rows());
}

}  // namespace ldir
