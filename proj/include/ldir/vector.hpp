#pragma once

// Dense and binary vector types plus the relatedness metrics offered between
// texts: cosine and raw distances over encoder vectors, set dissimilarities
// over binarized vectors, and surface distances over the strings themselves.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ldir/errors.hpp"

namespace ldir {

// Dense embedding vector. Values are 64-bit floats internally; file formats
// quantize to 32-bit. Invariants: dim >= 1, every value finite.
class Vector {
 public:
  explicit Vector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ConfigError("Vector requires at least one value");
    for (double v : values_) {
      if (!std::isfinite(v)) throw ConfigError("Vector values must be finite");
    }
  }

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  std::span<const double> span() const { return values_; }

  friend bool operator==(const Vector& a, const Vector& b) {
    return a.values_ == b.values_;
  }

 private:
  std::vector<double> values_;
};

// Row-major dense matrix; each row is one embedding.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Vector row_vector(std::size_t i) const {
    return Vector(std::vector<double>(row(i).begin(), row(i).end()));
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Binary vector with cached popcount. Invariant: popcount(bits) == k.
class BinaryVector {
 public:
  explicit BinaryVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    if (bits_.empty()) throw ConfigError("BinaryVector requires at least one bit");
    for (std::uint8_t b : bits_) {
      if (b > 1) throw ConfigError("BinaryVector bits must be 0 or 1");
      k_ += b;
    }
  }

  std::size_t dim() const { return bits_.size(); }
  std::size_t k() const { return k_; }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const BinaryVector& a, const BinaryVector& b) {
    return a.bits_ == b.bits_;
  }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t k_ = 0;
};

namespace detail {

inline void require_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw DimensionMismatch(std::string(where) + ": " + std::to_string(a) +
                            " vs " + std::to_string(b));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline double l2_norm(std::span<const double> v) {
  return std::sqrt(dot(v, v));
}

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

// Lowercases ASCII letters only; multi-byte UTF-8 sequences pass through.
inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 32);
  }
  return out;
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t start = i;
    while (i < s.size() && !is_ascii_space(static_cast<unsigned char>(s[i]))) ++i;
    if (i > start) tokens.emplace_back(s.substr(start, i - start));
  }
  return tokens;
}

// Decodes UTF-8 to Unicode scalar values; each invalid byte becomes its own
// symbol so malformed input still yields a well-defined distance.
inline std::vector<std::uint32_t> decode_utf8(std::string_view s) {
  std::vector<std::uint32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      len = 1;
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    }
    bool ok = len > 0 && i + len <= s.size();
    for (std::size_t j = 1; ok && j < len; ++j) {
      const unsigned char cc = static_cast<unsigned char>(s[i + j]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
      } else {
        cp = (cp << 6) | (cc & 0x3F);
      }
    }
    if (ok) {
      out.push_back(cp);
      i += len;
    } else {
      out.push_back(c);
      i += 1;
    }
  }
  return out;
}

}  // namespace detail

// Lowercased whitespace tokens; the tokenization shared by the hashed encoder
// and the token-based surface metric.
inline std::vector<std::string> lower_tokens(std::string_view text) {
  return detail::split_ws(detail::ascii_lower(text));
}

// Whitespace token count (no case folding); used for length bucketing.
inline std::size_t count_tokens(std::string_view text) {
  return detail::split_ws(text).size();
}

// ---- dense kernels

inline Vector l2_normalize(const Vector& v) {
  const double norm = detail::l2_norm(v.span());
  if (norm == 0.0) throw ZeroVector("l2_normalize");
  std::vector<double> out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] / norm;
  return Vector(std::move(out));
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  detail::require_same_dim(a.size(), b.size(), "cosine_similarity");
  const double na = detail::l2_norm(a);
  const double nb = detail::l2_norm(b);
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine_similarity");
  return detail::dot(a, b) / (na * nb);
}

inline double cosine_similarity(const Vector& a, const Vector& b) {
  return cosine_similarity(a.span(), b.span());
}

enum class DenseMetric { euclidean, manhattan, chebyshev };

inline double dense_distance(DenseMetric metric, std::span<const double> a,
                             std::span<const double> b) {
  detail::require_same_dim(a.size(), b.size(), "dense_distance");
  double acc = 0.0;
  switch (metric) {
    case DenseMetric::euclidean:
      for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
      }
      return std::sqrt(acc);
    case DenseMetric::manhattan:
      for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
      return acc;
    case DenseMetric::chebyshev:
      for (std::size_t i = 0; i < a.size(); ++i) acc = std::max(acc, std::abs(a[i] - b[i]));
      return acc;
  }
  throw ConfigError("unknown dense metric");
}

inline double dense_distance(DenseMetric metric, const Vector& a, const Vector& b) {
  return dense_distance(metric, a.span(), b.span());
}

// ---- binary kernels

// Keeps the bits of the k largest values; ties broken toward the lower index
// so the selection is deterministic.
inline BinaryVector binarize_top_k(std::span<const double> values, std::size_t k) {
  if (k > values.size()) {
    throw KTooLarge("binarize_top_k: k=" + std::to_string(k) + " dim=" +
                    std::to_string(values.size()));
  }
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (k > 0 && k < values.size()) {
    std::nth_element(order.begin(), order.begin() + (k - 1), order.end(),
                     [&](std::size_t i, std::size_t j) {
                       if (values[i] != values[j]) return values[i] > values[j];
                       return i < j;
                     });
  }
  std::vector<std::uint8_t> bits(values.size(), 0);
  for (std::size_t i = 0; i < k; ++i) bits[order[i]] = 1;
  return BinaryVector(std::move(bits));
}

inline BinaryVector binarize_top_k(const Vector& v, std::size_t k) {
  return binarize_top_k(v.span(), k);
}

// Count of positions set in both vectors.
inline std::size_t binary_inner_product(const BinaryVector& a, const BinaryVector& b) {
  detail::require_same_dim(a.dim(), b.dim(), "binary_inner_product");
  std::size_t acc = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) acc += a[i] & b[i];
  return acc;
}

enum class BinaryMetric { hamming, jaccard, dice, sokalsneath };

// Dissimilarities from the agreement table: c_tt = both set, c_d = disagree,
// m = dim. The set-based metrics return 0 when c_tt + c_d == 0.
inline double binary_distance(BinaryMetric metric, const BinaryVector& a,
                              const BinaryVector& b) {
  detail::require_same_dim(a.dim(), b.dim(), "binary_distance");
  std::size_t c_tt = 0;
  std::size_t c_d = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    c_tt += a[i] & b[i];
    c_d += a[i] ^ b[i];
  }
  const double tt = static_cast<double>(c_tt);
  const double d = static_cast<double>(c_d);
  switch (metric) {
    case BinaryMetric::hamming:
      return d / static_cast<double>(a.dim());
    case BinaryMetric::jaccard:
      return (c_tt + c_d == 0) ? 0.0 : d / (tt + d);
    case BinaryMetric::dice:
      return (c_tt + c_d == 0) ? 0.0 : d / (2.0 * tt + d);
    case BinaryMetric::sokalsneath:
      return (c_tt + c_d == 0) ? 0.0 : 2.0 * d / (tt + 2.0 * d);
  }
  throw ConfigError("unknown binary metric");
}

// ---- surface kernels

// Levenshtein distance with unit costs over Unicode scalar values.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::vector<std::uint32_t> sa = detail::decode_utf8(a);
  const std::vector<std::uint32_t> sb = detail::decode_utf8(b);
  if (sa.empty()) return sb.size();
  if (sb.empty()) return sa.size();
  std::vector<std::size_t> prev(sb.size() + 1);
  std::vector<std::size_t> cur(sb.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= sa.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= sb.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (sa[i - 1] == sb[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[sb.size()];
}

// 1 - |A n B| / |A u B| over lowercased whitespace token sets; 0 when both
// token sets are empty.
inline double token_jaccard_distance(std::string_view a, std::string_view b) {
  std::vector<std::string> ta = lower_tokens(a);
  std::vector<std::string> tb = lower_tokens(b);
  std::sort(ta.begin(), ta.end());
  ta.erase(std::unique(ta.begin(), ta.end()), ta.end());
  std::sort(tb.begin(), tb.end());
  tb.erase(std::unique(tb.begin(), tb.end()), tb.end());
  if (ta.empty() && tb.empty()) return 0.0;
  std::vector<std::string> inter;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                        std::back_inserter(inter));
  const double uni =
      static_cast<double>(ta.size() + tb.size() - inter.size());
  return 1.0 - static_cast<double>(inter.size()) / uni;
}

enum class SurfaceMetric { edit, token_jaccard };

inline double surface_distance(SurfaceMetric metric, std::string_view a,
                               std::string_view b) {
  switch (metric) {
    case SurfaceMetric::edit:
      return static_cast<double>(edit_distance(a, b));
    case SurfaceMetric::token_jaccard:
      return token_jaccard_distance(a, b);
  }
  throw ConfigError("unknown surface metric");
}

}  // namespace ldir
