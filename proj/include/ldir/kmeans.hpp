#pragma once

// Lloyd's k-means with seeded k-means++ initialization. Used by the
// clustering evaluation harness and by k-means anchor sampling.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "ldir/errors.hpp"
#include "ldir/rng.hpp"
#include "ldir/vector.hpp"

namespace ldir {

struct KmeansResult {
  std::vector<std::size_t> labels;
  Matrix centroids;
  double inertia = 0.0;
  std::size_t iterations = 0;
};

namespace detail {

inline double dist2(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

inline Matrix kmeanspp_init(const Matrix& rows, std::size_t k, std::mt19937_64& gen) {
  const std::size_t n = rows.rows();
  Matrix centroids(k, rows.cols());
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t first = static_cast<std::size_t>(uniform_below(gen, n));
  auto set_centroid = [&](std::size_t c, std::size_t row) {
    auto dst = centroids.row(c);
    auto src = rows.row(row);
    std::copy(src.begin(), src.end(), dst.begin());
  };
  set_centroid(0, first);

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], dist2(rows.row(i), centroids.row(c - 1)));
      total += d2[i];
    }
    std::size_t pick;
    if (total <= 0.0) {
      pick = static_cast<std::size_t>(uniform_below(gen, n));
    } else {
      const double r = uniform01(gen) * total;
      double cum = 0.0;
      pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += d2[i];
        if (cum > r) {
          pick = i;
          break;
        }
      }
    }
    set_centroid(c, pick);
  }
  return centroids;
}

}  // namespace detail

// Best of `restarts` seeded runs by final inertia. Empty clusters are
// re-seeded from the point farthest from its assigned centroid. Deterministic
// for a given seed.
inline KmeansResult kmeans(const Matrix& rows, std::size_t k, std::uint64_t seed,
                           std::size_t restarts = 10, std::size_t max_iters = 300,
                           double tol = 1e-6) {
  const std::size_t n = rows.rows();
  if (k < 1 || k > n) {
    throw InvalidK("kmeans: k=" + std::to_string(k) + " with " + std::to_string(n) +
                   " rows");
  }
  if (restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");

  std::mt19937_64 gen(seed);
  KmeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();

  for (std::size_t restart = 0; restart < restarts; ++restart) {
    Matrix centroids = detail::kmeanspp_init(rows, k, gen);
    std::vector<std::size_t> labels(n, 0);
    std::vector<double> point_d2(n, 0.0);
    double last_inertia = std::numeric_limits<double>::infinity();
    std::size_t iters = 0;

    for (std::size_t iter = 0; iter < max_iters; ++iter) {
      ++iters;
      double inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double bd = std::numeric_limits<double>::infinity();
        std::size_t bc = 0;
        for (std::size_t c = 0; c < k; ++c) {
          const double d = detail::dist2(rows.row(i), centroids.row(c));
          if (d < bd) {
            bd = d;
            bc = c;
          }
        }
        labels[i] = bc;
        point_d2[i] = bd;
        inertia += bd;
      }
      // Lloyd's never increases the objective; tolerate only rounding noise.
      if (inertia > last_inertia * (1.0 + 1e-9) + 1e-12) {
        throw std::logic_error("kmeans: inertia increased across iterations");
      }
      const bool converged =
          last_inertia != std::numeric_limits<double>::infinity() &&
          last_inertia - inertia <= tol * last_inertia;
      last_inertia = inertia;
      if (converged || inertia == 0.0) break;

      // Update step.
      Matrix sums(k, rows.cols());
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        auto dst = sums.row(labels[i]);
        auto src = rows.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
        ++counts[labels[i]];
      }
      std::vector<bool> reseeded(n, false);
      for (std::size_t c = 0; c < k; ++c) {
        auto dst = centroids.row(c);
        if (counts[c] == 0) {
          // Re-seed from the farthest point not already claimed this round.
          std::size_t far = n;
          double fd = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            if (!reseeded[i] && point_d2[i] > fd) {
              fd = point_d2[i];
              far = i;
            }
          }
          reseeded[far] = true;
          auto src = rows.row(far);
          std::copy(src.begin(), src.end(), dst.begin());
        } else {
          auto src = sums.row(c);
          for (std::size_t j = 0; j < dst.size(); ++j) {
            dst[j] = src[j] / static_cast<double>(counts[c]);
          }
        }
      }
    }

    if (last_inertia < best.inertia) {
      best.labels = labels;
      best.centroids = std::move(centroids);
      best.inertia = last_inertia;
      best.iterations = iters;
    }
  }
  return best;
}

}  // namespace ldir
