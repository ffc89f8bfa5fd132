#pragma once

// HTTP embedding provider.
//
// Protocol: POST {endpoint}/embed with body {"texts": ["...", ...]} and a
// JSON response {"dimension": d, "embeddings": [[f, ...], ...]} row-aligned
// to the request. A non-200 status after the retry budget, or a malformed or
// wrong-width response, raises ProviderUnavailable; a malformed response
// never yields a partial batch.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"

namespace ldir {

class HttpEncoder final : public EmbeddingProvider {
 public:
  // Recognized params: endpoint (required), batch (default 64), max_in_flight
  // (default 4), attempts (default 3), backoff_ms (default 250). The
  // LDIR_HTTP_TIMEOUT_MS environment variable overrides the request timeout
  // (default 30000 ms).
  explicit HttpEncoder(EncoderDescriptor desc) : desc_(std::move(desc)) {
    if (desc_.kind != EncoderDescriptor::Kind::http) {
      throw ConfigError("HttpEncoder requires an http descriptor");
    }
    if (desc_.dim == 0) throw ConfigError("http provider requires dim");
    auto it = desc_.params.find("endpoint");
    if (it == desc_.params.end() || it->second.empty()) {
      throw ConfigError("http provider requires endpoint");
    }
    split_endpoint(it->second);
    batch_size_ = param_u64("batch", 64);
    if (batch_size_ == 0) throw ConfigError("http batch size must be >= 1");
    max_in_flight_ = param_u64("max_in_flight", 4);
    if (max_in_flight_ == 0) throw ConfigError("http max_in_flight must be >= 1");
    attempts_ = param_u64("attempts", 3);
    if (attempts_ == 0) throw ConfigError("http attempts must be >= 1");
    backoff_ms_ = param_u64("backoff_ms", 250);
    timeout_ms_ = 30000;
    if (const char* env = std::getenv("LDIR_HTTP_TIMEOUT_MS")) {
      char* end = nullptr;
      const unsigned long long v = std::strtoull(env, &end, 10);
      if (end == env || *end != '\0' || v == 0) {
        throw ConfigError("LDIR_HTTP_TIMEOUT_MS must be a positive integer");
      }
      timeout_ms_ = v;
    }
  }

  const EncoderDescriptor& descriptor() const override { return desc_; }

  EmbeddingBatch embed_batch(const std::vector<TextRecord>& texts) const override {
    require_non_empty(texts);
    const std::size_t n = texts.size();
    const std::size_t batches = (n + batch_size_ - 1) / batch_size_;

    EmbeddingBatch out;
    out.ids.reserve(n);
    for (const TextRecord& t : texts) out.ids.push_back(t.id);
    out.vectors = Matrix(n, desc_.dim);

    std::size_t next = 0;
    while (next < batches) {
      // Waves of at most max_in_flight_ concurrent requests.
      const std::size_t wave = std::min(max_in_flight_, batches - next);
      std::vector<std::future<std::vector<std::vector<double>>>> futures;
      futures.reserve(wave);
      std::vector<std::size_t> starts;
      for (std::size_t w = 0; w < wave; ++w) {
        const std::size_t b = next + w;
        const std::size_t begin = b * batch_size_;
        const std::size_t end = std::min(begin + batch_size_, n);
        starts.push_back(begin);
        std::vector<std::string> chunk;
        chunk.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) chunk.push_back(texts[i].text);
        futures.push_back(std::async(
            wave == 1 ? std::launch::deferred : std::launch::async,
            [this, chunk = std::move(chunk)] { return request_chunk(chunk); }));
      }
      for (std::size_t w = 0; w < wave; ++w) {
        const std::vector<std::vector<double>> rows = futures[w].get();
        for (std::size_t r = 0; r < rows.size(); ++r) {
          auto dst = out.vectors.row(starts[w] + r);
          std::copy(rows[r].begin(), rows[r].end(), dst.begin());
        }
      }
      next += wave;
    }
    return out;
  }

 private:
  std::uint64_t param_u64(const char* key, std::uint64_t fallback) const {
    auto it = desc_.params.find(key);
    if (it == desc_.params.end()) return fallback;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
    if (end == it->second.c_str() || *end != '\0') {
      throw ConfigError(std::string("http param ") + key + " must be an integer");
    }
    return v;
  }

  void split_endpoint(const std::string& endpoint) {
    const std::size_t scheme = endpoint.find("://");
    if (scheme == std::string::npos) {
      throw ConfigError("endpoint must include a scheme: " + endpoint);
    }
    const std::size_t path = endpoint.find('/', scheme + 3);
    if (path == std::string::npos) {
      base_ = endpoint;
    } else {
      base_ = endpoint.substr(0, path);
      prefix_ = endpoint.substr(path);
      while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
    }
  }

  std::vector<std::vector<double>> request_chunk(const std::vector<std::string>& chunk) const {
    nlohmann::json body;
    body["texts"] = chunk;
    const std::string payload = body.dump();

    std::string last_error;
    for (std::size_t attempt = 0; attempt < attempts_; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(
            std::chrono::milliseconds(backoff_ms_ << (attempt - 1)));
      }
      httplib::Client client(base_);
      client.set_connection_timeout(std::chrono::milliseconds(timeout_ms_));
      client.set_read_timeout(std::chrono::milliseconds(timeout_ms_));
      client.set_write_timeout(std::chrono::milliseconds(timeout_ms_));
      auto res = client.Post(prefix_ + "/embed", payload, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      return parse_response(res->body, chunk.size());
    }
    throw ProviderUnavailable(base_ + prefix_ + "/embed after " +
                              std::to_string(attempts_) + " attempts: " + last_error);
  }

  std::vector<std::vector<double>> parse_response(const std::string& body,
                                                  std::size_t expected_rows) const {
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw ProviderUnavailable(std::string("malformed response: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("dimension") || !obj.contains("embeddings")) {
      throw ProviderUnavailable("response missing dimension or embeddings");
    }
    const std::size_t dim = obj.at("dimension").get<std::size_t>();
    if (dim != desc_.dim) {
      throw ProviderUnavailable("dimension mismatch: service returned width " +
                                std::to_string(dim) + ", descriptor has " +
                                std::to_string(desc_.dim));
    }
    const auto& rows = obj.at("embeddings");
    if (!rows.is_array() || rows.size() != expected_rows) {
      throw ProviderUnavailable("row count mismatch: got " +
                                std::to_string(rows.size()) + ", expected " +
                                std::to_string(expected_rows));
    }
    std::vector<std::vector<double>> out;
    out.reserve(expected_rows);
    for (const auto& row : rows) {
      if (!row.is_array() || row.size() != desc_.dim) {
        throw ProviderUnavailable("row width mismatch in response");
      }
      std::vector<double> values;
      values.reserve(dim);
      for (const auto& v : row) {
        if (!v.is_number()) throw ProviderUnavailable("non-numeric value in response");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ProviderUnavailable("non-finite value in response");
        values.push_back(d);
      }
      out.push_back(std::move(values));
    }
    return out;
  }

  EncoderDescriptor desc_;
  std::string base_;
  std::string prefix_;
  std::size_t batch_size_ = 64;
  std::size_t max_in_flight_ = 4;
  std::size_t attempts_ = 3;
  std::uint64_t backoff_ms_ = 250;
  std::uint64_t timeout_ms_ = 30000;
};

}  // namespace ldir
