#pragma once

// Provider construction from descriptors and from the CLI mini-syntax
// `kind:key=value,...`, e.g. `hashed:dim=128,seed=7`,
// `precomputed:path=store.bin`, `http:endpoint=http://localhost:8080,dim=1024`.

#include <memory>
#include <string>
#include <string_view>

#include "ldir/encoder.hpp"
#include "ldir/errors.hpp"
#include "ldir/http_encoder.hpp"
#include "ldir/store.hpp"

namespace ldir {

inline EncoderDescriptor parse_provider_spec(std::string_view spec) {
  const std::size_t colon = spec.find(':');
  EncoderDescriptor desc;
  desc.kind = EncoderDescriptor::kind_from_name(
      colon == std::string_view::npos ? spec : spec.substr(0, colon));
  desc.name = EncoderDescriptor::kind_name(desc.kind);

  std::string_view rest =
      colon == std::string_view::npos ? std::string_view{} : spec.substr(colon + 1);
  while (!rest.empty()) {
    const std::size_t comma = rest.find(',');
    const std::string_view pair =
        comma == std::string_view::npos ? rest : rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    const std::size_t eq = pair.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      throw ConfigError("provider spec expects key=value, got '" + std::string(pair) + "'");
    }
    const std::string key(pair.substr(0, eq));
    const std::string value(pair.substr(eq + 1));
    if (key == "dim") {
      try {
        desc.dim = std::stoul(value);
      } catch (const std::exception&) {
        throw ConfigError("provider dim must be an integer: " + value);
      }
    } else if (key == "name") {
      desc.name = value;
    } else {
      desc.params[key] = value;
    }
  }

  switch (desc.kind) {
    case EncoderDescriptor::Kind::hashed:
      if (desc.dim == 0) throw ConfigError("hashed provider requires dim");
      if (!desc.params.count("seed")) desc.params["seed"] = "42";
      for (const auto& [k, v] : desc.params) {
        if (k != "seed") throw ConfigError("hashed provider: unknown param " + k);
      }
      break;
    case EncoderDescriptor::Kind::precomputed:
      if (!desc.params.count("path")) throw ConfigError("precomputed provider requires path");
      for (const auto& [k, v] : desc.params) {
        if (k != "path" && k != "content_fnv") {
          throw ConfigError("precomputed provider: unknown param " + k);
        }
      }
      break;
    case EncoderDescriptor::Kind::http:
      if (desc.dim == 0) throw ConfigError("http provider requires dim");
      if (!desc.params.count("endpoint")) throw ConfigError("http provider requires endpoint");
      for (const auto& [k, v] : desc.params) {
        if (k != "endpoint" && k != "batch" && k != "max_in_flight" &&
            k != "attempts" && k != "backoff_ms") {
          throw ConfigError("http provider: unknown param " + k);
        }
      }
      break;
  }
  return desc;
}

inline std::unique_ptr<EmbeddingProvider> make_provider(const EncoderDescriptor& desc) {
  switch (desc.kind) {
    case EncoderDescriptor::Kind::hashed: {
      std::uint64_t seed = 42;
      if (auto it = desc.params.find("seed"); it != desc.params.end()) {
        try {
          seed = std::stoull(it->second);
        } catch (const std::exception&) {
          throw ConfigError("hashed seed must be an integer: " + it->second);
        }
      }
      return std::make_unique<HashedEncoder>(desc.dim, seed, desc.name);
    }
    case EncoderDescriptor::Kind::precomputed: {
      auto it = desc.params.find("path");
      if (it == desc.params.end()) throw ConfigError("precomputed provider requires path");
      return std::make_unique<PrecomputedStore>(it->second, desc.name);
    }
    case EncoderDescriptor::Kind::http:
      return std::make_unique<HttpEncoder>(desc);
  }
  throw ConfigError("unknown provider kind");
}

inline std::unique_ptr<EmbeddingProvider> make_provider(std::string_view spec) {
  return make_provider(parse_provider_spec(spec));
}

}  // namespace ldir
