#pragma once

#include <chrono>
#include <string>
#include <string_view>

#include "advtext/generator.hpp"
#include "advtext/metrics.hpp"
#include "advtext/victim.hpp"

namespace advtext {

/// Parsed "http://host[:port][/base]" URL. Only plain HTTP is supported.
struct Endpoint {
  std::string host;
  int port = 80;
  std::string base_path;

  static Endpoint parse(std::string_view url);
  std::string origin() const;
};

struct RemoteOptions {
  std::chrono::milliseconds timeout{5000};
  /// Declare that the server returns confidence vectors; a response without
  /// one is then a protocol error.
  bool confidence = false;
};

/// POST {base}/classify {"text"} -> {"label", "confidence"?}. One request per predict.
OraclePtr bind_remote(std::string_view endpoint, const RemoteOptions& options = {});

/// POST {base}/generate {"text", "n", "temperature"} -> {"candidates": [...]}.
GeneratorPtr bind_remote_generator(std::string_view endpoint,
                                   std::chrono::milliseconds timeout = std::chrono::milliseconds(30000));

/// POST {base}/score {"original", "perturbed"} -> {"value"}.
ScoreHook bind_remote_scorer(std::string_view endpoint,
                             std::chrono::milliseconds timeout = std::chrono::milliseconds(5000));

}  // namespace advtext
