#include "advtext/remote.hpp"

#include <charconv>
#include <cmath>

#include "advtext/error.hpp"
#include "httplib.h"
#include "json.hpp"

namespace advtext {
namespace {

using nlohmann::json;

json post_json(const Endpoint& endpoint, std::string_view route, const json& body, std::chrono::milliseconds timeout) {
  httplib::Client client(endpoint.host, endpoint.port);
  const auto secs = static_cast<time_t>(timeout.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  const std::string path = endpoint.base_path + std::string(route);
  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - started;
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout))
      throw RemoteError(RemoteError::Kind::Timeout, "request to " + endpoint.origin() + path + " timed out");
    throw RemoteError(RemoteError::Kind::Network,
                      "request to " + endpoint.origin() + path + " failed: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300)
    throw RemoteError(RemoteError::Kind::Status,
                      endpoint.origin() + path + " returned HTTP " + std::to_string(res->status), res->status);
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw RemoteError(RemoteError::Kind::Protocol, "response body is not JSON: " + std::string(e.what()));
  }
}

class RemoteOracle final : public VictimOracle {
 public:
  RemoteOracle(Endpoint endpoint, RemoteOptions options) : endpoint_(std::move(endpoint)), options_(options) {}

  Prediction predict(std::string_view text) const override {
    const json body = post_json(endpoint_, "/classify", {{"text", std::string(text)}}, options_.timeout);
    if (!body.is_object()) throw RemoteError(RemoteError::Kind::Protocol, "classify response is not an object");
    auto label = body.find("label");
    if (label == body.end() || !label->is_number_integer() || label->get<long long>() < 0)
      throw RemoteError(RemoteError::Kind::Protocol, "classify response lacks a non-negative integer 'label'");
    Prediction p;
    p.label = static_cast<ClassIndex>(label->get<long long>());
    auto conf = body.find("confidence");
    if (conf != body.end() && !conf->is_null()) {
      if (!conf->is_array() || conf->empty())
        throw RemoteError(RemoteError::Kind::Protocol, "'confidence' must be a non-empty array");
      Eigen::VectorXd v(static_cast<Eigen::Index>(conf->size()));
      for (std::size_t i = 0; i < conf->size(); ++i) {
        const auto& x = (*conf)[i];
        if (!x.is_number() || !std::isfinite(x.get<double>()))
          throw RemoteError(RemoteError::Kind::Protocol, "'confidence' entries must be numbers");
        v[static_cast<Eigen::Index>(i)] = x.get<double>();
      }
      if (p.label >= conf->size())
        throw RemoteError(RemoteError::Kind::Protocol, "'label' outside the confidence vector");
      p.confidence = std::move(v);
    } else if (options_.confidence) {
      throw RemoteError(RemoteError::Kind::Protocol, "confidence-mode server omitted 'confidence'");
    }
    return p;
  }

  bool provides_confidence() const noexcept override { return options_.confidence; }

 private:
  Endpoint endpoint_;
  RemoteOptions options_;
};

class RemoteGenerator final : public CandidateGenerator {
 public:
  RemoteGenerator(Endpoint endpoint, std::chrono::milliseconds timeout)
      : endpoint_(std::move(endpoint)), timeout_(timeout) {}

  std::vector<std::string> generate(std::string_view text, const GenerateParams& params) const override {
    const json req = {{"text", std::string(text)}, {"n", params.n_candidates}, {"temperature", params.temperature}};
    const json body = post_json(endpoint_, "/generate", req, timeout_);
    if (!body.is_object() || !body.contains("candidates") || !body["candidates"].is_array())
      throw RemoteError(RemoteError::Kind::Protocol, "generate response lacks a 'candidates' array");
    std::vector<std::string> out;
    for (const auto& c : body["candidates"]) {
      if (!c.is_string()) throw RemoteError(RemoteError::Kind::Protocol, "candidates must be strings");
      out.push_back(c.get<std::string>());
    }
    if (out.empty()) throw NoApplicableRules();
    return out;
  }

 private:
  Endpoint endpoint_;
  std::chrono::milliseconds timeout_;
};

}  // namespace

Endpoint Endpoint::parse(std::string_view url) {
  constexpr std::string_view kScheme = "http://";
  if (url.substr(0, kScheme.size()) != kScheme)
    throw ConfigError("endpoint '" + std::string(url) + "' must start with http://", "endpoint");
  std::string_view rest = url.substr(kScheme.size());
  Endpoint e;
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) e.base_path = std::string(rest.substr(slash));
  while (!e.base_path.empty() && e.base_path.back() == '/') e.base_path.pop_back();
  const auto colon = authority.rfind(':');
  if (colon != std::string_view::npos) {
    const auto port = authority.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), e.port);
    if (ec != std::errc() || ptr != port.data() + port.size() || e.port <= 0 || e.port > 65535)
      throw ConfigError("invalid port in '" + std::string(url) + "'", "endpoint");
    authority = authority.substr(0, colon);
  }
  if (authority.empty()) throw ConfigError("endpoint '" + std::string(url) + "' has no host", "endpoint");
  e.host = std::string(authority);
  return e;
}

std::string Endpoint::origin() const { return "http://" + host + ":" + std::to_string(port); }

OraclePtr bind_remote(std::string_view endpoint, const RemoteOptions& options) {
  return std::make_shared<RemoteOracle>(Endpoint::parse(endpoint), options);
}

GeneratorPtr bind_remote_generator(std::string_view endpoint, std::chrono::milliseconds timeout) {
  return std::make_shared<RemoteGenerator>(Endpoint::parse(endpoint), timeout);
}

ScoreHook bind_remote_scorer(std::string_view endpoint, std::chrono::milliseconds timeout) {
  Endpoint e = Endpoint::parse(endpoint);
  return [e, timeout](std::string_view original, std::string_view perturbed) {
    const json body =
        post_json(e, "/score", {{"original", std::string(original)}, {"perturbed", std::string(perturbed)}}, timeout);
    if (!body.is_object() || !body.contains("value") || !body["value"].is_number())
      throw RemoteError(RemoteError::Kind::Protocol, "score response lacks a numeric 'value'");
    return body["value"].get<double>();
  };
}

}  // namespace advtext
