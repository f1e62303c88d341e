#include "scenmine/synth/client.hpp"

#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <httplib.h>
#include <json.hpp>

namespace scenmine::synth {

using nlohmann::json;

GenerationResponse ScriptedClient::generate(const GenerationRequest& request) {
  std::lock_guard lock(mutex_);
  requests_.push_back(request);
  if (requests_.size() > responses_.size()) {
    throw TransportError("scripted client exhausted after " + std::to_string(responses_.size()) +
                         " responses");
  }
  return {responses_[requests_.size() - 1]};
}

std::vector<GenerationRequest> ScriptedClient::requests() const {
  std::lock_guard lock(mutex_);
  return requests_;
}

std::size_t ScriptedClient::calls() const {
  std::lock_guard lock(mutex_);
  return requests_.size();
}

std::string request_to_json(const GenerationRequest& request, const std::string& model) {
  json j = {{"prompt", request.prompt},
            {"temperature", request.temperature},
            {"max_tokens", request.max_tokens}};
  if (!model.empty()) j["model"] = model;
  return j.dump();
}

GenerationResponse response_from_json(const std::string& body) {
  try {
    const json j = json::parse(body);
    return {j.at("text").get<std::string>()};
  } catch (const json::exception& e) {
    throw TransportError("malformed generation response: " + std::string(e.what()));
  }
}

HttpClient::HttpClient(std::string url, std::string model, std::chrono::milliseconds timeout)
    : model_(std::move(model)), timeout_(timeout) {
  const auto scheme = url.find("://");
  const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (scheme == std::string::npos || url.compare(0, scheme, "http") != 0) {
    throw InvalidInput("unsupported endpoint '" + url + "' (expected http://host[:port]/path)");
  }
  origin_ = url.substr(0, slash);
  path_ = slash == std::string::npos ? "/" : url.substr(slash);
}

GenerationResponse HttpClient::generate(const GenerationRequest& request) {
  httplib::Client cli(origin_);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  auto res = cli.Post(path_, request_to_json(request, model_), "application/json");
  if (!res) {
    throw TransportError("request to " + origin_ + path_ + " failed: " +
                         httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw TransportError("endpoint returned HTTP " + std::to_string(res->status));
  }
  return response_from_json(res->body);
}

GenerationResponse ProcessClient::generate(const GenerationRequest& request) {
  namespace fs = std::filesystem;
  std::random_device rd;
  const fs::path in_path = fs::temp_directory_path() /
                           ("scenmine_req_" + std::to_string(::getpid()) + "_" +
                            std::to_string(rd()) + ".json");
  {
    std::ofstream out(in_path, std::ios::binary);
    out << request_to_json(request);
    if (!out) throw TransportError("cannot write request file " + in_path.string());
  }
  const std::string cmd = command_ + " < '" + in_path.string() + "'";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) {
    fs::remove(in_path);
    throw TransportError("cannot start '" + command_ + "'");
  }
  std::string body;
  std::array<char, 4096> buf{};
  while (const std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) body.append(buf.data(), n);
  const int status = ::pclose(pipe);
  std::error_code ec;
  fs::remove(in_path, ec);
  if (status != 0) {
    throw TransportError("'" + command_ + "' exited with status " + std::to_string(status));
  }
  return response_from_json(body);
}

}  // namespace scenmine::synth
