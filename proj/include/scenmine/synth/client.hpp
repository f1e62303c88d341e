#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "scenmine/errors.hpp"

namespace scenmine::synth {

inline constexpr double kDefaultTemperature = 0.2;

struct GenerationRequest {
  std::string prompt;
  double temperature = kDefaultTemperature;
  int max_tokens = 1024;
};

struct GenerationResponse {
  std::string text;
};

// Transport or protocol failure talking to a text-generation backend.
class TransportError : public Error {
 public:
  using Error::Error;
};

class TextClient {
 public:
  virtual ~TextClient() = default;
  virtual GenerationResponse generate(const GenerationRequest& request) = 0;
  // False when callers must serialize generate() calls themselves.
  virtual bool thread_safe() const { return true; }
};

// Replays a fixed list of responses in order; throws TransportError once the
// script is exhausted. Records every request it receives.
class ScriptedClient : public TextClient {
 public:
  explicit ScriptedClient(std::vector<std::string> responses) : responses_(std::move(responses)) {}

  GenerationResponse generate(const GenerationRequest& request) override;
  std::vector<GenerationRequest> requests() const;
  std::size_t calls() const;

 private:
  std::vector<std::string> responses_;
  std::vector<GenerationRequest> requests_;
  mutable std::mutex mutex_;
};

// POSTs {prompt, temperature, max_tokens, model} as JSON and reads {text}.
class HttpClient : public TextClient {
 public:
  // url like "http://127.0.0.1:8080/generate".
  HttpClient(std::string url, std::string model,
             std::chrono::milliseconds timeout = std::chrono::seconds(60));
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  std::string origin_;
  std::string path_;
  std::string model_;
  std::chrono::milliseconds timeout_;
};

// Runs a shell command per request, feeding the request JSON on stdin and
// parsing {text} from stdout.
class ProcessClient : public TextClient {
 public:
  explicit ProcessClient(std::string command) : command_(std::move(command)) {}
  GenerationResponse generate(const GenerationRequest& request) override;

 private:
  std::string command_;
};

std::string request_to_json(const GenerationRequest& request, const std::string& model = "");
// Throws TransportError when `body` is not {"text": string}.
GenerationResponse response_from_json(const std::string& body);

}  // namespace scenmine::synth
