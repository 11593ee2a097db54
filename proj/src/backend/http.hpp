#pragma once

#include <string>

#include "backend/chat.hpp"

namespace tcshpt {

// Transport settings shared by both HTTP dialects. `api_key` travels as an
// Authorization bearer header when non-empty and must never reach a log.
struct HttpOptions {
    std::string base_url;  // scheme://host[:port][/prefix]
    std::string api_key;
    int max_retries = 3;
    double backoff_base_s = 1.0;  // grows 1x, 2x, 4x per retry
};

// POST {base_url}/v1/chat/completions with an OpenAI-style body; reads
// choices[0].message.content.
class OpenAiBackend : public ChatBackend {
public:
    explicit OpenAiBackend(HttpOptions options);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "openai-compat"; }

private:
    HttpOptions options_;
};

// POST {base_url}/api/chat with stream=false; reads message.content.
class OllamaBackend : public ChatBackend {
public:
    explicit OllamaBackend(HttpOptions options);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "ollama"; }

private:
    HttpOptions options_;
};

}  // namespace tcshpt
