#include "backend/http.hpp"

#include <chrono>
#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "core/error.hpp"

namespace tcshpt {
namespace {

using Json = nlohmann::json;

Json messages_json(const ChatRequest& request) {
    Json messages = Json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", to_string(m.role)},
                            {"content", m.content}});
    }
    return messages;
}

struct Extracted {
    std::string content;
    std::optional<TokenCounts> tokens;
};

struct Dialect {
    std::string path;
    Json body;
    Extracted (*extract)(const Json&);
};

Extracted extract_openai(const Json& j) {
    Extracted out;
    if (j.contains("choices") && j["choices"].is_array() &&
        !j["choices"].empty()) {
        const auto& message = j["choices"][0].value("message", Json::object());
        out.content = message.value("content", std::string());
    }
    if (j.contains("usage") && j["usage"].is_object()) {
        TokenCounts t;
        t.prompt = j["usage"].value("prompt_tokens", 0);
        t.completion = j["usage"].value("completion_tokens", 0);
        out.tokens = t;
    }
    return out;
}

Extracted extract_ollama(const Json& j) {
    Extracted out;
    if (j.contains("message") && j["message"].is_object()) {
        out.content = j["message"].value("content", std::string());
    }
    if (j.contains("eval_count")) {
        TokenCounts t;
        t.prompt = j.value("prompt_eval_count", 0);
        t.completion = j.value("eval_count", 0);
        out.tokens = t;
    }
    return out;
}

Dialect openai_dialect(const ChatRequest& request) {
    Json body{{"model", request.model},
              {"messages", messages_json(request)},
              {"temperature", request.temperature}};
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;
    return {"/v1/chat/completions", std::move(body), extract_openai};
}

Dialect ollama_dialect(const ChatRequest& request) {
    Json options{{"temperature", request.temperature}};
    if (request.max_tokens) options["num_predict"] = *request.max_tokens;
    Json body{{"model", request.model},
              {"messages", messages_json(request)},
              {"stream", false},
              {"options", std::move(options)}};
    return {"/api/chat", std::move(body), extract_ollama};
}

// Splits "scheme://host:port/prefix" into the client origin and a path
// prefix prepended to every endpoint.
std::pair<std::string, std::string> split_base_url(const std::string& url) {
    size_t scheme = url.find("://");
    size_t path = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path == std::string::npos) return {url, ""};
    std::string prefix = url.substr(path);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {url.substr(0, path), prefix};
}

ChatResponse attempt_once(const HttpOptions& options,
                          const ChatRequest& request,
                          const Dialect& dialect) {
    auto [origin, prefix] = split_base_url(options.base_url);
    httplib::Client client(origin);
    auto timeout = std::chrono::duration<double>(request.timeout_s);
    auto timeout_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(timeout);
    client.set_connection_timeout(timeout_ms);
    client.set_read_timeout(timeout_ms);
    client.set_write_timeout(timeout_ms);

    httplib::Headers headers;
    if (!options.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options.api_key);
    }

    auto start = std::chrono::steady_clock::now();
    auto result = client.Post(prefix + dialect.path, headers,
                              dialect.body.dump(), "application/json");
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();

    if (!result) {
        if (result.error() == httplib::Error::ConnectionTimeout ||
            elapsed >= request.timeout_s * 0.9) {
            throw Error(Errc::kTimeout,
                        "no response within " +
                            std::to_string(request.timeout_s) + "s");
        }
        throw Error(Errc::kBackendUnavailable,
                    std::string("connection failed: ") +
                        httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        Error e(Errc::kHttpError,
                "http status " + std::to_string(result->status));
        e.set_http_status(result->status);
        throw e;
    }

    Json parsed = Json::parse(result->body, nullptr, /*allow_exceptions=*/false);
    if (parsed.is_discarded()) {
        throw Error(Errc::kEmptyResponse, "response body is not JSON");
    }
    Extracted extracted = dialect.extract(parsed);
    if (extracted.content.empty()) {
        throw Error(Errc::kEmptyResponse, "response carried no content");
    }

    ChatResponse response;
    response.content = std::move(extracted.content);
    response.model = parsed.value("model", request.model);
    response.latency_s = elapsed;
    response.token_counts = extracted.tokens;
    return response;
}

bool transient(const Error& e) {
    if (e.code() == Errc::kBackendUnavailable) return true;
    if (e.code() != Errc::kHttpError) return false;
    int status = e.http_status();
    return status == 429 || status >= 500;
}

ChatResponse complete_with_retries(const HttpOptions& options,
                                   const ChatRequest& request,
                                   const Dialect& dialect) {
    for (int attempt = 0;; ++attempt) {
        try {
            return attempt_once(options, request, dialect);
        } catch (const Error& e) {
            if (!transient(e) || attempt >= options.max_retries) throw;
            double delay = options.backoff_base_s * std::pow(2.0, attempt);
            std::this_thread::sleep_for(std::chrono::duration<double>(delay));
        }
    }
}

}  // namespace

OpenAiBackend::OpenAiBackend(HttpOptions options)
    : options_(std::move(options)) {}

ChatResponse OpenAiBackend::complete(const ChatRequest& request) {
    return complete_with_retries(options_, request, openai_dialect(request));
}

OllamaBackend::OllamaBackend(HttpOptions options)
    : options_(std::move(options)) {}

ChatResponse OllamaBackend::complete(const ChatRequest& request) {
    return complete_with_retries(options_, request, ollama_dialect(request));
}

}  // namespace tcshpt
