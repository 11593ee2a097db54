#pragma once

#include <optional>
#include <string>
#include <vector>

namespace tcshpt {

enum class Role { kSystem, kUser, kAssistant };

const char* to_string(Role r);

struct ChatMessage {
    Role role = Role::kUser;
    std::string content;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;  // non-empty; system first when present
    double temperature = 0.2;
    std::optional<int> max_tokens = 1024;
    double timeout_s = 120.0;
};

struct TokenCounts {
    int prompt = 0;
    int completion = 0;
};

struct ChatResponse {
    std::string content;
    std::string model;
    double latency_s = 0.0;
    std::optional<TokenCounts> token_counts;
};

// Chat-completion transport. Implementations must tolerate concurrent
// complete() calls from independent runs.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;

    // Returns the model's reply. Throws Error with kTimeout, kHttpError,
    // kEmptyResponse, kScriptExhausted, or kBackendUnavailable.
    virtual ChatResponse complete(const ChatRequest& request) = 0;

    // Short identity used in manifests, e.g. "openai", "scripted:queue".
    virtual std::string name() const = 0;
};

}  // namespace tcshpt
