#include "backend/scripted.hpp"

#include "core/error.hpp"

namespace tcshpt {

const char* to_string(Role r) {
    switch (r) {
        case Role::kSystem: return "system";
        case Role::kUser: return "user";
        case Role::kAssistant: return "assistant";
    }
    return "user";
}

ScriptedBackend::ScriptedBackend(std::vector<std::string> responses)
    : responses_(responses.begin(), responses.end()) {}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
    std::lock_guard lock(mutex_);
    if (responses_.empty()) {
        throw Error(Errc::kScriptExhausted, "scripted response queue is empty");
    }
    ChatResponse response;
    response.content = std::move(responses_.front());
    responses_.pop_front();
    response.model = request.model;
    return response;
}

size_t ScriptedBackend::remaining() const {
    std::lock_guard lock(mutex_);
    return responses_.size();
}

PolicyBackend::PolicyBackend(std::string policy_name, ResponsePolicy policy)
    : policy_name_(std::move(policy_name)), policy_(std::move(policy)) {}

ChatResponse PolicyBackend::complete(const ChatRequest& request) {
    const std::string* user = nullptr;
    for (const auto& m : request.messages) {
        if (m.role == Role::kUser) user = &m.content;
    }
    if (!user) {
        throw Error(Errc::kEmptyResponse, "request carries no user message");
    }
    ChatResponse response;
    response.content = policy_(*user);
    response.model = request.model;
    return response;
}

}  // namespace tcshpt
