#pragma once

#include <deque>
#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "backend/chat.hpp"

namespace tcshpt {

// Replays a fixed queue of responses. Throws Error(kScriptExhausted) once
// the queue runs dry.
class ScriptedBackend : public ChatBackend {
public:
    explicit ScriptedBackend(std::vector<std::string> responses);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "scripted:queue"; }

    size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::deque<std::string> responses_;
};

// Deterministic function from the latest USER message to a response.
using ResponsePolicy = std::function<std::string(const std::string&)>;

class PolicyBackend : public ChatBackend {
public:
    PolicyBackend(std::string policy_name, ResponsePolicy policy);

    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "scripted:" + policy_name_; }

private:
    std::string policy_name_;
    ResponsePolicy policy_;
};

// Built-in policies:
//   "coordinate-search"  explores unexplored bins parameter by parameter,
//                        then refines around the best value with shrinking
//                        steps and a parabolic vertex estimate.
//   "naive-midpoint"     always proposes every range's midpoint; blind to
//                        history.
// Throws Error(kInvalidExperiment) for unknown names.
ResponsePolicy make_policy(const std::string& name);

}  // namespace tcshpt
