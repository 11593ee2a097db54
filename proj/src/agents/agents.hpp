#pragma once

#include <optional>
#include <string>
#include <vector>

#include "backend/chat.hpp"
#include "core/types.hpp"
#include "core/validate.hpp"
#include "tcs/report.hpp"

namespace tcshpt {

struct PromptPair {
    std::string system;
    std::string user;

    bool operator==(const PromptPair&) const = default;
};

// The analysis agent's six-part answer. `raw` keeps the reply verbatim even
// when section extraction fails, so it can still flow into the next prompt.
struct AnalysisReport {
    std::string problem_diagnosis;
    std::string impact_assessment;
    std::string primary_action;
    std::string specific_recommendation;
    std::string reasoning;
    std::string expected_outcome;
    std::string raw;
    bool structured = false;  // true iff all six sections were found
};

struct Proposal {
    std::string reasoning;
    Configuration config;  // normalized via validate_config
    std::vector<Warning> warnings;
};

// Deterministic builders. `report` is null on the first iteration, before
// any trial exists; the performance block then reads "no experiments yet".
PromptPair build_optimizer_prompt(const StateReport* report,
                                  const AnalysisReport& analysis,
                                  const SearchSpace& space, const Goal& goal);

PromptPair build_analysis_prompts(const StateReport& report,
                                  const SearchSpace& space, const Goal& goal);

// Ablation variant: embeds `context` (raw serialized trial records) where
// the rendered report would normally go.
PromptPair build_analysis_prompts_raw(const std::string& context,
                                      const SearchSpace& space,
                                      const Goal& goal);

// Synthetic analysis used before the first trial: recommends each
// optimizable parameter's range midpoint. No model call involved.
AnalysisReport bootstrap_analysis(const SearchSpace& space, const Goal& goal);

// Extracts reasoning plus the last `hyperparameters:` line and validates
// the assignments. Throws Error(kParseFailure) when no usable line exists;
// validation errors (kUnknownParameter, kInvalidChoice, kMalformedValue)
// propagate. `last` supplies values for parameters the line omits.
Proposal parse_optimizer_response(const std::string& text,
                                  const SearchSpace& space,
                                  const Configuration* last = nullptr);

// Lenient extraction of the six named sections; never throws.
AnalysisReport parse_analysis_response(const std::string& text);

// Canonical "Header: content" rendering; the inverse of
// parse_analysis_response for structured reports.
std::string render_analysis_report(const AnalysisReport& report);

// "hyperparameters: name=value, ..." covering every assignment, parseable
// by parse_optimizer_response.
std::string render_hyperparameters_line(const Configuration& config,
                                        const SearchSpace& space);

// Instruction appended to the user prompt after an unusable reply.
std::string corrective_instruction(const std::string& error);

// Sends the identical prompt n times; entry i holds the value extracted for
// `param` from attempt i, or nothing when the reply was unusable or the
// backend call failed. Never aborts the batch.
std::vector<std::optional<ParamValue>> probe_variability(
    ChatBackend& backend, const PromptPair& prompt, int n,
    const ParamDef& param, ChatRequest base = {});

}  // namespace tcshpt
