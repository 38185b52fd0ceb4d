#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/corpus.hpp"

namespace dialeval {

enum class PromptVariant {
    original_simple,
    original_detail,
    cpds_s_ref,
    cpds_s_noref,
    cpds_d_ref,
    cpds_d_noref,
    cpds_dial_step2,
};

std::string to_string(PromptVariant v);
PromptVariant prompt_variant_from_string(std::string_view s);
const std::vector<PromptVariant> &all_prompt_variants();

bool is_turn_level(PromptVariant v);
bool needs_reference(PromptVariant v);

struct ScoreRange {
    double lo;
    double hi;
};
/// [1,3] for original_detail (its engagingness rubric), [1,5] otherwise.
ScoreRange verdict_range(PromptVariant v);

struct JudgeVerdict {
    std::map<std::string, double> per_aspect;
    double overall = 0.0;
    std::string raw;
    int clamped = 0; // values pulled back into range
};

struct DialogueVerdict {
    double overall_turn_score = 0.0; // intermediate score
    double interaction_score = 0.0;
    double final_score = 0.0;
    std::string raw;
    int clamped = 0;
};

/// Renders the turn-level template for `v`. Throws ValidationError when a *_ref variant has no reference.
std::string build_prompt(PromptVariant v, const EvalInstance &instance);

/// Step-2 dialogue prompt; scores are rendered with one decimal place.
std::string build_dialogue_prompt(const std::vector<double> &turn_scores, const std::vector<std::string> &responses);

/// Last numeric value following `label` (case-insensitive, markdown-tolerant), if any.
std::optional<double> extract_labeled_number(std::string_view text, std::string_view label);

JudgeVerdict parse_verdict(PromptVariant v, std::string_view raw);
DialogueVerdict parse_dialogue_verdict(std::string_view raw);

} // namespace dialeval
