#include "dialeval/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <optional>

#include "dialeval/error.hpp"

namespace dialeval {

namespace {

// Slots: {history} {reference} {fact} {response}

constexpr std::string_view kOriginalSimple = R"(### Context:
{history}

### Response:
{response}

### Instruction:
Rate the context relevance, specificity, interestingness, understandability, and overall quality of the response on a scale of 1 to 5 and just output the corresponding ratings.

### Output Format:
relevance - x
specificity - x
interestingness - x
understandability - x
overall - x

### Your Response:
)";

constexpr std::string_view kCpdsSimpleRef = R"(### Context:
{history}

### Reference response:
{reference}

### Response:
{response}

### Instruction:
Rate the humanness, fluency, coherency, consistency, engagingness, and overall quality of the response of the context on a scale of 1 to 5 and output the corresponding evaluation results.

### Output Format:
humanness - x
fluency - x
coherency - x
consistency - x
engagingness - x
overall - x

### Your Response:
)";

constexpr std::string_view kCpdsSimpleNoRef = R"(### Context:
{history}

### Response:
{response}

### Instruction:
Rate the humanness, fluency, coherency, consistency, engagingness, and overall quality of the response of the context on a scale of 1 to 5 and output the corresponding evaluation results.

### Output Format:
humanness - x
fluency - x
coherency - x
consistency - x
engagingness - x
overall - x

### Your Response:
)";

constexpr std::string_view kOriginalDetail = R"(You will be given a conversation between two individuals.
You will then be given one potential response for the next turn in the conversation.
The response concerns an interesting fact, which will be provided as well.
Your task is to rate the responses on one metric.
Please make sure you read and understand these instructions carefully.
Please keep this document open while reviewing, and refer to it as needed.

Evaluation Crieteria:
Engagingness (1-3) Is the response dull/interesting?
- A score of 1 (dull) means that the response is generic and dull.
- A score of 2 (somewhat interesting) means the response is somewhat interesting and could engage you in the conversation (e.g., an opinion, thought)
- A score of 3 (interesting) means the response is very interesting or presents an interesting fact

Evaluation Steps:
1. Read the conversation, the corresponding fact and the response carefully.
2. Rate the response on a scale of 1-3 for engagingness, according to the criteria above.
3. Provide a brief explanation for your rating, referring to specific aspects of the response and the conversation.

Example:
Conversation History:
{history}

Corresponding Fact:
{fact}
Response:
{response}

Evaluation Form (scores ONLY):
- Engagingness:
)";

constexpr std::string_view kCpdsDetailRef = R"(### Instructions:
You will be given a conversation between two individuals.
You will then be given one possible response for the next turn of the conversation.
Your task is to rate the response based on one metric.
Please make sure you read and understand these instructions carefully.
Please keep this document open while reviewing, and refer to it as needed.

### Evaluation Criteria:
Humanness (1-5) Is the response human-like or not?
- A score of 1 (very bad) means that the response is incoherent and the conversation does not make sense.
- A score of 2 (relatively bad) means that the response makes sense as a conversation, but there are many bad points.
- A score of 3 (neither) means that the response is neither good nor bad.
- A score of 4 (fair enough) means that the response feels a little human-like.
- A score of 5 (very good) means the response feels like you are talking to an actual human.

### Evaluation Steps:
1. Read the conversation, the corresponding reference response, the corresponding fact and the response carefully.
2. Rate the response on a scale of 1-5 for humanness, according to the criteria above.
3. Provide a brief explanation for your rating, referring to specific aspects of the response and the conversation.

### Conversation History:
{history}

### Corresponding Reference Response:
{reference}

### Corresponding Fact:
{fact}

### Response:
{response}

### Evaluation Form (scores ONLY):
- Humanness:
)";

constexpr std::string_view kCpdsDetailNoRef = R"(### Instructions:
You will be given a conversation between two individuals.
You will then be given one possible response for the next turn of the conversation.
Your task is to rate the possible response based on one metric.
Please make sure you read and understand these instructions carefully.
Please keep this document open while reviewing, and refer to it as needed.

### Evaluation Criteria:
Humanness (1-5) Is the response human-like or not?
- A score of 1 (very bad) means that the response is incoherent and the conversation does not make sense.
- A score of 2 (relatively bad) means that the response makes sense as a conversation, but there are many bad points.
- A score of 3 (neither) means that the response is neither good nor bad.
- A score of 4 (fair enough) means that the response feels a little human-like.
- A score of 5 (very good) means the response feels like you are talking to an actual human.

### Evaluation Steps:
1. Read the conversation, the corresponding fact and the response carefully.
2. Rate the response on a scale of 1-5 for humanness, according to the criteria above.
3. Provide a brief explanation for your rating, referring to specific aspects of the response and the conversation.

### Conversation History:
{history}

### Corresponding Fact:
{fact}

### Response:
{response}

### Evaluation Form (scores ONLY):
- Humanness:

)";

// {turn_count} {turn_scores} {responses}
constexpr std::string_view kDialogueStep2 = R"(### Instructions:
Your task is to make an overall evaluation of multiple responses from a dialogue model by checking if the response is human-like or not. You are to make 2 evaluations before giving a final evaluation as the "Final Score."
There will be {turn_count} turns from a dialogue. Each turn in the dialogue has already been rated on a scale of 1-5 and have been given a "Dialogue Turn Score."
Please follow the "Evaluation Steps" step by step and output the "Final score" at the end.
Please make sure you read and understand these instructions carefully.
Please keep this document open while reviewing, and refer to it as needed.
The output should follow the Evaluation Form.
No reason output is required. Your output should follow the "Evaluation Form."

### Evaluation Steps:
1.Review the "Dialogue Turn Scores" to see the ratings for each turn.
2.Evaluate the dialogue as a whole based on the scores of each turn, and give an "Overall Dialogue Turn Score."
3.Review the multiple responses from the dialogue shown in "Responses" and read the "Dialogue Interaction Evaluation Criteria."
4.Evaluate the multiple responses in "Responses" and give a "Dialogue Interaction Score" based on the "Dialogue Interaction Evaluation Criteria."
5.Finally, give a "Final Score" with a score between 1-5, based on the below conditions.
If the "Overall Dialogue Score" is less than 4: you are to take into account both the scores you have given as the "Overall Dialogue Turn Score" and the "Dialogue Interaction Score" to determine the "Final Score."
If the "Overall Dialogue Score" is higher than 4: you are to disregard the "Dialogue Interaction Score" and only look at the "Overall Dialogue Score" to determine the "Final Score."
There is one exception. If the "Overall Dialogue Score" is 4 or higher but the "Dialogue Interaction Score" was given a low score due to the inordinate length of the response, you are to take into account both the scores you have given as the "Overall Dialogue Turn Score" and the "Dialogue Interaction Score" to determine the "Final Score."
6.The output should include 3 scores, the "Overall Dialogue Turn Score," the "Dialogue Interaction Score," and the "Final Score."

### Dialogue Turn Scores:
{turn_scores}

### Dialogue Interaction Evaluation Criteria:
Check all turns in the "Responses" to see if there are any features that are non human-like. The "Dialogue Interaction Score" should be low if it includes features such as, distinctly impersonal (i.e., the response has excessive explanations or is inordinately long), or has dull conversation features (i.e., sounds superficial, always responding in a patterned way). You are also to check the number of words in each turn. If a response consists of more than twenty words, please consider the response is too long. Please evaluate responses as a while and give a score between 1-5 as the "Dialogue Interaction Evaluation Score." You may use decimal points in your scores, if necessary, such as a score of 3.5. The approximate criteria are as follows.
score 1 : Very bad : all responses have similar patterns and/or some of the responses are too long
score 2 : Relatively bad
score 3 : Neither bad nor good
score 4 : Fair enough
score 5 : Very good : When comparing the multiple turns, the sentences vary in length and semantic content, and uses a wide variety of vocabulary

### Responses:
{responses}

### Evaluation Form:
Overall Dialogue Turn Score - x
Dialogue Interaction Score - x
Final Score - x
)";

constexpr std::pair<PromptVariant, std::string_view> kVariantNames[] = {
    {PromptVariant::original_simple, "original_simple"},
    {PromptVariant::original_detail, "original_detail"},
    {PromptVariant::cpds_s_ref, "cpds_s_ref"},
    {PromptVariant::cpds_s_noref, "cpds_s_noref"},
    {PromptVariant::cpds_d_ref, "cpds_d_ref"},
    {PromptVariant::cpds_d_noref, "cpds_d_noref"},
    {PromptVariant::cpds_dial_step2, "cpds_dial_step2"},
};

std::string_view template_for(PromptVariant v) {
    switch (v) {
    case PromptVariant::original_simple: return kOriginalSimple;
    case PromptVariant::original_detail: return kOriginalDetail;
    case PromptVariant::cpds_s_ref: return kCpdsSimpleRef;
    case PromptVariant::cpds_s_noref: return kCpdsSimpleNoRef;
    case PromptVariant::cpds_d_ref: return kCpdsDetailRef;
    case PromptVariant::cpds_d_noref: return kCpdsDetailNoRef;
    case PromptVariant::cpds_dial_step2: return kDialogueStep2;
    }
    return {};
}

// Single left-to-right pass so slot text that itself contains "{...}" is never re-expanded.
std::string fill(std::string_view tmpl, const std::map<std::string, std::string> &slots) {
    std::string out;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            if (close != std::string_view::npos) {
                auto it = slots.find(std::string(tmpl.substr(i + 1, close - i - 1)));
                if (it != slots.end()) {
                    out += it->second;
                    i = close + 1;
                    continue;
                }
            }
        }
        out.push_back(tmpl[i++]);
    }
    return out;
}

std::string join_lines(const std::vector<std::string> &lines) {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out += lines[i];
    }
    return out;
}

std::string number_word(std::size_t n) {
    static const char *words[] = {"zero",   "one",     "two",      "three",    "four",    "five",    "six",
                                  "seven",  "eight",   "nine",     "ten",      "eleven",  "twelve",  "thirteen",
                                  "fourteen", "fifteen", "sixteen", "seventeen", "eighteen", "nineteen", "twenty"};
    return n <= 20 ? words[n] : std::to_string(n);
}

std::vector<std::string> aspect_labels(PromptVariant v) {
    switch (v) {
    case PromptVariant::original_simple:
        return {"relevance", "specificity", "interestingness", "understandability", "overall"};
    case PromptVariant::cpds_s_ref:
    case PromptVariant::cpds_s_noref:
        return {"humanness", "fluency", "coherency", "consistency", "engagingness", "overall"};
    case PromptVariant::cpds_d_ref:
    case PromptVariant::cpds_d_noref:
        return {"humanness"};
    case PromptVariant::original_detail:
        return {"engagingness"};
    case PromptVariant::cpds_dial_step2:
        break;
    }
    return {};
}

std::string overall_label(PromptVariant v) {
    switch (v) {
    case PromptVariant::cpds_d_ref:
    case PromptVariant::cpds_d_noref: return "humanness";
    case PromptVariant::original_detail: return "engagingness";
    default: return "overall";
    }
}

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

double clamp_count(double x, ScoreRange r, int &clamped) {
    const double y = std::clamp(x, r.lo, r.hi);
    if (y != x) ++clamped;
    return y;
}

} // namespace

std::string to_string(PromptVariant v) {
    for (auto [k, name] : kVariantNames)
        if (k == v) return std::string(name);
    return {};
}

PromptVariant prompt_variant_from_string(std::string_view s) {
    for (auto [k, name] : kVariantNames)
        if (name == s) return k;
    throw ValidationError("unknown prompt variant '" + std::string(s) + "'");
}

const std::vector<PromptVariant> &all_prompt_variants() {
    static const std::vector<PromptVariant> all = [] {
        std::vector<PromptVariant> v;
        for (auto [k, name] : kVariantNames) v.push_back(k);
        return v;
    }();
    return all;
}

bool is_turn_level(PromptVariant v) { return v != PromptVariant::cpds_dial_step2; }

bool needs_reference(PromptVariant v) { return v == PromptVariant::cpds_s_ref || v == PromptVariant::cpds_d_ref; }

ScoreRange verdict_range(PromptVariant v) {
    return v == PromptVariant::original_detail ? ScoreRange{1.0, 3.0} : ScoreRange{1.0, 5.0};
}

std::string build_prompt(PromptVariant v, const EvalInstance &instance) {
    if (!is_turn_level(v)) throw ValidationError("build_prompt: use build_dialogue_prompt for " + to_string(v));
    if (needs_reference(v) && !instance.reference)
        throw ValidationError(to_string(v) + " requires a reference response (dialogue '" + instance.dialogue_id +
                              "', turn " + std::to_string(instance.turn_index) + ")");
    std::vector<std::string> history;
    for (const auto &u : instance.context) history.push_back(u.text);
    return fill(template_for(v), {{"history", join_lines(history)},
                                  {"reference", instance.reference.value_or("")},
                                  {"fact", join_lines(instance.persona_b.sentences)},
                                  {"response", instance.candidate}});
}

std::string build_dialogue_prompt(const std::vector<double> &turn_scores, const std::vector<std::string> &responses) {
    if (turn_scores.size() != responses.size())
        throw ValidationError("dialogue prompt needs one score per response (" + std::to_string(turn_scores.size()) +
                              " scores, " + std::to_string(responses.size()) + " responses)");
    if (responses.empty()) throw ValidationError("dialogue prompt needs at least one turn");
    std::vector<std::string> score_lines, response_lines;
    for (std::size_t k = 0; k < responses.size(); ++k) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.1f", turn_scores[k]);
        score_lines.push_back("Turn_" + std::to_string(k + 1) + " Score - " + buf);
        response_lines.push_back("Turn_" + std::to_string(k + 1) + ": " + responses[k]);
    }
    return fill(kDialogueStep2, {{"turn_count", number_word(responses.size())},
                                 {"turn_scores", join_lines(score_lines)},
                                 {"responses", join_lines(response_lines)}});
}

std::optional<double> extract_labeled_number(std::string_view text, std::string_view label) {
    const std::string hay = lower(text);
    const std::string needle = lower(label);
    std::optional<double> last;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) {
        if (pos > 0 && std::isalnum(static_cast<unsigned char>(hay[pos - 1]))) continue;
        std::size_t i = pos + needle.size();
        if (i < hay.size() && std::isalpha(static_cast<unsigned char>(hay[i]))) continue;
        // separators and markdown decoration between the label and its value
        while (i < hay.size() && std::string_view(" \t*_`:=-[#").find(hay[i]) != std::string_view::npos) ++i;
        // en/em dashes (UTF-8 E2 80 93 / E2 80 94)
        while (i + 2 < hay.size() && static_cast<unsigned char>(hay[i]) == 0xE2 &&
               static_cast<unsigned char>(hay[i + 1]) == 0x80 &&
               (static_cast<unsigned char>(hay[i + 2]) == 0x93 || static_cast<unsigned char>(hay[i + 2]) == 0x94)) {
            i += 3;
            while (i < hay.size() && std::string_view(" \t*_`:=-[").find(hay[i]) != std::string_view::npos) ++i;
        }
        std::size_t j = i;
        while (j < hay.size() && std::isdigit(static_cast<unsigned char>(hay[j]))) ++j;
        if (j == i) continue;
        if (j + 1 < hay.size() && hay[j] == '.' && std::isdigit(static_cast<unsigned char>(hay[j + 1]))) {
            ++j;
            while (j < hay.size() && std::isdigit(static_cast<unsigned char>(hay[j]))) ++j;
        }
        last = std::stod(hay.substr(i, j - i));
    }
    return last;
}

JudgeVerdict parse_verdict(PromptVariant v, std::string_view raw) {
    if (!is_turn_level(v)) throw ValidationError("parse_verdict: use parse_dialogue_verdict for " + to_string(v));
    JudgeVerdict out;
    out.raw = std::string(raw);
    const auto range = verdict_range(v);
    for (const auto &label : aspect_labels(v)) {
        if (auto x = extract_labeled_number(raw, label)) out.per_aspect[label] = clamp_count(*x, range, out.clamped);
    }
    const auto label = overall_label(v);
    auto it = out.per_aspect.find(label);
    if (it == out.per_aspect.end())
        throw ParseFailure(to_string(v) + ": no '" + label + "' score in judge reply");
    out.overall = it->second;
    return out;
}

DialogueVerdict parse_dialogue_verdict(std::string_view raw) {
    DialogueVerdict out;
    out.raw = std::string(raw);
    const ScoreRange range{1.0, 5.0};
    auto need = [&](std::string_view label) {
        auto x = extract_labeled_number(raw, label);
        if (!x) throw ParseFailure("cpds_dial_step2: no '" + std::string(label) + "' in judge reply");
        return clamp_count(*x, range, out.clamped);
    };
    out.overall_turn_score = need("Overall Dialogue Turn Score");
    out.interaction_score = need("Dialogue Interaction Score");
    out.final_score = need("Final Score");
    return out;
}

} // namespace dialeval
