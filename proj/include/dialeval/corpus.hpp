#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dialeval/error.hpp"

namespace dialeval {

enum class Gender { male, female };
enum class Speaker { A, B };

std::string to_string(Gender g);
Gender gender_from_string(std::string_view s);

struct PersonaProfile {
    std::string persona_id;
    std::vector<std::string> sentences;
    std::optional<Gender> hidden_gender;

    bool operator==(const PersonaProfile &) const = default;
};

struct Utterance {
    Speaker speaker;
    std::string text;

    bool operator==(const Utterance &) const = default;
};

struct Dialogue {
    std::string dialogue_id;
    PersonaProfile persona_a;
    PersonaProfile persona_b;
    std::vector<Utterance> utterances;
    std::string extra; // unknown wire fields as a JSON object, re-emitted on save

    /// Number of B utterances, i.e. evaluated turns.
    int evaluated_turns() const;

    bool operator==(const Dialogue &) const = default;
};

struct SystemRun {
    std::string system_id;
    std::string dialogue_id;
    int turn_index = 0; // 1-based over B's utterances
    std::string response;
    std::string extra;

    bool operator==(const SystemRun &) const = default;
};

enum class Aspect { fluency, coherence, consistency, engagingness, persona_consistency, humanness };

std::string to_string(Aspect a);
Aspect aspect_from_string(std::string_view s);

struct AnnotationRecord {
    std::string annotator_id;
    std::string system_id;
    std::string dialogue_id;
    std::optional<int> turn_index; // absent => dialogue-level
    int score = 0;
    std::optional<std::set<Aspect>> aspect_flags;
    std::string extra;

    bool is_dialogue_level() const { return !turn_index.has_value(); }
    bool operator==(const AnnotationRecord &) const = default;
};

struct EvalInstance {
    std::string dialogue_id;
    int turn_index = 0;
    std::vector<Utterance> context;
    std::optional<std::string> reference;
    PersonaProfile persona_b;
    std::string candidate;
};

struct CorpusOptions {
    /// Required number of B utterances per dialogue; nullopt accepts any count >= 1.
    std::optional<int> evaluated_turns = 7;
};

void validate(const PersonaProfile &p);
void validate(const Dialogue &d, const CorpusOptions &opts = {});
void validate(const AnnotationRecord &a);

std::vector<Dialogue> load_dialogues(const std::filesystem::path &path, const CorpusOptions &opts = {});
std::vector<SystemRun> load_system_runs(const std::filesystem::path &path);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path &path);

/// Checks that every run refers to a known dialogue and a turn in range.
void check_runs_against(const std::vector<SystemRun> &runs, const std::vector<Dialogue> &dialogues);

std::string to_json_line(const Dialogue &d);
std::string to_json_line(const SystemRun &r);
std::string to_json_line(const AnnotationRecord &a);

void save_dialogues(const std::filesystem::path &path, const std::vector<Dialogue> &ds);
void save_system_runs(const std::filesystem::path &path, const std::vector<SystemRun> &rs);
void save_annotations(const std::filesystem::path &path, const std::vector<AnnotationRecord> &as);

/// Lowercase, ASCII punctuation to spaces, drop the articles a/an/the, split on whitespace.
std::vector<std::string> normalize_text(std::string_view s);
std::string join_tokens(const std::vector<std::string> &tokens);

/// Teacher-forced instances: the context of turn k is the gold prefix before B's k-th utterance.
std::vector<EvalInstance> build_eval_instances(const Dialogue &d, const std::vector<SystemRun> &runs);

} // namespace dialeval
