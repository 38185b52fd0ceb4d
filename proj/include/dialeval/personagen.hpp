#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dialeval/corpus.hpp"

namespace dialeval {

/// Single seeded generator threaded through every generation step.
using Rng = std::mt19937_64;

struct HeadPersonaEntry {
    std::string head;
    int start_age = 0;
    int end_age = 0;
};

struct NameTableEntry {
    int decade = 0;
    int generation_age = 0;
    Gender gender = Gender::male;
    std::string name;
};

struct FamilyInfoEntry {
    std::string sentence; // may contain "<n>"
    int start_age = 0;
    int end_age = 0;
};

struct FpiRecord {
    std::string name;
    int age = 0;
    Gender gender = Gender::male; // hidden, never rendered
    std::string family;

    /// The three FPI statements in order: name, age, family.
    std::vector<std::string> sentences() const;
    /// "My name is X. I'm Y years old. R."
    std::string render() const;
};

/// A head persona and its tail statements, already converted to sentences.
struct SourceProfile {
    std::string persona_id;
    std::string head;
    std::vector<std::string> sentences;
    /// Optional per-aspect tails; when present, `items_per_aspect` of each are drawn.
    std::map<std::string, std::vector<std::string>> aspects;
};

struct ContradictionRule {
    std::string first;
    std::string second;
};

struct ContradictionFlag {
    std::string sentence;
    std::string reason;
};

struct GenderMap {
    std::vector<std::pair<std::string, std::string>> terms; // from -> to, whole-word
};

struct PersonaTables {
    std::vector<HeadPersonaEntry> heads;
    std::vector<NameTableEntry> names;
    std::vector<FamilyInfoEntry> family;
    std::vector<std::string> blocklist;
    GenderMap gender_map;
};

// Bounded uniform integer that is stable across standard library implementations.
int uniform_int(Rng &rng, int lo, int hi);

int assign_age(const HeadPersonaEntry &h, Rng &rng);

/// Generation whose bracket contains `age`: the largest generation_age <= age.
int generation_for_age(int age, const std::vector<NameTableEntry> &table);
std::string pick_name(Gender g, int age, const std::vector<NameTableEntry> &table, Rng &rng);
std::string pick_family_info(int age, const std::vector<FamilyInfoEntry> &table, Rng &rng);

PersonaProfile compose_persona(const FpiRecord &fpi, const PersonaProfile &p1, const PersonaProfile &p2, Rng &rng);

struct ContradictionConfig {
    int min_gap_years = 15;
    std::vector<ContradictionRule> keyword_pairs;
};

std::vector<ContradictionFlag> detect_contradictions(const PersonaProfile &p, int age,
                                                     const ContradictionConfig &cfg = {});

std::string neutralize_gendered_terms(const std::string &s, const GenderMap &map);

bool is_blocklisted(const std::string &head, const std::vector<std::string> &blocklist);

/// Defaults: the example rows printed with the original name/family/head tables.
PersonaTables default_tables();

std::vector<HeadPersonaEntry> load_heads_csv(const std::filesystem::path &p);
std::vector<NameTableEntry> load_names_csv(const std::filesystem::path &p);
std::vector<FamilyInfoEntry> load_family_csv(const std::filesystem::path &p);
std::vector<std::string> load_blocklist(const std::filesystem::path &p);
GenderMap load_gender_map_csv(const std::filesystem::path &p);
std::vector<SourceProfile> load_source_profiles(const std::filesystem::path &p);

struct GeneratedPersona {
    PersonaProfile profile;
    FpiRecord fpi;
    std::string head;
    std::vector<ContradictionFlag> flags;
};

struct GenerationOptions {
    int count = 10;
    int items_per_aspect = 1;
    ContradictionConfig contradictions;
};

struct GenerationResult {
    std::vector<GeneratedPersona> personas;
    std::vector<std::string> log; // skipped heads, fallbacks
};

/// Full FPI + two-profile composition pipeline, deterministic given (tables, profiles, seed).
GenerationResult generate_personas(const PersonaTables &tables, const std::vector<SourceProfile> &pool,
                                   const GenerationOptions &opts, std::uint64_t seed);

} // namespace dialeval
