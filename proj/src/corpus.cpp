#include "dialeval/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "jsonl.hpp"

namespace dialeval {

using nlohmann::json;

std::string to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

Gender gender_from_string(std::string_view s) {
    if (s == "male") return Gender::male;
    if (s == "female") return Gender::female;
    throw ValidationError("unknown gender '" + std::string(s) + "'");
}

namespace {

constexpr std::pair<Aspect, std::string_view> kAspectNames[] = {
    {Aspect::fluency, "fluency"},
    {Aspect::coherence, "coherence"},
    {Aspect::consistency, "consistency"},
    {Aspect::engagingness, "engagingness"},
    {Aspect::persona_consistency, "persona_consistency"},
    {Aspect::humanness, "humanness"},
};

bool blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string extras_of(const json &obj, std::initializer_list<const char *> known) {
    json rest = json::object();
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(known.begin(), known.end(), [&](const char *k) { return it.key() == k; }) ==
            known.end())
            rest[it.key()] = it.value();
    }
    return rest.empty() ? std::string{} : rest.dump();
}

void merge_extras(json &obj, const std::string &extra) {
    if (extra.empty()) return;
    json rest = json::parse(extra);
    for (auto it = rest.begin(); it != rest.end(); ++it) {
        if (!obj.contains(it.key())) obj[it.key()] = it.value();
    }
}

template <typename T>
T field(const json &obj, const char *key) {
    if (!obj.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
    return obj.at(key).get<T>();
}

Dialogue dialogue_from_json(const json &j) {
    Dialogue d;
    d.dialogue_id = field<std::string>(j, "dialogue_id");
    d.persona_a.persona_id = d.dialogue_id + ":A";
    d.persona_a.sentences = field<std::vector<std::string>>(j, "persona_a");
    d.persona_b.persona_id = d.dialogue_id + ":B";
    d.persona_b.sentences = field<std::vector<std::string>>(j, "persona_b");
    for (const auto &u : field<json>(j, "utterances")) {
        auto sp = field<std::string>(u, "speaker");
        if (sp != "A" && sp != "B") throw std::invalid_argument("speaker must be \"A\" or \"B\"");
        d.utterances.push_back({sp == "A" ? Speaker::A : Speaker::B, field<std::string>(u, "text")});
    }
    d.extra = extras_of(j, {"dialogue_id", "persona_a", "persona_b", "utterances"});
    return d;
}

SystemRun run_from_json(const json &j) {
    SystemRun r;
    r.system_id = field<std::string>(j, "system_id");
    r.dialogue_id = field<std::string>(j, "dialogue_id");
    r.turn_index = field<int>(j, "turn_index");
    r.response = field<std::string>(j, "response");
    r.extra = extras_of(j, {"system_id", "dialogue_id", "turn_index", "response"});
    return r;
}

AnnotationRecord annotation_from_json(const json &j) {
    AnnotationRecord a;
    a.annotator_id = field<std::string>(j, "annotator_id");
    a.system_id = field<std::string>(j, "system_id");
    a.dialogue_id = field<std::string>(j, "dialogue_id");
    if (j.contains("turn_index") && !j.at("turn_index").is_null()) a.turn_index = j.at("turn_index").get<int>();
    a.score = field<int>(j, "score");
    if (j.contains("aspect_flags") && !j.at("aspect_flags").is_null()) {
        std::set<Aspect> flags;
        for (const auto &f : j.at("aspect_flags")) flags.insert(aspect_from_string(f.get<std::string>()));
        a.aspect_flags = std::move(flags);
    }
    a.extra = extras_of(j, {"annotator_id", "system_id", "dialogue_id", "turn_index", "score", "aspect_flags"});
    return a;
}

template <typename T, typename Parse, typename Check>
std::vector<T> load_jsonl(const std::filesystem::path &path, Parse parse, Check check) {
    std::vector<T> out;
    detail::for_each_json_line(path, [&](const json &j, std::size_t line) {
        T rec;
        try {
            rec = parse(j);
        } catch (const ValidationError &e) {
            throw FormatError(e.what(), line);
        } catch (const json::exception &e) {
            throw FormatError(e.what(), line);
        } catch (const std::invalid_argument &e) {
            throw FormatError(e.what(), line);
        }
        check(rec, line);
        out.push_back(std::move(rec));
    });
    return out;
}

template <typename T>
void save_jsonl(const std::filesystem::path &path, const std::vector<T> &recs) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path.string());
    for (const auto &r : recs) os << to_json_line(r) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

} // namespace

std::string to_string(Aspect a) {
    for (auto [k, name] : kAspectNames)
        if (k == a) return std::string(name);
    return {};
}

Aspect aspect_from_string(std::string_view s) {
    for (auto [k, name] : kAspectNames)
        if (name == s) return k;
    throw ValidationError("unknown aspect flag '" + std::string(s) + "'");
}

int Dialogue::evaluated_turns() const {
    return static_cast<int>(
        std::count_if(utterances.begin(), utterances.end(), [](const Utterance &u) { return u.speaker == Speaker::B; }));
}

void validate(const PersonaProfile &p) {
    if (p.sentences.empty()) throw ValidationError("persona '" + p.persona_id + "' has no sentences");
    for (const auto &s : p.sentences)
        if (blank(s)) throw ValidationError("persona '" + p.persona_id + "' has an empty sentence");
}

void validate(const Dialogue &d, const CorpusOptions &opts) {
    const std::string who = "dialogue '" + d.dialogue_id + "': ";
    try {
        validate(d.persona_a);
        validate(d.persona_b);
    } catch (const ValidationError &e) {
        throw ValidationError(who + e.what());
    }
    if (d.utterances.empty()) throw ValidationError(who + "no utterances");
    for (std::size_t i = 0; i < d.utterances.size(); ++i) {
        const auto expected = i % 2 == 0 ? Speaker::A : Speaker::B;
        if (d.utterances[i].speaker != expected)
            throw ValidationError(who + "speakers do not alternate starting with A (utterance " +
                                  std::to_string(i + 1) + ")");
        if (blank(d.utterances[i].text))
            throw ValidationError(who + "empty utterance " + std::to_string(i + 1));
    }
    const int turns = d.evaluated_turns();
    if (turns < 1) throw ValidationError(who + "no B utterances");
    if (opts.evaluated_turns && turns != *opts.evaluated_turns)
        throw ValidationError(who + "expected " + std::to_string(*opts.evaluated_turns) + " B utterances, found " +
                              std::to_string(turns));
}

void validate(const AnnotationRecord &a) {
    if (a.score < 1 || a.score > 5)
        throw ValidationError("score " + std::to_string(a.score) + " outside [1,5]");
    if (a.turn_index && *a.turn_index < 1) throw ValidationError("turn_index must be >= 1");
    if (a.turn_index && a.aspect_flags) throw ValidationError("aspect_flags only allowed on dialogue-level records");
}

std::vector<Dialogue> load_dialogues(const std::filesystem::path &path, const CorpusOptions &opts) {
    std::set<std::string> seen;
    return load_jsonl<Dialogue>(path, dialogue_from_json, [&](const Dialogue &d, std::size_t line) {
        try {
            validate(d, opts);
        } catch (const ValidationError &e) {
            throw ValidationError("line " + std::to_string(line) + ": " + e.what());
        }
        if (!seen.insert(d.dialogue_id).second)
            throw ValidationError("line " + std::to_string(line) + ": duplicate dialogue_id '" + d.dialogue_id + "'");
    });
}

std::vector<SystemRun> load_system_runs(const std::filesystem::path &path) {
    std::set<std::tuple<std::string, std::string, int>> seen;
    return load_jsonl<SystemRun>(path, run_from_json, [&](const SystemRun &r, std::size_t line) {
        const std::string where = "line " + std::to_string(line) + ": ";
        if (r.turn_index < 1) throw ValidationError(where + "turn_index must be >= 1");
        if (!seen.emplace(r.system_id, r.dialogue_id, r.turn_index).second)
            throw ValidationError(where + "duplicate run (" + r.system_id + ", " + r.dialogue_id + ", " +
                                  std::to_string(r.turn_index) + ")");
    });
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path &path) {
    return load_jsonl<AnnotationRecord>(path, annotation_from_json, [](const AnnotationRecord &a, std::size_t line) {
        try {
            validate(a);
        } catch (const ValidationError &e) {
            throw ValidationError("line " + std::to_string(line) + ": " + e.what());
        }
    });
}

void check_runs_against(const std::vector<SystemRun> &runs, const std::vector<Dialogue> &dialogues) {
    std::map<std::string, int> turns;
    for (const auto &d : dialogues) turns[d.dialogue_id] = d.evaluated_turns();
    for (const auto &r : runs) {
        auto it = turns.find(r.dialogue_id);
        if (it == turns.end())
            throw ValidationError("run of system '" + r.system_id + "' references unknown dialogue '" +
                                  r.dialogue_id + "'");
        if (r.turn_index < 1 || r.turn_index > it->second)
            throw ValidationError("run of system '" + r.system_id + "' on dialogue '" + r.dialogue_id +
                                  "' has turn_index " + std::to_string(r.turn_index) + " outside [1," +
                                  std::to_string(it->second) + "]");
    }
}

std::string to_json_line(const Dialogue &d) {
    json j;
    j["dialogue_id"] = d.dialogue_id;
    j["persona_a"] = d.persona_a.sentences;
    j["persona_b"] = d.persona_b.sentences;
    j["utterances"] = json::array();
    for (const auto &u : d.utterances)
        j["utterances"].push_back({{"speaker", u.speaker == Speaker::A ? "A" : "B"}, {"text", u.text}});
    merge_extras(j, d.extra);
    return j.dump();
}

std::string to_json_line(const SystemRun &r) {
    json j{{"system_id", r.system_id}, {"dialogue_id", r.dialogue_id}, {"turn_index", r.turn_index},
           {"response", r.response}};
    merge_extras(j, r.extra);
    return j.dump();
}

std::string to_json_line(const AnnotationRecord &a) {
    json j{{"annotator_id", a.annotator_id}, {"system_id", a.system_id}, {"dialogue_id", a.dialogue_id},
           {"score", a.score}};
    j["turn_index"] = a.turn_index ? json(*a.turn_index) : json(nullptr);
    if (a.aspect_flags) {
        j["aspect_flags"] = json::array();
        for (auto f : *a.aspect_flags) j["aspect_flags"].push_back(to_string(f));
    } else {
        j["aspect_flags"] = nullptr;
    }
    merge_extras(j, a.extra);
    return j.dump();
}

void save_dialogues(const std::filesystem::path &path, const std::vector<Dialogue> &ds) { save_jsonl(path, ds); }
void save_system_runs(const std::filesystem::path &path, const std::vector<SystemRun> &rs) { save_jsonl(path, rs); }
void save_annotations(const std::filesystem::path &path, const std::vector<AnnotationRecord> &as) {
    save_jsonl(path, as);
}

std::vector<std::string> normalize_text(std::string_view s) {
    std::string buf;
    buf.reserve(s.size());
    for (unsigned char c : s) {
        if (c < 0x80 && std::ispunct(c))
            buf.push_back(' ');
        else if (c < 0x80)
            buf.push_back(static_cast<char>(std::tolower(c)));
        else
            buf.push_back(static_cast<char>(c));
    }
    // Non-ASCII case folding: Latin-1 supplement and basic Greek/Cyrillic capitals in UTF-8.
    std::string folded;
    folded.reserve(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        auto c0 = static_cast<unsigned char>(buf[i]);
        if (i + 1 < buf.size()) {
            auto c1 = static_cast<unsigned char>(buf[i + 1]);
            if (c0 == 0xC3 && c1 >= 0x80 && c1 <= 0x9E && c1 != 0x97) { // À..Þ except ×
                folded.push_back(static_cast<char>(c0));
                folded.push_back(static_cast<char>(c1 + 0x20));
                ++i;
                continue;
            }
            if (c0 == 0xCE && c1 >= 0x91 && c1 <= 0xA9 && c1 != 0xA2) { // Α..Ω
                if (c1 <= 0x9F) {
                    folded.push_back(static_cast<char>(0xCE));
                    folded.push_back(static_cast<char>(c1 + 0x20));
                } else {
                    folded.push_back(static_cast<char>(0xCF));
                    folded.push_back(static_cast<char>(c1 - 0x20));
                }
                ++i;
                continue;
            }
            if (c0 == 0xD0 && c1 >= 0x90 && c1 <= 0xAF) { // А..Я
                if (c1 <= 0x9F) {
                    folded.push_back(static_cast<char>(0xD0));
                    folded.push_back(static_cast<char>(c1 + 0x20));
                } else {
                    folded.push_back(static_cast<char>(0xD1));
                    folded.push_back(static_cast<char>(c1 - 0x20));
                }
                ++i;
                continue;
            }
        }
        folded.push_back(static_cast<char>(c0));
    }

    std::vector<std::string> tokens;
    std::istringstream is(folded);
    std::string tok;
    while (is >> tok) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

std::string join_tokens(const std::vector<std::string> &tokens) {
    std::string out;
    for (const auto &t : tokens) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::vector<EvalInstance> build_eval_instances(const Dialogue &d, const std::vector<SystemRun> &runs) {
    // Position of B's k-th utterance in the gold list.
    std::vector<std::size_t> b_pos;
    for (std::size_t i = 0; i < d.utterances.size(); ++i)
        if (d.utterances[i].speaker == Speaker::B) b_pos.push_back(i);

    std::vector<const SystemRun *> sorted;
    for (const auto &r : runs) {
        if (r.dialogue_id != d.dialogue_id)
            throw ValidationError("run for dialogue '" + r.dialogue_id + "' passed with dialogue '" + d.dialogue_id +
                                  "'");
        if (r.turn_index < 1 || static_cast<std::size_t>(r.turn_index) > b_pos.size())
            throw ValidationError("run turn_index " + std::to_string(r.turn_index) + " does not exist in dialogue '" +
                                  d.dialogue_id + "' (" + std::to_string(b_pos.size()) + " turns)");
        sorted.push_back(&r);
    }
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const SystemRun *a, const SystemRun *b) { return a->turn_index < b->turn_index; });

    std::vector<EvalInstance> out;
    out.reserve(sorted.size());
    for (const SystemRun *r : sorted) {
        const std::size_t pos = b_pos[static_cast<std::size_t>(r->turn_index - 1)];
        EvalInstance inst;
        inst.dialogue_id = d.dialogue_id;
        inst.turn_index = r->turn_index;
        inst.context.assign(d.utterances.begin(), d.utterances.begin() + static_cast<std::ptrdiff_t>(pos));
        inst.reference = d.utterances[pos].text;
        inst.persona_b = d.persona_b;
        inst.candidate = r->response;
        out.push_back(std::move(inst));
    }
    return out;
}

} // namespace dialeval
