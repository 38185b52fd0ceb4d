#include "dialeval/personagen.hpp"

#include <algorithm>
#include <cstdio>
#include <cctype>
#include <fstream>
#include <limits>
#include <regex>
#include <set>

#include "dialeval/csv.hpp"
#include "jsonl.hpp"

namespace dialeval {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto &c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '\''; }

int to_int(const std::string &s, const std::string &what) {
    const std::string t = trim(s);
    try {
        std::size_t used = 0;
        int v = std::stoi(t, &used);
        if (used != t.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception &) {
        throw FormatError("bad integer '" + s + "' in " + what);
    }
}

template <typename T>
const T &pick(const std::vector<T> &v, Rng &rng) {
    return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(v.size()) - 1))];
}

template <typename T>
void shuffle(std::vector<T> &v, Rng &rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(i) - 1));
        std::swap(v[i - 1], v[j]);
    }
}

std::vector<csv::Row> body_rows(const std::filesystem::path &p, std::initializer_list<std::string_view> cols,
                                std::vector<std::size_t> &idx) {
    auto rows = csv::read_file(p);
    if (rows.empty()) throw FormatError(p.string() + ": missing header row");
    idx.clear();
    for (auto c : cols) idx.push_back(csv::column(rows.front(), c));
    rows.erase(rows.begin());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() < rows.front().size() && rows[i].size() <= *std::max_element(idx.begin(), idx.end()))
            throw FormatError(p.string() + ": short row", i + 2);
    }
    return rows;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace

int uniform_int(Rng &rng, int lo, int hi) {
    if (hi < lo) throw std::invalid_argument("uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(static_cast<std::int64_t>(hi) - lo) + 1;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<int>(static_cast<std::int64_t>(lo) + static_cast<std::int64_t>(x % span));
}

std::vector<std::string> FpiRecord::sentences() const {
    std::string r = trim(family);
    if (r.empty() || r.back() != '.') r.push_back('.');
    return {"My name is " + name + ".", "I'm " + std::to_string(age) + " years old.", r};
}

std::string FpiRecord::render() const {
    auto s = sentences();
    return s[0] + " " + s[1] + " " + s[2];
}

int assign_age(const HeadPersonaEntry &h, Rng &rng) {
    if (h.start_age <= 0 || h.start_age > h.end_age)
        throw ValidationError("head '" + h.head + "' has invalid age window");
    return uniform_int(rng, h.start_age, h.end_age);
}

int generation_for_age(int age, const std::vector<NameTableEntry> &table) {
    int best = -1;
    for (const auto &e : table)
        if (e.generation_age <= age && e.generation_age > best) best = e.generation_age;
    if (best < 0) throw ValidationError("no name generation at or below age " + std::to_string(age));
    return best;
}

std::string pick_name(Gender g, int age, const std::vector<NameTableEntry> &table, Rng &rng) {
    const int gen = generation_for_age(age, table);
    std::vector<const NameTableEntry *> rows;
    for (const auto &e : table)
        if (e.gender == g && e.generation_age == gen) rows.push_back(&e);
    if (rows.empty())
        throw ValidationError("no " + to_string(g) + " names for generation " + std::to_string(gen) + " (age " +
                              std::to_string(age) + ")");
    return pick(rows, rng)->name;
}

std::string pick_family_info(int age, const std::vector<FamilyInfoEntry> &table, Rng &rng) {
    std::vector<const FamilyInfoEntry *> rows;
    for (const auto &e : table)
        if (e.start_age <= age && age <= e.end_age) rows.push_back(&e);
    if (rows.empty()) throw ValidationError("no family information eligible for age " + std::to_string(age));
    std::string s = pick(rows, rng)->sentence;
    if (auto pos = s.find("<n>"); pos != std::string::npos) s.replace(pos, 3, std::to_string(uniform_int(rng, 1, 3)));
    return s;
}

PersonaProfile compose_persona(const FpiRecord &fpi, const PersonaProfile &p1, const PersonaProfile &p2, Rng &rng) {
    if (p1.persona_id == p2.persona_id)
        throw ValidationError("compose_persona needs two distinct profiles, got '" + p1.persona_id + "' twice");
    auto a = p1.sentences;
    auto b = p2.sentences;
    shuffle(a, rng);
    shuffle(b, rng);

    PersonaProfile out;
    out.persona_id = p1.persona_id + "+" + p2.persona_id;
    out.hidden_gender = fpi.gender;
    std::set<std::string> seen;
    auto add = [&](const std::string &s) {
        if (seen.insert(s).second) out.sentences.push_back(s);
    };
    for (const auto &s : fpi.sentences()) add(s);
    for (std::size_t i = 0; i < std::max(a.size(), b.size()); ++i) {
        if (i < a.size()) add(a[i]);
        if (i < b.size()) add(b[i]);
    }
    return out;
}

std::vector<ContradictionFlag> detect_contradictions(const PersonaProfile &p, int age, const ContradictionConfig &cfg) {
    static const std::regex own_age(R"(^\s*i'?m\s+(\d+)\s+years?\s+old\.?\s*$)", std::regex::icase);
    static const std::regex claim(R"(\b(?:for\s+(\d+)\s+years?\b|(\d+)\s+years?\s+old\b))", std::regex::icase);

    std::vector<ContradictionFlag> flags;
    for (const auto &s : p.sentences) {
        std::smatch m;
        if (std::regex_match(s, m, own_age) && std::stoi(m[1].str()) == age) continue;
        for (auto it = std::sregex_iterator(s.begin(), s.end(), claim); it != std::sregex_iterator(); ++it) {
            const auto &g = (*it)[1].matched ? (*it)[1] : (*it)[2];
            const long n = std::stol(g.str());
            if (age - n < cfg.min_gap_years) {
                flags.push_back({s, "numeric claim of " + std::to_string(n) + " years leaves " +
                                        std::to_string(age - n) + " < " + std::to_string(cfg.min_gap_years) +
                                        " years at age " + std::to_string(age)});
            }
        }
    }

    auto contains_word = [](const std::string &hay, const std::string &needle) {
        const std::string h = lower(hay), n = lower(needle);
        for (std::size_t pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + 1)) {
            bool left = pos == 0 || !is_word_char(h[pos - 1]);
            bool right = pos + n.size() == h.size() || !is_word_char(h[pos + n.size()]);
            if (left && right) return true;
        }
        return false;
    };
    for (const auto &rule : cfg.keyword_pairs) {
        const std::string *first = nullptr;
        for (const auto &s : p.sentences)
            if (contains_word(s, rule.first)) {
                first = &s;
                break;
            }
        if (!first) continue;
        for (const auto &s : p.sentences) {
            if (&s != first && contains_word(s, rule.second)) {
                flags.push_back({s, "keyword conflict '" + rule.first + "' vs '" + rule.second + "' with \"" +
                                        *first + "\""});
                break;
            }
        }
    }
    return flags;
}

std::string neutralize_gendered_terms(const std::string &s, const GenderMap &map) {
    auto terms = map.terms;
    std::stable_sort(terms.begin(), terms.end(),
                     [](const auto &x, const auto &y) { return x.first.size() > y.first.size(); });
    const std::string ls = lower(s);

    std::string out;
    std::size_t i = 0;
    while (i < s.size()) {
        bool replaced = false;
        if (i == 0 || !is_word_char(s[i - 1])) {
            for (const auto &[from, to] : terms) {
                if (from.empty() || ls.compare(i, from.size(), lower(from)) != 0) continue;
                const std::size_t end = i + from.size();
                if (end < s.size() && is_word_char(s[end])) continue;
                const std::string_view matched(s.data() + i, from.size());
                std::string rep = to;
                const bool has_alpha = std::any_of(matched.begin(), matched.end(),
                                                   [](unsigned char c) { return std::isalpha(c); });
                const bool all_upper = has_alpha && matched.size() > 1 &&
                                       std::none_of(matched.begin(), matched.end(),
                                                    [](unsigned char c) { return std::islower(c); });
                // "Police Man" -> "Police Officer"
                bool title = std::isupper(static_cast<unsigned char>(matched.front())) &&
                             matched.find(' ') != std::string_view::npos;
                for (std::size_t k = 1; title && k < matched.size(); ++k)
                    if (matched[k - 1] == ' ' && !std::isupper(static_cast<unsigned char>(matched[k]))) title = false;
                if (all_upper) {
                    for (auto &c : rep) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
                } else if (title) {
                    for (std::size_t k = 0; k < rep.size(); ++k)
                        if (k == 0 || rep[k - 1] == ' ')
                            rep[k] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[k])));
                } else if (std::isupper(static_cast<unsigned char>(matched.front())) && !rep.empty()) {
                    rep[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(rep[0])));
                }
                out += rep;
                i = end;
                replaced = true;
                break;
            }
        }
        if (!replaced) out.push_back(s[i++]);
    }
    return out;
}

bool is_blocklisted(const std::string &head, const std::vector<std::string> &blocklist) {
    const std::string h = lower(head);
    for (const auto &term : blocklist) {
        const std::string t = lower(trim(term));
        if (t.empty()) continue;
        for (std::size_t pos = h.find(t); pos != std::string::npos; pos = h.find(t, pos + 1)) {
            bool left = pos == 0 || !is_word_char(h[pos - 1]);
            bool right = pos + t.size() == h.size() || !is_word_char(h[pos + t.size()]);
            if (left && right) return true;
        }
    }
    return false;
}

PersonaTables default_tables() {
    PersonaTables t;
    t.heads = {
        {"i am a pastry chef", 20, 50},
        {"i am a nurse", 20, 50},
        {"i am a musician who love singing", 20, 50},
        {"i am a marathon runner", 20, 50},
        {"i am a housekeeper", 20, 50},
        {"i am a hockey player who am a star athlete", 20, 40},
        {"i am a high school athlete who am a star athlete", 15, 18},
        {"i am a prosecutor who become a lawyer", 25, 50},
    };
    auto add_names = [&](int decade, int gen, std::initializer_list<const char *> male,
                         std::initializer_list<const char *> female) {
        for (auto n : male) t.names.push_back({decade, gen, Gender::male, n});
        for (auto n : female) t.names.push_back({decade, gen, Gender::female, n});
    };
    add_names(2018, 0, {"Liam", "Noah", "William"}, {"Emma", "Olivia", "Ava"});
    add_names(2010, 10, {"Jacob", "Ethan", "Michael"}, {"Isabella", "Sophia", "Emma"});
    add_names(1970, 50, {"Michael", "James", "David"}, {"Jennifer", "Lisa", "Kimberly"});
    t.family = {
        {"I have a brother.", 20, 50},
        {"I have a dog.", 20, 50},
        {"I recently got a goldfish.", 20, 50},
        {"My brother lives in the USA.", 20, 50},
        {"I recently started living with my brother.", 20, 50},
        {"I share a room with a friend.", 20, 50},
        {"I have <n> sons.", 20, 50},
        {"My son was recently born.", 20, 40},
    };
    t.blocklist = {"forger", "dishonest person"};
    t.gender_map.terms = {{"police man", "police officer"}, {"policeman", "police officer"},
                          {"policewoman", "police officer"}, {"fireman", "firefighter"},
                          {"mailman", "mail carrier"},      {"salesman", "salesperson"},
                          {"businessman", "businessperson"}, {"chairman", "chairperson"}};
    return t;
}

std::vector<HeadPersonaEntry> load_heads_csv(const std::filesystem::path &p) {
    std::vector<std::size_t> c;
    std::vector<HeadPersonaEntry> out;
    for (const auto &r : body_rows(p, {"head", "start_age", "end_age"}, c)) {
        HeadPersonaEntry e{trim(r[c[0]]), to_int(r[c[1]], p.string()), to_int(r[c[2]], p.string())};
        if (e.start_age <= 0 || e.start_age > e.end_age)
            throw ValidationError(p.string() + ": head '" + e.head + "' needs 0 < start_age <= end_age");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<NameTableEntry> load_names_csv(const std::filesystem::path &p) {
    std::vector<std::size_t> c;
    std::vector<NameTableEntry> out;
    for (const auto &r : body_rows(p, {"decade", "generation", "gender", "name"}, c))
        out.push_back({to_int(r[c[0]], p.string()), to_int(r[c[1]], p.string()), gender_from_string(lower(trim(r[c[2]]))),
                       trim(r[c[3]])});
    return out;
}

std::vector<FamilyInfoEntry> load_family_csv(const std::filesystem::path &p) {
    std::vector<std::size_t> c;
    std::vector<FamilyInfoEntry> out;
    for (const auto &r : body_rows(p, {"sentence", "start_age", "end_age"}, c)) {
        FamilyInfoEntry e{trim(r[c[0]]), to_int(r[c[1]], p.string()), to_int(r[c[2]], p.string())};
        if (e.start_age > e.end_age) throw ValidationError(p.string() + ": bad age window for '" + e.sentence + "'");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::string> load_blocklist(const std::filesystem::path &p) {
    std::ifstream is(p);
    if (!is) throw IoError("cannot open " + p.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        auto t = trim(line);
        if (!t.empty() && t.front() != '#') out.push_back(std::move(t));
    }
    return out;
}

GenderMap load_gender_map_csv(const std::filesystem::path &p) {
    std::vector<std::size_t> c;
    GenderMap m;
    for (const auto &r : body_rows(p, {"from", "to"}, c)) m.terms.emplace_back(trim(r[c[0]]), trim(r[c[1]]));
    return m;
}

std::vector<SourceProfile> load_source_profiles(const std::filesystem::path &p) {
    std::vector<SourceProfile> out;
    detail::for_each_json_line(p, [&](const nlohmann::json &j, std::size_t line) {
        try {
            SourceProfile sp;
            sp.persona_id = j.at("persona_id").get<std::string>();
            sp.head = j.at("head").get<std::string>();
            if (j.contains("sentences")) sp.sentences = j.at("sentences").get<std::vector<std::string>>();
            if (j.contains("aspects"))
                sp.aspects = j.at("aspects").get<std::map<std::string, std::vector<std::string>>>();
            if (sp.sentences.empty() && sp.aspects.empty())
                throw ValidationError("profile '" + sp.persona_id + "' has no sentences");
            out.push_back(std::move(sp));
        } catch (const nlohmann::json::exception &e) {
            throw FormatError(e.what(), line);
        }
    });
    return out;
}

GenerationResult generate_personas(const PersonaTables &tables, const std::vector<SourceProfile> &pool,
                                   const GenerationOptions &opts, std::uint64_t seed) {
    GenerationResult res;
    struct Candidate {
        const SourceProfile *src;
        HeadPersonaEntry window;
    };
    std::vector<Candidate> eligible;
    for (const auto &sp : pool) {
        if (is_blocklisted(sp.head, tables.blocklist)) {
            res.log.push_back("skipped blocklisted head: " + sp.head + " (" + sp.persona_id + ")");
            continue;
        }
        auto it = std::find_if(tables.heads.begin(), tables.heads.end(),
                               [&](const HeadPersonaEntry &h) { return lower(trim(h.head)) == lower(trim(sp.head)); });
        if (it == tables.heads.end()) {
            res.log.push_back("skipped head without age window: " + sp.head + " (" + sp.persona_id + ")");
            continue;
        }
        eligible.push_back({&sp, *it});
    }
    if (eligible.size() < 2) throw ValidationError("need at least two usable source profiles to compose personas");

    std::set<std::string> infeasible_logged;
    auto materialize = [&](const SourceProfile &sp, Rng &rng) {
        PersonaProfile p;
        p.persona_id = sp.persona_id;
        p.sentences = sp.sentences;
        for (const auto &[aspect, items] : sp.aspects) {
            auto pool_items = items;
            shuffle(pool_items, rng);
            const auto k = std::min<std::size_t>(pool_items.size(), static_cast<std::size_t>(opts.items_per_aspect));
            p.sentences.insert(p.sentences.end(), pool_items.begin(), pool_items.begin() + static_cast<std::ptrdiff_t>(k));
        }
        for (auto &s : p.sentences) s = neutralize_gendered_terms(s, tables.gender_map);
        return p;
    };

    for (int i = 0; i < opts.count; ++i) {
        Rng rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i))));
        bool done = false;
        for (int attempt = 0; attempt < 100 && !done; ++attempt) {
            const auto &first = pick(eligible, rng);
            FpiRecord fpi;
            fpi.gender = uniform_int(rng, 0, 1) == 0 ? Gender::male : Gender::female;
            fpi.age = assign_age(first.window, rng);
            try {
                fpi.name = pick_name(fpi.gender, fpi.age, tables.names, rng);
                fpi.family = pick_family_info(fpi.age, tables.family, rng);
            } catch (const ValidationError &e) {
                if (infeasible_logged.insert(first.src->head).second)
                    res.log.push_back("redrawing: head '" + first.src->head + "' hit " + e.what());
                continue;
            }
            std::vector<const Candidate *> partners, fallback;
            for (const auto &c : eligible) {
                if (c.src->persona_id == first.src->persona_id) continue;
                fallback.push_back(&c);
                if (c.window.start_age <= fpi.age && fpi.age <= c.window.end_age) partners.push_back(&c);
            }
            if (fallback.empty()) throw ValidationError("no second profile distinct from '" + first.src->persona_id + "'");
            if (partners.empty()) {
                res.log.push_back("persona " + std::to_string(i) + ": no partner head covers age " +
                                  std::to_string(fpi.age) + ", using any profile");
                partners = fallback;
            }
            const auto &second = *pick(partners, rng);
            auto p1 = materialize(*first.src, rng);
            auto p2 = materialize(*second.src, rng);
            GeneratedPersona g;
            g.profile = compose_persona(fpi, p1, p2, rng);
            char id[32];
            std::snprintf(id, sizeof id, "persona-%05d", i);
            g.profile.persona_id = id;
            g.fpi = fpi;
            g.head = first.src->head;
            g.flags = detect_contradictions(g.profile, fpi.age, opts.contradictions);
            res.personas.push_back(std::move(g));
            done = true;
        }
        if (!done)
            throw ValidationError("tables cannot produce a valid FPI for persona " + std::to_string(i) +
                                  " after 100 draws");
    }
    return res;
}

} // namespace dialeval
