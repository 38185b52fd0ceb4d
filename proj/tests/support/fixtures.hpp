#pragma once

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dialeval/chat_client.hpp"
#include "dialeval/corpus.hpp"
#include "dialeval/error.hpp"

namespace fixtures {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string &tag) {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("dialeval-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    const fs::path &path() const { return path_; }
    fs::path operator/(const std::string &name) const { return path_ / name; }

  private:
    fs::path path_;
};

inline std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const fs::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// Identity pairs: every one has at least four tokens after normalization.
inline std::vector<std::string> identity_sentences() {
    return {
        "I love hiking in the mountains on weekends.",
        "My favorite food is spicy ramen with extra eggs.",
        "Do you have any pets at home right now?",
        "I work as a nurse at the city hospital.",
        "We should grab coffee sometime next week!",
        "The weather has been really nice lately, hasn't it?",
        "I just finished reading a great mystery novel.",
        "My brother lives in the USA with his family.",
        "I have been a pastry chef for ten years.",
        "What kind of music do you like to listen to?",
        "Running a marathon was the hardest thing I've done.",
        "I share a room with a friend from college.",
        "Honestly, I prefer cats over dogs most days.",
        "Our team won the hockey game last night!",
        "I recently got a goldfish named Bubbles.",
        "Can you recommend a good movie to watch tonight?",
        "I argue cases in court almost every single day.",
        "My son was recently born and I am so tired.",
        "I wake up at four every morning to bake bread.",
        "Cooking dinner together is our family tradition.",
    };
}

inline std::vector<std::string> empty_candidate_references() {
    return {"hello", "the cat sat on the mat", "I have a dog.", "what do you do for work?", "x"};
}

// 50 (candidate, reference) pairs: hand cases plus seeded random draws from a small vocabulary
// so that repeats, partial overlaps, stems and disjoint pairs all occur.
inline std::vector<std::pair<std::string, std::string>> metric_pairs() {
    std::vector<std::pair<std::string, std::string>> out = {
        {"the cat sat", "a cat sat down"},
        {"cat", "dog"},
        {"cat", "cat"},
        {"a b c d", "a c b d"},
        {"", "hello"},
        {"hello", ""},
        {"I was running to the store", "she runs to stores"},
        {"the the the the", "the cat"},
        {"dogs dogs dogs bark", "dog barks at dogs"},
        {"He is happy and hopeful", "happiness and hope are good"},
        {"I love my dog, Max!", "I love my dog Max"},
        {"go go go go go", "go"},
        {"we walked walking walks", "walk walked walking"},
        {"relational conditional rational", "relate condition ration"},
        {"x y z", "z y x"},
    };
    const std::vector<std::string> vocab = {"i",      "you",   "love",   "loves",  "loved",  "dog",   "dogs",
                                            "cat",    "cats",  "run",    "running", "runs",  "the",   "a",
                                            "happy",  "happily", "work", "working", "nurse", "bread", "baking",
                                            "bake",   "today", "tomorrow", "friend", "friends", "music", "play"};
    std::mt19937 rng(20240601);
    auto sentence = [&](int lo, int hi) {
        std::uniform_int_distribution<int> len(lo, hi), word(0, int(vocab.size()) - 1);
        std::string s;
        for (int k = len(rng); k > 0; --k) s += (s.empty() ? "" : " ") + vocab[word(rng)];
        return s;
    };
    while (out.size() < 50) out.emplace_back(sentence(1, 12), sentence(1, 12));
    return out;
}

// A corpus of `systems` x `dialogues` x `turns` written as JSONL files.
struct SyntheticCorpus {
    fs::path dialogues, runs, annotations;
    // scripted judge overalls per candidate text; human score per (system, dialogue, turn)
    std::map<std::string, std::vector<double>> overalls;
    std::map<std::string, double> human; // key: s/d/t
    std::map<std::string, std::pair<std::string, std::string>> dialogue_of_candidate;
    std::map<std::string, double> human_dialogue_mean; // key: s/d
};

inline std::string candidate_text(int s, int d, int t) {
    // varying overlap with the gold reply keeps n-gram metrics from being constant
    static const char *tail[] = {"", " answer", " gold answer"};
    return "system " + std::to_string(s) + " says line " + std::to_string(t) + " of dialogue " + std::to_string(d) +
           tail[(s * 7 + t) % 3] + ".";
}

inline SyntheticCorpus write_synthetic_corpus(const fs::path &dir, int systems, int dialogues, int turns) {
    using nlohmann::json;
    SyntheticCorpus c;
    c.dialogues = dir / "dialogues.jsonl";
    c.runs = dir / "runs.jsonl";
    c.annotations = dir / "annotations.jsonl";
    std::ofstream fd(c.dialogues), fr(c.runs), fa(c.annotations);
    for (int d = 0; d < dialogues; ++d) {
        json utt = json::array();
        for (int t = 1; t <= turns; ++t) {
            utt.push_back({{"speaker", "A"}, {"text", "question " + std::to_string(t) + " in dialogue " + std::to_string(d)}});
            utt.push_back({{"speaker", "B"}, {"text", "gold answer " + std::to_string(t) + " in dialogue " + std::to_string(d)}});
        }
        fd << json{{"dialogue_id", "d" + std::to_string(d)},
                   {"persona_a", {"My name is Liam.", "I'm 30 years old.", "I have a dog."}},
                   {"persona_b", {"My name is Emma.", "I'm 40 years old.", "I have a brother."}},
                   {"utterances", utt}}
                  .dump()
           << "\n";
    }
    for (int s = 0; s < systems; ++s) {
        for (int d = 0; d < dialogues; ++d) {
            double sum = 0;
            for (int t = 1; t <= turns; ++t) {
                const std::string sid = "sys" + std::to_string(s), did = "d" + std::to_string(d);
                const std::string cand = candidate_text(s, d, t);
                fr << json{{"system_id", sid}, {"dialogue_id", did}, {"turn_index", t}, {"response", cand}}.dump()
                   << "\n";
                const int h = 1 + (s * 2 + d * 3 + t * 7 + (s * t) % 3 + s * d) % 5;
                std::vector<double> calls = (h == 1 || h == 5) ? std::vector<double>{double(h), double(h), double(h)}
                                                                : std::vector<double>{h - 1.0, double(h), h + 1.0};
                c.overalls[cand] = calls;
                c.dialogue_of_candidate[cand] = {sid, did};
                c.human[sid + "/" + did + "/" + std::to_string(t)] = h;
                sum += h;
                for (const char *ann : {"ann1", "ann2"})
                    fa << json{{"annotator_id", ann}, {"system_id", sid},      {"dialogue_id", did},
                               {"turn_index", t},     {"score", h},           {"aspect_flags", nullptr}}
                              .dump()
                       << "\n";
            }
            c.human_dialogue_mean["sys" + std::to_string(s) + "/d" + std::to_string(d)] = sum / turns;
        }
    }
    return c;
}

// Scripted judge: the k-th request for a given prompt gets the k-th scripted overall of the
// candidate embedded in that prompt; step-2 prompts get a triple keyed by dialogue.
class ScriptedClient : public dialeval::ChatClient {
  public:
    explicit ScriptedClient(const SyntheticCorpus &c) : corpus_(c) {}

    std::string complete(const dialeval::ChatRequest &req) override {
        ++calls_;
        const auto &p = req.prompt;
        if (p.find("### Dialogue Turn Scores:") != std::string::npos) {
            for (const auto &[cand, sd] : corpus_.dialogue_of_candidate) {
                if (p.find("Turn_1: " + cand) == std::string::npos) continue;
                const double m = corpus_.human_dialogue_mean.at(sd.first + "/" + sd.second);
                char buf[256];
                std::snprintf(buf, sizeof buf,
                              "Overall Dialogue Turn Score - %.17g\nDialogue Interaction Score - 2\nFinal Score - %.17g",
                              m, m);
                return buf;
            }
            throw dialeval::TransportError("unscripted dialogue prompt", false);
        }
        const auto at = p.rfind("### Response:\n");
        if (at == std::string::npos) throw dialeval::TransportError("unscripted prompt", false);
        const auto start = at + 14;
        const std::string cand = p.substr(start, p.find('\n', start) - start);
        int k;
        {
            std::lock_guard lock(mu_);
            k = seen_[p]++;
        }
        const auto &calls = corpus_.overalls.at(cand);
        char buf[64];
        std::snprintf(buf, sizeof buf, "- Humanness: %g", calls[std::size_t(k) % calls.size()]);
        return buf;
    }

    long calls() const { return calls_; }

  private:
    const SyntheticCorpus &corpus_;
    std::atomic<long> calls_{0};
    std::mutex mu_;
    std::map<std::string, int> seen_;
};

} // namespace fixtures
